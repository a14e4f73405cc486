#include <cmath>
#include <cstdio>
#include <limits>

#include "doctest.h"
#include "nok/ops.hpp"
#include "nok/train.hpp"

using namespace nok;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(std::string p) : path(std::move(p)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

std::vector<double> all_params(const Model& model) {
    std::vector<double> out;
    for (const auto& p : model.params().items()) {
        if (p->value.dtype() == Dtype::Real64)
            out.insert(out.end(), p->value.rdata().begin(), p->value.rdata().end());
        else
            for (const cd& z : p->value.cdata()) {
                out.push_back(z.real());
                out.push_back(z.imag());
            }
    }
    return out;
}

Dataset tiny_dataset() {
    GrfSpec spec;
    spec.kmax = 5;
    return generate_dataset(spec, 16, 8, 123);
}

} // namespace

TEST_CASE("adam single step matches the hand-computed update") {
    ParamStore store;
    auto p = store.add("w", Tensor::scalar(1.0));
    AdamConfig cfg;
    cfg.lr = 0.1;
    Adam opt(store, cfg);

    const double g = 0.5;
    Tape tape;
    store.bind(tape);
    Tensor loss = ops::scale(p->use(), g);
    tape.backward(loss);
    opt.step(tape);
    store.unbind();

    const double m = (1 - cfg.beta1) * g, v = (1 - cfg.beta2) * g * g;
    const double mhat = m / (1 - cfg.beta1), vhat = v / (1 - cfg.beta2);
    const double want = 1.0 - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    CHECK(p->value.item() == want);
    CHECK(opt.step_count() == 1);
}

TEST_CASE("adam multi-step trajectory matches the recurrence") {
    ParamStore store;
    auto p = store.add("w", Tensor::scalar(2.0));
    AdamConfig cfg;
    cfg.lr = 0.05;
    cfg.weight_decay = 0.01;
    Adam opt(store, cfg);

    double w = 2.0, m = 0.0, v = 0.0;
    for (int t = 1; t <= 5; ++t) {
        const double g = 0.3; // constant gradient
        Tape tape;
        store.bind(tape);
        tape.backward(ops::scale(p->use(), g));
        opt.step(tape);
        store.unbind();

        m = cfg.beta1 * m + (1 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1 - cfg.beta2) * g * g;
        const double mhat = m / (1 - std::pow(cfg.beta1, t));
        const double vhat = v / (1 - std::pow(cfg.beta2, t));
        w -= cfg.lr * (mhat / (std::sqrt(vhat) + cfg.eps) + cfg.weight_decay * w);
        CHECK(p->value.item() == w);
    }
}

TEST_CASE("adam leaves parameters untouched on zero gradient without decay") {
    ParamStore store;
    auto p = store.add("w", Tensor::from_real({2, 1}, {1.5, -2.5}));
    Adam opt(store, {});
    Tape tape;
    store.bind(tape);
    // loss ignores w: the gradient is exactly zero.
    tape.backward(tape.watch(Tensor::scalar(3.0)));
    (void)p->use();
    opt.step(tape);
    store.unbind();
    CHECK(p->value.rdata() == std::vector<double>{1.5, -2.5});
}

TEST_CASE("adam rejects non-finite gradients by parameter name") {
    ParamStore store;
    auto p = store.add("bad_param", Tensor::scalar(1.0));
    Adam opt(store, {});
    Tape tape;
    store.bind(tape);
    tape.backward(ops::scale(p->use(), std::numeric_limits<double>::quiet_NaN()));
    CHECK_THROWS_WITH_AS(opt.step(tape), doctest::Contains("bad_param"), error);
    store.unbind();
}

TEST_CASE("adam moves complex parameters against the wirtinger gradient") {
    ParamStore store;
    auto p = store.add("z", Tensor::from_complex({1}, {cd(1.0, 1.0)}));
    AdamConfig cfg;
    cfg.lr = 0.01;
    Adam opt(store, cfg);
    Tape tape;
    store.bind(tape);
    // |z|^2 decreases when stepping along -(dL/dRe, dL/dIm).
    tape.backward(ops::reduce_sum(ops::abs2(p->use())));
    opt.step(tape);
    store.unbind();
    CHECK(std::abs(p->value.cdata()[0]) < std::sqrt(2.0));
}

TEST_CASE("multires schedule visits each resolution once per epoch in order") {
    TrainConfig cfg;
    cfg.resolutions = {8, 16};
    auto sched = multires_schedule(cfg);
    REQUIRE(sched.size() == 2);
    CHECK(sched[0] == std::pair<std::int64_t, int>{8, 0});
    CHECK(sched[1] == std::pair<std::int64_t, int>{16, 1});
    cfg.resolutions = {16};
    CHECK(multires_schedule(cfg).size() == 1);
    cfg.resolutions = {};
    CHECK_THROWS_AS((void)multires_schedule(cfg), invalid_argument_error);
}

TEST_CASE("trainer lr schedule halves at the configured period") {
    TrainConfig cfg;
    cfg.lr = 0.4;
    cfg.lr_halve_every = 2;
    cfg.epochs = 6;
    cfg.resolutions = {16};
    ModelConfig mc;
    mc.width = 4;
    mc.modes = 2;
    mc.blocks = 1;
    auto model = make_model(mc, 1);
    Dataset ds = tiny_dataset();
    Trainer tr(*model, ds, cfg);
    CHECK(tr.lr_at(0) == 0.4);
    CHECK(tr.lr_at(1) == 0.4);
    CHECK(tr.lr_at(2) == 0.2);
    CHECK(tr.lr_at(4) == 0.1);
}

TEST_CASE("training reduces the loss on a small problem") {
    Dataset ds = tiny_dataset();
    ModelConfig mc;
    mc.width = 8;
    mc.modes = 4;
    mc.blocks = 1;
    auto model = make_model(mc, 3);
    TrainConfig cfg;
    cfg.epochs = 12;
    cfg.batch_size = 4;
    cfg.lr = 3e-2;
    cfg.lr_halve_every = 0;
    cfg.weight_decay = 0.0;
    cfg.resolutions = {16};
    cfg.seed = 5;
    Trainer tr(*model, ds, cfg);
    const double first = tr.train_epoch(0);
    double last = first;
    for (int e = 1; e < cfg.epochs; ++e) last = tr.train_epoch(e);
    CHECK(last < 0.5 * first);
}

TEST_CASE("training is bitwise deterministic across runs") {
    Dataset ds = tiny_dataset();
    ModelConfig mc;
    mc.width = 4;
    mc.modes = 2;
    mc.blocks = 1;
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 4;
    cfg.resolutions = {16};
    cfg.seed = 9;

    auto run_once = [&] {
        auto model = make_model(mc, 77);
        Trainer tr(*model, ds, cfg);
        tr.run();
        return all_params(*model);
    };
    CHECK(run_once() == run_once());
}

TEST_CASE("stats meta round-trips channel statistics bitwise") {
    ChannelStats in{{0.1234567890123456, -3e-17}, {1.0000000000000002, 0.75}};
    ChannelStats out{{2.5}, {0.3333333333333333}};
    auto meta = Trainer::stats_meta(in, out);
    auto [ri, ro] = Trainer::stats_from_meta(meta);
    CHECK(ri.mu == in.mu);
    CHECK(ri.sigma == in.sigma);
    CHECK(ro.mu == out.mu);
    CHECK(ro.sigma == out.sigma);
}

TEST_CASE("checkpoints restore parameters, optimizer state, and meta") {
    Dataset ds = tiny_dataset();
    ModelConfig mc;
    mc.width = 4;
    mc.modes = 2;
    mc.blocks = 1;
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    cfg.resolutions = {16};
    cfg.seed = 4;
    TempFile ck("test_checkpoint_rt.nopk");
    cfg.checkpoint_path = ck.path;
    cfg.extra_meta = {{"note", "roundtrip"}};

    auto model = make_model(mc, 21);
    Trainer tr(*model, ds, cfg);
    tr.run();
    const auto want = all_params(*model);

    auto fresh = make_model(mc, 999); // different init, fully overwritten by load
    Adam opt(fresh->params(), {});
    auto meta = checkpoint_load(ck.path, *fresh, opt);
    CHECK(all_params(*fresh) == want);
    CHECK(opt.step_count() == tr.optimizer().step_count());
    CHECK(meta.at("note") == "roundtrip");
    CHECK(meta.count("epoch") == 1);

    // restored model reproduces the trained model's outputs bitwise.
    Field probe = subsample(ds.forcing[0], 16 * 16, 0);
    CHECK(model->forward(probe).values.rdata() == fresh->forward(probe).values.rdata());
}

TEST_CASE("checkpoint load rejects mismatched architectures") {
    Dataset ds = tiny_dataset();
    ModelConfig mc;
    mc.width = 4;
    mc.modes = 2;
    mc.blocks = 1;
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 4;
    cfg.resolutions = {16};
    TempFile ck("test_checkpoint_mismatch.nopk");
    cfg.checkpoint_path = ck.path;
    auto model = make_model(mc, 21);
    Trainer tr(*model, ds, cfg);
    tr.run();

    ModelConfig other = mc;
    other.width = 8;
    auto wrong = make_model(other, 21);
    Adam opt(wrong->params(), {});
    CHECK_THROWS_AS((void)checkpoint_load(ck.path, *wrong, opt), io_error);
}

TEST_CASE("resuming from a checkpoint reproduces the uninterrupted trajectory") {
    Dataset ds = tiny_dataset();
    ModelConfig mc;
    mc.width = 4;
    mc.modes = 2;
    mc.blocks = 1;

    TrainConfig full;
    full.epochs = 4;
    full.batch_size = 4;
    full.resolutions = {16};
    full.seed = 31;
    auto a = make_model(mc, 55);
    Trainer ta(*a, ds, full);
    ta.run();

    TrainConfig half = full;
    half.epochs = 2;
    TempFile ck("test_checkpoint_resume.nopk");
    half.checkpoint_path = ck.path;
    auto b = make_model(mc, 55);
    Trainer tb(*b, ds, half);
    tb.run();

    auto c = make_model(mc, 0);
    TrainConfig rest = full;
    Trainer tc(*c, ds, rest);
    (void)checkpoint_load(ck.path, *c, tc.optimizer());
    tc.run(2);

    CHECK(all_params(*c) == all_params(*a));
}

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "nok/config.hpp"
#include "nok/container.hpp"
#include "nok/delaunay.hpp"
#include "nok/eval.hpp"
#include "nok/train.hpp"

namespace fs = std::filesystem;
using namespace nok;

namespace {

constexpr const char* kToolkitVersion = "0.1.0";

std::vector<std::int64_t> parse_int_list(const std::string& s, const std::string& key) {
    std::vector<std::int64_t> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t comma = s.find(',', start);
        const std::string tok = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!tok.empty()) {
            try {
                std::size_t pos = 0;
                out.push_back(std::stoll(tok, &pos));
                if (pos != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw config_error("config: key '" + key + "' holds a malformed integer list");
            }
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw config_error("config: key '" + key + "' holds an empty list");
    return out;
}

std::vector<double> parse_double_list(const std::string& s, const std::string& key) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t comma = s.find(',', start);
        const std::string tok = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!tok.empty()) {
            try {
                std::size_t pos = 0;
                out.push_back(std::stod(tok, &pos));
                if (pos != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw config_error("config: key '" + key + "' holds a malformed number list");
            }
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw config_error("config: key '" + key + "' holds an empty list");
    return out;
}

void write_manifest(const std::string& out_dir, const std::string& command, const std::string& fingerprint,
                    std::uint64_t seed) {
    fs::create_directories(out_dir);
    std::ofstream m(out_dir + "/manifest.txt", std::ios::trunc);
    if (!m) throw io_error("cannot write manifest in '" + out_dir + "'");
    m << "command=" << command << "\n"
      << "config_fingerprint=" << fingerprint << "\n"
      << "seed=" << seed << "\n"
      << "toolkit_version=" << kToolkitVersion << "\n"
      << "container_version=" << kContainerVersion << "\n";
}

ModelConfig model_config_from(const Config& cfg) {
    ModelConfig mc;
    mc.kind = cfg.get_string("model.kind", mc.kind);
    mc.width = cfg.get_int("model.width", mc.width);
    mc.modes = cfg.get_int("model.modes", mc.modes);
    mc.blocks = static_cast<int>(cfg.get_int("model.blocks", mc.blocks));
    mc.pos_frequencies = static_cast<int>(cfg.get_int("model.pos_frequencies", mc.pos_frequencies));
    mc.taps_half_width = static_cast<int>(cfg.get_int("model.taps_half_width", mc.taps_half_width));
    mc.validate();
    return mc;
}

ModelConfig model_config_from_meta(const std::map<std::string, std::string>& meta) {
    ModelConfig mc;
    mc.kind = meta.at("model.kind");
    mc.width = std::stoll(meta.at("model.width"));
    mc.modes = std::stoll(meta.at("model.modes"));
    mc.blocks = static_cast<int>(std::stoll(meta.at("model.blocks")));
    mc.pos_frequencies = static_cast<int>(std::stoll(meta.at("model.pos_frequencies")));
    mc.taps_half_width = static_cast<int>(std::stoll(meta.at("model.taps_half_width")));
    mc.validate();
    return mc;
}

int cmd_gen_data(const Config& cfg, const std::string& out_dir, std::int64_t seed_override) {
    GrfSpec spec;
    spec.sigma = cfg.get_double("data.sigma", spec.sigma);
    spec.tau = cfg.get_double("data.tau", spec.tau);
    spec.alpha = cfg.get_double("data.alpha", spec.alpha);
    spec.kmax = cfg.get_int("data.kmax", spec.kmax);
    const std::int64_t n = cfg.get_int("data.n", 128);
    const std::int64_t count = cfg.get_int("data.count", 512);
    std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("data.seed", 0));
    if (seed_override >= 0) seed = static_cast<std::uint64_t>(seed_override);
    const std::string out = cfg.get_string("data.out", out_dir + "/dataset.nopk");
    cfg.require_consumed();

    write_manifest(out_dir, "gen-data", cfg.fingerprint(), seed);
    Dataset ds = generate_dataset(spec, n, count, seed);
    save_dataset(ds, out);
    std::cout << "gen-data: wrote " << count << " samples at " << n << "x" << n << " to " << out << "\n";
    return 0;
}

int cmd_train(const Config& cfg, const std::string& out_dir, std::int64_t seed_override) {
    const std::string data_path = cfg.get_string("data.path", "");
    if (data_path.empty()) throw config_error("config: key 'data.path' is required for train");
    ModelConfig mc = model_config_from(cfg);

    TrainConfig tc;
    tc.epochs = static_cast<int>(cfg.get_int("train.epochs", tc.epochs));
    tc.batch_size = static_cast<int>(cfg.get_int("train.batch_size", tc.batch_size));
    tc.lr = cfg.get_double("train.lr", tc.lr);
    tc.lr_halve_every = static_cast<int>(cfg.get_int("train.lr_halve_every", tc.lr_halve_every));
    tc.weight_decay = cfg.get_double("train.weight_decay", tc.weight_decay);
    tc.resolutions = parse_int_list(cfg.get_string("train.resolutions", "32"), "train.resolutions");
    tc.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed", 0));
    if (seed_override >= 0) tc.seed = static_cast<std::uint64_t>(seed_override);
    tc.log_path = cfg.get_string("train.log", out_dir + "/train_log.csv");
    tc.checkpoint_path = cfg.get_string("train.checkpoint", out_dir + "/checkpoint.nopk");
    tc.checkpoint_every = static_cast<int>(cfg.get_int("train.checkpoint_every", 0));
    const bool resume = cfg.get_bool("train.resume", false);
    cfg.require_consumed();

    write_manifest(out_dir, "train", cfg.fingerprint(), tc.seed);
    if (!tc.log_path.empty() && !resume) {
        std::ofstream wipe(tc.log_path, std::ios::trunc); // fresh run, fresh log
    }
    Dataset ds = load_dataset(data_path);
    auto model = make_model(mc, tc.seed);
    tc.extra_meta["config_fingerprint"] = cfg.fingerprint();
    Trainer trainer(*model, ds, tc);
    int start_epoch = 0;
    if (resume) {
        if (!fs::exists(tc.checkpoint_path)) throw io_error("train: resume requested but no checkpoint at '" + tc.checkpoint_path + "'");
        auto meta = checkpoint_load(tc.checkpoint_path, *model, trainer.optimizer());
        start_epoch = static_cast<int>(std::stoll(meta.at("epoch")));
    }
    trainer.run(start_epoch);
    std::cout << "train: finished " << tc.epochs << " epochs; checkpoint at " << tc.checkpoint_path << "\n";
    return 0;
}

int cmd_eval_sweep(const Config& cfg, const std::string& out_dir, std::int64_t) {
    const std::string data_path = cfg.get_string("data.path", "");
    const std::string ckpt = cfg.get_string("eval.checkpoint", "");
    if (data_path.empty() || ckpt.empty())
        throw config_error("config: keys 'data.path' and 'eval.checkpoint' are required for eval-sweep");
    auto resolutions = parse_int_list(cfg.get_string("eval.resolutions", "16,32,64,128"), "eval.resolutions");
    const std::string out_csv = cfg.get_string("eval.out", out_dir + "/sweep.csv");
    cfg.require_consumed();

    Container peek = container_read(ckpt);
    ModelConfig mc = model_config_from_meta(peek.meta);
    auto model = make_model(mc, 0);
    Adam opt(model->params(), {});
    auto meta = checkpoint_load(ckpt, *model, opt);
    auto [in_stats, out_stats] = Trainer::stats_from_meta(meta);

    write_manifest(out_dir, "eval-sweep", cfg.fingerprint(), 0);
    Dataset ds = load_dataset(data_path);
    auto rows = resolution_sweep(model_op(*model, in_stats, out_stats), ds, resolutions, mc.kind);
    write_sweep_csv(out_csv, rows);
    for (const auto& r : rows)
        std::printf("eval-sweep: n=%-4lld %-5s rel_l2 %.6g +/- %.6g\n", static_cast<long long>(r.resolution),
                    r.model.c_str(), r.rel_l2_mean, r.rel_l2_std);
    return 0;
}

Field band_limited_sample(const DiscPtr& disc) {
    constexpr double kPi = 3.14159265358979323846;
    const auto& pts = disc->points.rdata();
    const int d = static_cast<int>(disc->points.dim(1));
    std::vector<double> v(static_cast<std::size_t>(disc->size()));
    for (std::int64_t i = 0; i < disc->size(); ++i) {
        const double x = pts[static_cast<std::size_t>(i * d)];
        v[static_cast<std::size_t>(i)] = std::sin(2.0 * kPi * x) + 0.5 * std::cos(4.0 * kPi * x);
    }
    Field f;
    f.disc = disc;
    f.values = Tensor::from_real({disc->size(), 1}, std::move(v));
    return f;
}

/// Nested 1-d cloud chain with a density skewed toward x=0 (points x = u^2).
RefinementChain skewed_cloud_chain(std::int64_t n0, int levels, std::uint64_t seed) {
    Rng rng(seed);
    RefinementChain chain;
    std::vector<double> xs;
    const Domain dom = Domain::torus1d();
    for (int k = 0; k < levels; ++k) {
        const std::int64_t target = n0 << k;
        while (static_cast<std::int64_t>(xs.size()) < target) {
            const double u = rng.uniform();
            xs.push_back(u * u);
        }
        // midpoint weights computed on the sorted copy, mapped back
        std::vector<std::size_t> idx(xs.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
        std::vector<double> sorted(xs.size());
        for (std::size_t i = 0; i < idx.size(); ++i) sorted[i] = xs[idx[i]];
        auto wsorted = riemann_weights_1d(sorted, dom);
        std::vector<double> w(xs.size());
        for (std::size_t i = 0; i < idx.size(); ++i) w[idx[i]] = wsorted[i];
        chain.levels.push_back(make_disc(dom, Tensor::from_real({target, 1}, std::vector<double>(xs)), std::move(w)));
    }
    return chain;
}

int cmd_drift_test(const Config& cfg, const std::string& out_dir, std::int64_t seed_override) {
    const std::string layer = cfg.get_string("drift.layer", "integral_transform");
    const std::int64_t n0 = cfg.get_int("drift.n0", 16);
    const int levels = static_cast<int>(cfg.get_int("drift.levels", 5));
    std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("drift.seed", 0));
    if (seed_override >= 0) seed = static_cast<std::uint64_t>(seed_override);
    const std::string out_csv = cfg.get_string("drift.out", out_dir + "/drift.csv");
    cfg.require_consumed();
    if (levels < 2) throw config_error("config: 'drift.levels' must be at least 2");

    write_manifest(out_dir, "drift-test", cfg.fingerprint(), seed);

    RefinementChain chain;
    if (layer == "knn") {
        chain = skewed_cloud_chain(n0, levels, seed + 1);
    } else {
        for (int k = 0; k < levels; ++k) chain.levels.push_back(uniform_grid(Domain::torus1d(), n0 << k));
    }

    ParamStore store;
    Rng rng(seed);
    FieldOp op;
    if (layer == "integral_transform") {
        auto l = std::make_shared<IntegralTransform>("gno", 1, 1, IntegralTransform::Options{}, store, rng);
        op = [l](const Field& f) { return l->forward(f); };
    } else if (layer == "spectral_conv") {
        auto l = std::make_shared<SpectralConv>("sc", 1, 1, 1, 4, store, rng);
        op = [l](const Field& f) { return l->forward(f); };
    } else if (layer == "attention") {
        auto l = std::make_shared<AttentionLayer>("att", 1, 8, 1, store, rng);
        op = [l](const Field& f) { return l->forward(f); };
    } else if (layer == "encdec") {
        EncDecLayer::Options eo;
        eo.latent = 16;
        auto l = std::make_shared<EncDecLayer>("ed", 1, 1, eo, store, rng);
        op = [l](const Field& f) { return l->forward(f, f.disc); };
    } else if (layer == "pointwise") {
        auto l = std::make_shared<PointwiseLayer>("pw", std::vector<std::int64_t>{1, 8, 1}, store, rng);
        op = [l](const Field& f) { return l->forward(f); };
    } else if (layer == "knn") {
        auto l = std::make_shared<KnnGnnLayer>("knn", 1, 3, std::vector<std::int64_t>{8}, store, rng);
        op = [l](const Field& f) { return l->forward(f); };
    } else {
        throw config_error("config: unknown 'drift.layer' value '" + layer + "'");
    }

    auto report = discretization_convergence_test(op, band_limited_sample, chain);
    write_drift_csv(out_csv, report.rows);
    for (const auto& r : report.rows)
        std::printf("drift-test: %s level %d (n=%lld) drift %.6g\n", layer.c_str(), r.level,
                    static_cast<long long>(r.n), r.drift_l2);
    std::printf("drift-test: nonincreasing(10%% slack) = %s\n", report.nonincreasing() ? "yes" : "no");
    return 0;
}

int cmd_collapse_demo(const Config& cfg, const std::string& out_dir, std::int64_t) {
    auto taps = parse_double_list(cfg.get_string("collapse.taps", "0.25,0.5,0.25"), "collapse.taps");
    const double radius = cfg.get_double("collapse.radius", 0.25);
    auto resolutions = parse_int_list(cfg.get_string("collapse.resolutions", "16,32,64,128,256,512"),
                                      "collapse.resolutions");
    cfg.require_consumed();

    write_manifest(out_dir, "collapse-demo", cfg.fingerprint(), 0);
    auto report = receptive_field_collapse_demo(taps, radius, resolutions);
    write_drift_csv(out_dir + "/collapse_stencil.csv", report.stencil_gap);
    write_drift_csv(out_dir + "/collapse_operator.csv", report.operator_gap);
    for (std::size_t i = 0; i < report.stencil_gap.size(); ++i)
        std::printf("collapse-demo: n=%-4lld stencil->pointwise gap %.6g, operator->analytic gap %.6g\n",
                    static_cast<long long>(report.stencil_gap[i].n), report.stencil_gap[i].drift_l2,
                    report.operator_gap[i].drift_l2);
    std::printf("collapse-demo: limit separation %.6g\n", report.limit_separation);
    return 0;
}

int cmd_quad_check() {
    const std::vector<double> pts{0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0};
    Tensor corners = Tensor::from_real({4, 2}, std::vector<double>(pts));
    auto w = delaunay_weights_2d(corners);
    std::printf("quad-check: delaunay unit-square corner weights = {%.12g, %.12g, %.12g, %.12g}\n", w[0], w[1],
                w[2], w[3]);
    double sum = w[0] + w[1] + w[2] + w[3];
    std::printf("quad-check: weight sum = %.12g (hull area 1)\n", sum);

    auto grid = uniform_grid(Domain::torus1d(), 16);
    double gsum = 0.0;
    for (double x : grid->weights) gsum += x;
    std::printf("quad-check: torus1d n=16 riemann weight sum = %.12g\n", gsum);
    const bool ok = std::fabs(sum - 1.0) < 1e-12 && std::fabs(gsum - 1.0) < 1e-12;
    return ok ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nok: neural-operator toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "runs";
    std::int64_t seed_override = -1;
    for (auto* name : {"gen-data", "train", "eval-sweep", "drift-test", "collapse-demo"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "config file (flat key = value text)")->required();
        sub->add_option("--out", out_dir, "run directory for outputs and the manifest");
        sub->add_option("--seed", seed_override, "overrides the seed from the config");
    }
    app.add_subcommand("quad-check", "print quadrature oracles");

    CLI11_PARSE(app, argc, argv);

    try {
        auto* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "quad-check") return cmd_quad_check();
        Config cfg = Config::parse_file(config_path);
        if (name == "gen-data") return cmd_gen_data(cfg, out_dir, seed_override);
        if (name == "train") return cmd_train(cfg, out_dir, seed_override);
        if (name == "eval-sweep") return cmd_eval_sweep(cfg, out_dir, seed_override);
        if (name == "drift-test") return cmd_drift_test(cfg, out_dir, seed_override);
        if (name == "collapse-demo") return cmd_collapse_demo(cfg, out_dir, seed_override);
        std::cerr << "unknown subcommand\n";
        return 1;
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const invalid_argument_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

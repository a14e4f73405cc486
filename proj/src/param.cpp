#include "nok/param.hpp"

#include <algorithm>
#include <cmath>

namespace nok {

ParamPtr ParamStore::add(std::string name, Tensor value) {
    if (find(name)) throw invalid_argument_error("duplicate parameter name: " + name);
    auto p = std::make_shared<Param>();
    p->name = std::move(name);
    p->value = std::move(value);
    items_.push_back(p);
    return items_.back();
}

ParamPtr ParamStore::find(const std::string& name) const {
    for (const auto& p : items_)
        if (p->name == name) return p;
    return nullptr;
}

void ParamStore::bind(Tape& tape) {
    for (auto& p : items_) p->live = tape.watch(p->value);
}

void ParamStore::unbind() {
    for (auto& p : items_) p->live = Tensor();
}

std::int64_t ParamStore::count_scalars() const {
    std::int64_t n = 0;
    for (const auto& p : items_) n += p->value.numel() * (p->value.is_complex() ? 2 : 1);
    return n;
}

Tensor init_linear(Shape shape, std::int64_t fan_in, Rng& rng) {
    const double b = std::sqrt(1.0 / static_cast<double>(fan_in));
    std::vector<double> data(static_cast<std::size_t>(shape_numel(shape)));
    for (auto& v : data) v = (2.0 * rng.uniform() - 1.0) * b;
    return Tensor::from_real(std::move(shape), std::move(data));
}

Tensor init_spectral(Shape shape, std::int64_t fan_in, Rng& rng) {
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<cd> data(static_cast<std::size_t>(shape_numel(shape)));
    for (auto& v : data) v = cd(rng.normal() * s, rng.normal() * s);
    return Tensor::from_complex(std::move(shape), std::move(data));
}

namespace {

double eval_loss(const std::function<Tensor(Tape&)>& loss_fn, ParamStore& store) {
    Tape tape;
    store.bind(tape);
    double v = loss_fn(tape).item();
    store.unbind();
    return v;
}

} // namespace

double grad_check(const std::function<Tensor(Tape&)>& loss_fn, ParamStore& store, double step,
                  int max_coords_per_param, Rng* rng) {
    // analytic gradients first
    std::vector<Tensor> grads;
    {
        Tape tape;
        store.bind(tape);
        Tensor loss = loss_fn(tape);
        tape.backward(loss);
        for (const auto& p : store.items()) grads.push_back(tape.grad(p->live));
        store.unbind();
    }

    double max_rel = 0.0;
    for (std::size_t pi = 0; pi < store.items().size(); ++pi) {
        auto& p = store.items()[pi];
        const Tensor saved = p->value;
        const std::int64_t comps = p->value.numel() * (p->value.is_complex() ? 2 : 1);
        std::vector<std::int64_t> coords;
        if (max_coords_per_param > 0 && comps > max_coords_per_param) {
            if (!rng) throw invalid_argument_error("grad_check: coordinate subsampling needs an rng");
            for (int i = 0; i < max_coords_per_param; ++i)
                coords.push_back(static_cast<std::int64_t>(rng->below(static_cast<std::uint64_t>(comps))));
        } else {
            coords.resize(static_cast<std::size_t>(comps));
            for (std::int64_t i = 0; i < comps; ++i) coords[static_cast<std::size_t>(i)] = i;
        }
        for (auto comp : coords) {
            auto perturbed = [&](double delta) {
                if (saved.is_real()) {
                    std::vector<double> buf(saved.rdata());
                    buf[static_cast<std::size_t>(comp)] += delta;
                    return Tensor::from_real(saved.shape(), std::move(buf));
                }
                std::vector<cd> buf(saved.cdata());
                auto& z = buf[static_cast<std::size_t>(comp / 2)];
                z += (comp % 2 == 0) ? cd(delta, 0.0) : cd(0.0, delta);
                return Tensor::from_complex(saved.shape(), std::move(buf));
            };
            p->value = perturbed(step);
            const double lp = eval_loss(loss_fn, store);
            p->value = perturbed(-step);
            const double lm = eval_loss(loss_fn, store);
            p->value = saved;
            const double fd = (lp - lm) / (2.0 * step);
            double ad;
            if (saved.is_real()) {
                ad = grads[pi].rdata()[static_cast<std::size_t>(comp)];
            } else {
                const cd z = grads[pi].cdata()[static_cast<std::size_t>(comp / 2)];
                ad = comp % 2 == 0 ? z.real() : z.imag();
            }
            // flat directions measure as FD cancellation noise; below the
            // noise floor the disagreement carries no signal
            const double diff = std::abs(ad - fd);
            const double rel = diff <= 1e-7 ? 0.0 : diff / (std::abs(ad) + std::abs(fd) + 1e-10);
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

} // namespace nok

#include "nok/optim.hpp"

#include <cmath>

#include "nok/container.hpp"

namespace nok {

Adam::Adam(ParamStore& store, AdamConfig cfg) : store_(store), cfg_(cfg) {
    if (cfg_.lr <= 0.0 || cfg_.eps <= 0.0) throw invalid_argument_error("adam: lr and eps must be positive");
    if (cfg_.beta1 < 0.0 || cfg_.beta1 >= 1.0 || cfg_.beta2 < 0.0 || cfg_.beta2 >= 1.0)
        throw invalid_argument_error("adam: betas must lie in [0, 1)");
    if (cfg_.weight_decay < 0.0) throw invalid_argument_error("adam: weight_decay must be nonnegative");
    for (const auto& p : store_.items()) {
        Slot s;
        s.m = Tensor::zeros(p->value.shape(), p->value.dtype());
        s.v.assign(static_cast<std::size_t>(p->value.numel()), 0.0);
        slots_.push_back(std::move(s));
    }
}

void Adam::step(Tape& tape, double lr_override) {
    const double lr = lr_override < 0.0 ? cfg_.lr : lr_override;
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const auto& items = store_.items();
    for (std::size_t pi = 0; pi < items.size(); ++pi) {
        Param& p = *items[pi];
        if (!p.live.defined() || !p.live.tracked())
            throw graph_error("adam: parameter '" + p.name + "' was not bound to the tape");
        Tensor g = tape.grad(p.live);
        Slot& s = slots_[pi];
        const std::size_t n = static_cast<std::size_t>(p.value.numel());
        if (p.value.is_real()) {
            std::vector<double> m(n), val(p.value.rdata());
            const auto& mold = s.m.rdata();
            const auto& gd = g.rdata();
            for (std::size_t i = 0; i < n; ++i) {
                if (!std::isfinite(gd[i]))
                    throw error("adam: non-finite gradient for parameter '" + p.name + "'");
                m[i] = cfg_.beta1 * mold[i] + (1.0 - cfg_.beta1) * gd[i];
                s.v[i] = cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * gd[i] * gd[i];
                const double upd = (m[i] / bc1) / (std::sqrt(s.v[i] / bc2) + cfg_.eps);
                val[i] -= lr * (upd + cfg_.weight_decay * val[i]);
            }
            s.m = Tensor::from_real(p.value.shape(), std::move(m));
            p.value = Tensor::from_real(p.value.shape(), std::move(val));
        } else {
            std::vector<cd> m(n), val(p.value.cdata());
            const auto& mold = s.m.cdata();
            const auto& gd = g.cdata();
            for (std::size_t i = 0; i < n; ++i) {
                if (!std::isfinite(gd[i].real()) || !std::isfinite(gd[i].imag()))
                    throw error("adam: non-finite gradient for parameter '" + p.name + "'");
                m[i] = cfg_.beta1 * mold[i] + (1.0 - cfg_.beta1) * gd[i];
                s.v[i] = cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * std::norm(gd[i]);
                const cd upd = (m[i] / bc1) / (std::sqrt(s.v[i] / bc2) + cfg_.eps);
                val[i] -= lr * (upd + cfg_.weight_decay * val[i]);
            }
            s.m = Tensor::from_complex(p.value.shape(), std::move(m));
            p.value = Tensor::from_complex(p.value.shape(), std::move(val));
        }
    }
}

void Adam::restore(std::int64_t step_count, std::vector<Slot> slots) {
    if (slots.size() != slots_.size()) throw invalid_argument_error("adam: restore slot count mismatch");
    t_ = step_count;
    slots_ = std::move(slots);
}

void checkpoint_save(const std::string& path, const Model& model, const Adam& opt,
                     const std::map<std::string, std::string>& extra_meta) {
    std::vector<ContainerEntry> entries;
    const auto& items = model.params().items();
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& p = *items[i];
        entries.push_back({"param/" + p.name, p.value});
        entries.push_back({"adam_m/" + p.name, opt.slots()[i].m});
        std::vector<double> v = opt.slots()[i].v;
        const std::int64_t vn = static_cast<std::int64_t>(v.size());
        entries.push_back({"adam_v/" + p.name, Tensor::from_real({vn}, std::move(v))});
    }
    std::map<std::string, std::string> meta = extra_meta;
    meta["step"] = std::to_string(opt.step_count());
    const auto& mc = model.config();
    meta["model.kind"] = mc.kind;
    meta["model.width"] = std::to_string(mc.width);
    meta["model.modes"] = std::to_string(mc.modes);
    meta["model.blocks"] = std::to_string(mc.blocks);
    meta["model.pos_frequencies"] = std::to_string(mc.pos_frequencies);
    meta["model.taps_half_width"] = std::to_string(mc.taps_half_width);
    container_write(path, entries, meta);
}

std::map<std::string, std::string> checkpoint_load(const std::string& path, Model& model, Adam& opt) {
    Container c = container_read(path);
    std::vector<Adam::Slot> slots;
    for (const auto& p : model.params().items()) {
        const Tensor& val = c.get("param/" + p->name);
        if (val.shape() != p->value.shape() || val.dtype() != p->value.dtype())
            throw io_error("checkpoint: shape/dtype mismatch for parameter '" + p->name + "'");
        p->value = val;
        Adam::Slot s;
        s.m = c.get("adam_m/" + p->name);
        if (s.m.shape() != val.shape() || s.m.dtype() != val.dtype())
            throw io_error("checkpoint: moment mismatch for parameter '" + p->name + "'");
        s.v = c.get("adam_v/" + p->name).rdata();
        if (s.v.size() != static_cast<std::size_t>(val.numel()))
            throw io_error("checkpoint: second-moment size mismatch for parameter '" + p->name + "'");
        slots.push_back(std::move(s));
    }
    opt.restore(std::stoll(c.meta.at("step")), std::move(slots));
    return c.meta;
}

} // namespace nok

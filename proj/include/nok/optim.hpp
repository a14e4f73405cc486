#pragma once

#include <map>
#include <string>

#include "nok/model.hpp"

namespace nok {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0; // decoupled (applied to the value, not the gradient)
};

/// Adam over a ParamStore. Complex parameters keep a complex first moment
/// and a real second moment E[|g|^2] per complex entry, so a step moves both
/// components with one shared scale.
class Adam {
public:
    Adam(ParamStore& store, AdamConfig cfg);

    /// Applies one update from gradients already populated on `tape`
    /// (i.e. after tape.backward). `lr_override` < 0 keeps cfg.lr.
    void step(Tape& tape, double lr_override = -1.0);

    std::int64_t step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

    // checkpoint plumbing
    struct Slot {
        Tensor m;              // same dtype/shape as the parameter
        std::vector<double> v; // one entry per (complex) element
    };
    const std::vector<Slot>& slots() const { return slots_; }
    void restore(std::int64_t step_count, std::vector<Slot> slots);

private:
    ParamStore& store_;
    AdamConfig cfg_;
    std::int64_t t_ = 0;
    std::vector<Slot> slots_; // aligned with store_.items()
};

/// Bitwise-exact training state: parameters, Adam moments, step counter and
/// caller-provided string metadata.
void checkpoint_save(const std::string& path, const Model& model, const Adam& opt,
                     const std::map<std::string, std::string>& extra_meta = {});

/// Restores parameters and optimizer state in place; names, shapes and
/// dtypes must match the live model. Returns the checkpoint meta map.
std::map<std::string, std::string> checkpoint_load(const std::string& path, Model& model, Adam& opt);

} // namespace nok

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nok/rng.hpp"
#include "nok/tensor.hpp"

namespace nok {

/// One trainable tensor. `value` is the persistent state; `live` is the
/// tape-tracked view installed by ParamStore::bind for the current forward
/// pass (undefined outside a pass).
struct Param {
    std::string name;
    Tensor value;
    Tensor live;

    const Tensor& use() const { return live.defined() ? live : value; }
};

using ParamPtr = std::shared_ptr<Param>;

class ParamStore {
public:
    ParamPtr add(std::string name, Tensor value);
    const std::vector<ParamPtr>& items() const { return items_; }
    ParamPtr find(const std::string& name) const;

    /// Tracks every parameter on `tape` (to be called once per forward pass).
    void bind(Tape& tape);
    void unbind();

    /// Number of trainable scalars (complex entries count twice).
    std::int64_t count_scalars() const;

private:
    std::vector<ParamPtr> items_;
};

// ---- initializers ----

/// U(-b, b) with b = sqrt(1 / fan_in); the usual dense-layer default.
Tensor init_linear(Shape shape, std::int64_t fan_in, Rng& rng);

/// Centered complex Gaussian entries with std 1/sqrt(fan_in) per component.
Tensor init_spectral(Shape shape, std::int64_t fan_in, Rng& rng);

/// Verifies reverse-mode gradients of a scalar loss against central finite
/// differences. `loss_fn` must rebuild the graph on the given tape each call
/// (the store is already bound). Checks every coordinate unless
/// `max_coords_per_param` limits it (subsampled with `rng`). Returns the
/// maximum relative error max |ad-fd| / (|ad|+|fd|+1e-10).
double grad_check(const std::function<Tensor(Tape&)>& loss_fn, ParamStore& store, double step = 1e-5,
                  int max_coords_per_param = -1, Rng* rng = nullptr);

} // namespace nok

#pragma once

#include <string>
#include <vector>

#include "nok/param.hpp"

namespace nok {

/// Dense MLP with gelu between layers (none after the last). Used for kernel
/// networks, lifting/projection maps, message nets, and NOMAD decoders. The
/// parameter count is fixed by `widths` and independent of any discretization.
class Mlp {
public:
    /// widths = {in, hidden..., out}; parameters are registered in `store`
    /// under `prefix`.
    Mlp(const std::string& prefix, std::vector<std::int64_t> widths, ParamStore& store, Rng& rng);

    /// [n, in] -> [n, out]
    Tensor forward(const Tensor& x) const;

    std::int64_t in_dim() const { return widths_.front(); }
    std::int64_t out_dim() const { return widths_.back(); }
    const std::vector<ParamPtr>& weights() const { return ws_; }
    const std::vector<ParamPtr>& biases() const { return bs_; }

private:
    std::vector<std::int64_t> widths_;
    std::vector<ParamPtr> ws_; // [in, out] each
    std::vector<ParamPtr> bs_; // [1, out] each
};

} // namespace nok

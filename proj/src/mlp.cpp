#include "nok/mlp.hpp"

#include "nok/ops.hpp"

namespace nok {

Mlp::Mlp(const std::string& prefix, std::vector<std::int64_t> widths, ParamStore& store, Rng& rng)
    : widths_(std::move(widths)) {
    if (widths_.size() < 2) throw invalid_argument_error("mlp: need at least input and output widths");
    for (auto w : widths_)
        if (w < 1) throw invalid_argument_error("mlp: widths must be positive");
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        const std::int64_t fan_in = widths_[l], fan_out = widths_[l + 1];
        ws_.push_back(store.add(prefix + ".w" + std::to_string(l), init_linear({fan_in, fan_out}, fan_in, rng)));
        bs_.push_back(store.add(prefix + ".b" + std::to_string(l), init_linear({1, fan_out}, fan_in, rng)));
    }
}

Tensor Mlp::forward(const Tensor& x) const {
    if (x.rank() != 2 || x.dim(1) != in_dim())
        throw shape_error("mlp: expected [n, " + std::to_string(in_dim()) + "] input, got " + shape_str(x.shape()));
    Tensor h = x;
    for (std::size_t l = 0; l < ws_.size(); ++l) {
        h = ops::add(ops::matmul(h, ws_[l]->use()), bs_[l]->use());
        if (l + 1 < ws_.size()) h = ops::gelu(h);
    }
    return h;
}

} // namespace nok

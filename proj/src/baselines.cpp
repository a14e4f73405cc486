#include "nok/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nok/ops.hpp"

namespace nok {

namespace {

std::int64_t grid_side(const Discretization& disc) {
    if (!disc.is_grid()) throw invalid_argument_error("baseline conv requires a grid discretization");
    for (std::size_t a = 1; a < disc.grid_shape.size(); ++a)
        if (disc.grid_shape[a] != disc.grid_shape[0]) throw invalid_argument_error("grid sides must be equal");
    return disc.grid_shape[0];
}

} // namespace

// ---------------------------------------------------------- DiscreteConvLayer

DiscreteConvLayer::DiscreteConvLayer(const std::string& prefix, int coord_dim, int half_width,
                                     ParamStore& store, Rng& rng)
    : dim_(coord_dim), k_(half_width) {
    if (coord_dim != 1 && coord_dim != 2) throw unsupported_domain_error("discrete_conv: 1-d or 2-d");
    const std::int64_t side = 2 * static_cast<std::int64_t>(half_width) + 1;
    const std::int64_t taps = coord_dim == 1 ? side : side * side;
    taps_ = store.add(prefix + ".taps", init_linear({taps, 1}, taps, rng));
}

DiscreteConvLayer::DiscreteConvLayer(ParamPtr taps, int coord_dim) : dim_(coord_dim) {
    const std::int64_t count = taps->value.dim(0);
    const auto side = coord_dim == 1 ? count : static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(count))));
    if (coord_dim == 2 && side * side != count) throw shape_error("discrete_conv: taps must form a square stencil");
    if (side % 2 == 0) throw invalid_argument_error("discrete_conv: stencil side must be odd");
    k_ = static_cast<int>((side - 1) / 2);
    taps_ = std::move(taps);
}

Field DiscreteConvLayer::forward(const Field& field) const {
    field.validate();
    const auto& disc = *field.disc;
    if (disc.domain.dim() != dim_) throw shape_error("discrete_conv: domain dimension mismatch");
    const std::int64_t n = grid_side(disc);
    const Tensor taps = taps_->use();
    const std::int64_t side = 2 * static_cast<std::int64_t>(k_) + 1;

    Tensor g;
    auto accumulate = [&](std::int64_t tap_row, const std::vector<std::int64_t>& idx) {
        Tensor coef = ops::reshape(ops::slice(taps, 0, tap_row, 1), {1, 1});
        Tensor term = ops::mul(ops::take_rows(field.values, idx), coef);
        g = g.defined() ? ops::add(g, term) : term;
    };
    if (dim_ == 1) {
        for (std::int64_t t = -k_; t <= k_; ++t) {
            std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
            for (std::int64_t j = 0; j < n; ++j) idx[static_cast<std::size_t>(j)] = ((j - t) % n + n) % n;
            accumulate(t + k_, idx);
        }
    } else {
        for (std::int64_t t0 = -k_; t0 <= k_; ++t0)
            for (std::int64_t t1 = -k_; t1 <= k_; ++t1) {
                std::vector<std::int64_t> idx(static_cast<std::size_t>(n * n));
                for (std::int64_t j0 = 0; j0 < n; ++j0)
                    for (std::int64_t j1 = 0; j1 < n; ++j1)
                        idx[static_cast<std::size_t>(j0 * n + j1)] =
                            (((j0 - t0) % n + n) % n) * n + ((j1 - t1) % n + n) % n;
                accumulate((t0 + k_) * side + (t1 + k_), idx);
            }
    }
    Field out;
    out.disc = field.disc;
    out.values = g;
    return out;
}

// ------------------------------------------------------------- ConvBlock2d

ConvBlock2d::ConvBlock2d(const std::string& prefix, std::int64_t channels, int half_width,
                         std::vector<std::int64_t> mlp_hidden, ParamStore& store, Rng& rng, bool use_gelu)
    : c_(channels), k_(half_width),
      pointwise_(prefix + ".mlp",
                 [&] {
                     std::vector<std::int64_t> w{channels};
                     w.insert(w.end(), mlp_hidden.begin(), mlp_hidden.end());
                     w.push_back(channels);
                     return w;
                 }(),
                 store, rng),
      use_gelu_(use_gelu) {
    const std::int64_t side = 2 * static_cast<std::int64_t>(half_width) + 1;
    taps_ = store.add(prefix + ".taps",
                      init_linear({side * side, channels, channels}, side * side * channels, rng));
    skip_w_ = store.add(prefix + ".skip_w", init_linear({channels, channels}, channels, rng));
    skip_b_ = store.add(prefix + ".skip_b", init_linear({1, channels}, channels, rng));
}

Tensor ConvBlock2d::conv_fft(const Tensor& values, std::int64_t n) const {
    const std::int64_t side = 2 * static_cast<std::int64_t>(k_) + 1;
    // place each tap at grid cell (t mod n); collisions alias exactly like the
    // circulant stencil does
    std::vector<std::int64_t> cell(static_cast<std::size_t>(side * side));
    for (std::int64_t t0 = -k_; t0 <= k_; ++t0)
        for (std::int64_t t1 = -k_; t1 <= k_; ++t1)
            cell[static_cast<std::size_t>((t0 + k_) * side + (t1 + k_))] =
                ((t0 % n + n) % n) * n + (t1 % n + n) % n;
    Tensor kflat = ops::reshape(taps_->use(), {side * side, c_ * c_});
    Tensor kgrid = ops::scatter_rows(kflat, cell, n * n);
    Tensor khat = ops::rfft2(kgrid, n, n);
    Tensor fhat = ops::rfft2(values, n, n);
    const std::int64_t rows = n * (n / 2 + 1);
    Tensor mixed = ops::mode_contract(ops::reshape(fhat, {rows, c_}),
                                      ops::reshape(khat, {rows, c_, c_}));
    return ops::irfft2(ops::reshape(mixed, {n, n / 2 + 1, c_}));
}

Tensor ConvBlock2d::conv_direct(const Tensor& values, std::int64_t n) const {
    const std::int64_t side = 2 * static_cast<std::int64_t>(k_) + 1;
    const Tensor taps = taps_->use();
    Tensor g;
    for (std::int64_t t0 = -k_; t0 <= k_; ++t0)
        for (std::int64_t t1 = -k_; t1 <= k_; ++t1) {
            std::vector<std::int64_t> idx(static_cast<std::size_t>(n * n));
            for (std::int64_t j0 = 0; j0 < n; ++j0)
                for (std::int64_t j1 = 0; j1 < n; ++j1)
                    idx[static_cast<std::size_t>(j0 * n + j1)] =
                        (((j0 - t0) % n + n) % n) * n + ((j1 - t1) % n + n) % n;
            Tensor w = ops::reshape(ops::slice(taps, 0, (t0 + k_) * side + (t1 + k_), 1), {c_, c_});
            Tensor term = ops::matmul(ops::take_rows(values, idx), w);
            g = g.defined() ? ops::add(g, term) : term;
        }
    return g;
}

Field ConvBlock2d::forward(const Field& field) const {
    field.validate();
    if (field.values.dim(1) != c_) throw shape_error("conv_block: channel mismatch");
    const std::int64_t n = grid_side(*field.disc);
    Tensor conv = conv_fft(field.values, n);
    Tensor skip = ops::add(ops::matmul(field.values, skip_w_->use()), skip_b_->use());
    Tensor h = ops::add(conv, skip);
    if (use_gelu_) h = ops::gelu(h);
    Field out;
    out.disc = field.disc;
    out.values = pointwise_.forward(h);
    return out;
}

// -------------------------------------------------------------- KnnGnnLayer

KnnGnnLayer::KnnGnnLayer(const std::string& prefix, std::int64_t channels, int k_neighbors,
                         std::vector<std::int64_t> hidden, ParamStore& store, Rng& rng)
    : c_(channels), k_(k_neighbors),
      message_(prefix + ".message",
               [&] {
                   std::vector<std::int64_t> w{2 * channels};
                   w.insert(w.end(), hidden.begin(), hidden.end());
                   w.push_back(channels);
                   return w;
               }(),
               store, rng) {
    if (k_neighbors < 1) throw invalid_argument_error("knn_gnn: k must be positive");
}

Field KnnGnnLayer::forward(const Field& field) const {
    field.validate();
    if (field.values.dim(1) != c_) throw shape_error("knn_gnn: channel mismatch");
    const auto& disc = *field.disc;
    const std::int64_t n = disc.size();
    if (k_ > n) throw invalid_argument_error("knn_gnn: k exceeds point count");
    const int d = disc.domain.dim();
    const auto& pts = disc.points.rdata();

    std::vector<std::int64_t> src, dst;
    std::vector<std::pair<double, std::int64_t>> cand(static_cast<std::size_t>(n));
    for (std::int64_t j = 0; j < n; ++j) {
        for (std::int64_t i = 0; i < n; ++i) {
            double d2 = 0.0;
            for (int a = 0; a < d; ++a) {
                double dx = std::abs(pts[static_cast<std::size_t>(j * d + a)] - pts[static_cast<std::size_t>(i * d + a)]);
                if (disc.domain.periodic()) {
                    const double L = disc.domain.length(a);
                    dx = std::min(dx, L - dx);
                }
                d2 += dx * dx;
            }
            cand[static_cast<std::size_t>(i)] = {d2, i};
        }
        std::partial_sort(cand.begin(), cand.begin() + k_, cand.end());
        for (int t = 0; t < k_; ++t) {
            src.push_back(cand[static_cast<std::size_t>(t)].second);
            dst.push_back(j);
        }
    }
    Tensor fin = ops::concat({ops::take_rows(field.values, src), ops::take_rows(field.values, dst)}, 1);
    Tensor msgs = message_.forward(fin);
    Field out;
    out.disc = field.disc;
    out.values = ops::scale(ops::scatter_rows(msgs, dst, n), 1.0 / static_cast<double>(k_));
    return out;
}

} // namespace nok

#include "nok/layers.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "nok/ops.hpp"

namespace nok {

namespace {

constexpr double kPi = 3.14159265358979323846;

Tensor weight_column(const Discretization& disc) {
    std::vector<double> w(disc.weights);
    return Tensor::from_real({disc.size(), 1}, std::move(w));
}

/// Squared distance with periodic wrap on torus domains.
double metric_dist2(const Domain& dom, const double* a, const double* b) {
    double d2 = 0.0;
    for (int ax = 0; ax < dom.dim(); ++ax) {
        double dx = std::abs(a[ax] - b[ax]);
        if (dom.periodic()) {
            const double L = dom.length(ax);
            dx = std::min(dx, L - dx);
        }
        d2 += dx * dx;
    }
    return d2;
}

std::int64_t grid_points_per_axis(const Discretization& disc) {
    if (!disc.is_grid()) throw invalid_argument_error("layer requires a grid discretization");
    for (std::size_t a = 1; a < disc.grid_shape.size(); ++a)
        if (disc.grid_shape[a] != disc.grid_shape[0])
            throw invalid_argument_error("layer requires equal grid sides");
    return disc.grid_shape[0];
}

} // namespace

Tensor positional_encoding(const Tensor& coords, int num_frequencies) {
    if (coords.rank() != 2) throw shape_error("positional_encoding: [n, d] coordinates expected");
    if (num_frequencies < 1) throw invalid_argument_error("positional_encoding: need at least one frequency");
    const std::int64_t n = coords.dim(0), d = coords.dim(1);
    const std::int64_t F = num_frequencies;
    const auto& cv = coords.rdata();
    std::vector<double> out(static_cast<std::size_t>(n * 2 * F * d));
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t a = 0; a < d; ++a) {
            const double x = cv[static_cast<std::size_t>(i * d + a)];
            for (std::int64_t k = 0; k < F; ++k) {
                const double angle = std::ldexp(kPi * x, static_cast<int>(k)); // 2^k * pi * x
                const std::int64_t base = i * 2 * F * d + a * 2 * F;
                out[static_cast<std::size_t>(base + k)] = std::sin(angle);
                out[static_cast<std::size_t>(base + F + k)] = std::cos(angle);
            }
        }
    return Tensor::from_real({n, 2 * F * d}, std::move(out));
}

Field concat_to_field(const Field& field, const Tensor& features) {
    field.validate();
    if (features.dim(0) != field.values.dim(0))
        throw shape_error("concat_to_field: row counts disagree");
    Field out;
    out.disc = field.disc;
    out.values = ops::concat({field.values, features}, 1);
    return out;
}

Field PointwiseLayer::forward(const Field& field) const {
    field.validate();
    Field out;
    out.disc = field.disc;
    out.values = net_.forward(field.values);
    return out;
}

// ---------------------------------------------------------- IntegralTransform

IntegralTransform::IntegralTransform(const std::string& prefix, int coord_dim, std::int64_t channels,
                                     Options opt, ParamStore& store, Rng& rng)
    : coord_dim_(coord_dim), channels_(channels), opt_(std::move(opt)),
      kernel_(prefix + ".kernel",
              [&] {
                  std::vector<std::int64_t> w{2 * coord_dim + (opt_.nonlinear ? channels : 0)};
                  w.insert(w.end(), opt_.hidden.begin(), opt_.hidden.end());
                  w.push_back(channels);
                  return w;
              }(),
              store, rng) {
    if (opt_.with_bias) {
        std::vector<std::int64_t> w{coord_dim};
        w.insert(w.end(), opt_.hidden.begin(), opt_.hidden.end());
        w.push_back(channels);
        bias_.emplace(prefix + ".bias", std::move(w), store, rng);
    }
}

Field IntegralTransform::forward(const Field& field, const DiscPtr& query) const {
    field.validate();
    if (field.values.dim(1) != channels_) throw shape_error("integral_transform: channel mismatch");
    const auto& in = *field.disc;
    const std::int64_t n = in.size(), m = query->size(), d = in.domain.dim();
    const auto& xp = in.points.rdata();
    const auto& yp = query->points.rdata();

    std::vector<std::int64_t> src, dst;
    const double r2 = opt_.radius * opt_.radius;
    for (std::int64_t j = 0; j < m; ++j) {
        bool any = false;
        for (std::int64_t i = 0; i < n; ++i) {
            if (opt_.radius > 0.0 &&
                metric_dist2(in.domain, xp.data() + i * d, yp.data() + j * d) > r2)
                continue;
            src.push_back(i);
            dst.push_back(j);
            any = true;
        }
        if (!any)
            throw empty_neighborhood_error("integral_transform: no points within radius of query " +
                                           std::to_string(j));
    }
    const auto P = static_cast<std::int64_t>(src.size());

    const std::int64_t kin_dim = 2 * d + (opt_.nonlinear ? channels_ : 0);
    std::vector<double> kin(static_cast<std::size_t>(P * kin_dim));
    for (std::int64_t p = 0; p < P; ++p) {
        for (std::int64_t a = 0; a < d; ++a) {
            kin[static_cast<std::size_t>(p * kin_dim + a)] = xp[static_cast<std::size_t>(src[static_cast<std::size_t>(p)] * d + a)];
            kin[static_cast<std::size_t>(p * kin_dim + d + a)] = yp[static_cast<std::size_t>(dst[static_cast<std::size_t>(p)] * d + a)];
        }
    }
    Tensor kernel_in;
    if (opt_.nonlinear) {
        Tensor coords = Tensor::from_real({P, 2 * d}, [&] {
            std::vector<double> c(static_cast<std::size_t>(P * 2 * d));
            for (std::int64_t p = 0; p < P; ++p)
                for (std::int64_t a = 0; a < 2 * d; ++a)
                    c[static_cast<std::size_t>(p * 2 * d + a)] = kin[static_cast<std::size_t>(p * kin_dim + a)];
            return c;
        }());
        kernel_in = ops::concat({coords, ops::take_rows(field.values, src)}, 1);
    } else {
        kernel_in = Tensor::from_real({P, kin_dim}, std::move(kin));
    }

    Tensor messages = kernel_.forward(kernel_in);
    if (!opt_.nonlinear) messages = ops::mul(messages, ops::take_rows(field.values, src));
    std::vector<double> wcol(static_cast<std::size_t>(P));
    for (std::int64_t p = 0; p < P; ++p) wcol[static_cast<std::size_t>(p)] = in.weights[static_cast<std::size_t>(src[static_cast<std::size_t>(p)])];
    messages = ops::mul(messages, Tensor::from_real({P, 1}, std::move(wcol)));

    Tensor g = ops::scatter_rows(messages, dst, m);
    if (bias_) g = ops::add(g, bias_->forward(query->points));

    Field out;
    out.disc = query;
    out.values = g;
    return out;
}

// -------------------------------------------------------------- ConvOperator

ConvOperator::ConvOperator(const std::string& prefix, int coord_dim, std::int64_t channels,
                           double radius, std::vector<std::int64_t> hidden, ParamStore& store, Rng& rng)
    : coord_dim_(coord_dim), channels_(channels), radius_(radius),
      kernel_(prefix + ".kernel",
              [&] {
                  std::vector<std::int64_t> w{coord_dim};
                  w.insert(w.end(), hidden.begin(), hidden.end());
                  w.push_back(channels);
                  return w;
              }(),
              store, rng) {
    if (radius <= 0.0) throw invalid_argument_error("conv_operator: radius must be positive");
}

Field ConvOperator::forward(const Field& field) const {
    field.validate();
    if (field.values.dim(1) != channels_) throw shape_error("conv_operator: channel mismatch");
    const auto& disc = *field.disc;
    const std::int64_t per_axis = grid_points_per_axis(disc);
    const int d = disc.domain.dim();
    const double spacing = disc.domain.length(0) / static_cast<double>(disc.domain.periodic() ? per_axis : per_axis - 1);
    if (radius_ < spacing)
        throw empty_neighborhood_error("conv_operator: radius smaller than the grid spacing");
    const std::int64_t n = disc.size();
    const auto& pts = disc.points.rdata();

    std::vector<std::int64_t> src, dst;
    std::vector<double> offsets;
    const double r2 = radius_ * radius_;
    for (std::int64_t j = 0; j < n; ++j)
        for (std::int64_t i = 0; i < n; ++i) {
            double d2 = 0.0;
            double off[2] = {0.0, 0.0};
            for (int a = 0; a < d; ++a) {
                double dx = pts[static_cast<std::size_t>(j * d + a)] - pts[static_cast<std::size_t>(i * d + a)];
                if (disc.domain.periodic()) {
                    const double L = disc.domain.length(a);
                    if (dx > 0.5 * L) dx -= L;
                    if (dx < -0.5 * L) dx += L;
                }
                off[a] = dx;
                d2 += dx * dx;
            }
            if (d2 > r2) continue;
            src.push_back(i);
            dst.push_back(j);
            for (int a = 0; a < d; ++a) offsets.push_back(off[a]);
        }
    const auto P = static_cast<std::int64_t>(src.size());
    Tensor kin = Tensor::from_real({P, d}, std::move(offsets));
    Tensor msgs = ops::mul(kernel_.forward(kin), ops::take_rows(field.values, src));
    std::vector<double> wcol(static_cast<std::size_t>(P));
    for (std::int64_t p = 0; p < P; ++p) wcol[static_cast<std::size_t>(p)] = disc.weights[static_cast<std::size_t>(src[static_cast<std::size_t>(p)])];
    msgs = ops::mul(msgs, Tensor::from_real({P, 1}, std::move(wcol)));

    Field out;
    out.disc = field.disc;
    out.values = ops::scatter_rows(msgs, dst, n);
    return out;
}

// ----------------------------------------------------- KernelInterpolatedConv

KernelInterpolatedConv::KernelInterpolatedConv(const std::string& prefix, int half_width,
                                               double ref_spacing, ParamStore& store, Rng& rng)
    : k_(half_width), h0_(ref_spacing) {
    if (half_width < 0 || ref_spacing <= 0.0) throw invalid_argument_error("kernel_interpolated_conv: bad geometry");
    taps_ = store.add(prefix + ".taps", init_linear({2 * static_cast<std::int64_t>(half_width) + 1, 1},
                                                    2 * half_width + 1, rng));
}

KernelInterpolatedConv::KernelInterpolatedConv(ParamPtr taps, double ref_spacing)
    : k_(static_cast<int>((taps->value.dim(0) - 1) / 2)), h0_(ref_spacing), taps_(std::move(taps)) {}

Field KernelInterpolatedConv::forward(const Field& field) const {
    field.validate();
    const auto& disc = *field.disc;
    if (!disc.domain.periodic() || disc.domain.dim() != 1)
        throw unsupported_domain_error("kernel_interpolated_conv: 1-d torus grids only");
    const std::int64_t n = grid_points_per_axis(disc);
    const double h = disc.domain.length(0) / static_cast<double>(n);
    const Tensor taps = taps_->use();

    Tensor g;
    const auto reach = static_cast<std::int64_t>(std::floor(static_cast<double>(k_) * h0_ / h + 1e-12));
    for (std::int64_t mstep = -reach; mstep <= reach; ++mstep) {
        // continuous kernel at offset m*h: linear interpolation of taps/h0
        const double s = static_cast<double>(mstep) * h / h0_; // in tap units
        const double fl = std::floor(s);
        const auto q = static_cast<std::int64_t>(fl) + k_;
        const double frac = s - fl;
        Tensor coef;
        if (q < 0 || q >= 2 * k_ + 1) continue;
        if (frac == 0.0 || q + 1 >= 2 * k_ + 1) {
            coef = ops::scale(ops::slice(taps, 0, q, 1), (1.0 - frac) / h0_);
        } else {
            coef = ops::add(ops::scale(ops::slice(taps, 0, q, 1), (1.0 - frac) / h0_),
                            ops::scale(ops::slice(taps, 0, q + 1, 1), frac / h0_));
        }
        coef = ops::reshape(coef, {1, 1});
        std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
        for (std::int64_t j = 0; j < n; ++j) idx[static_cast<std::size_t>(j)] = ((j - mstep) % n + n) % n;
        Tensor term = ops::mul(ops::take_rows(field.values, idx), coef);
        g = g.defined() ? ops::add(g, term) : term;
    }
    if (!g.defined()) g = Tensor::zeros(field.values.shape());
    g = ops::scale(g, h); // quadrature factor of the current grid

    Field out;
    out.disc = field.disc;
    out.values = g;
    return out;
}

// -------------------------------------------------------------- SpectralConv

SpectralConv::SpectralConv(const std::string& prefix, int coord_dim, std::int64_t c_in,
                           std::int64_t c_out, std::int64_t modes, ParamStore& store, Rng& rng)
    : coord_dim_(coord_dim), c_in_(c_in), c_out_(c_out), modes_(modes) {
    if (modes < 1) throw invalid_argument_error("spectral_conv: need at least one mode");
    Shape shape;
    if (coord_dim == 1)
        shape = {modes, c_in, c_out};
    else if (coord_dim == 2)
        shape = {modes, modes, c_in, c_out};
    else
        throw unsupported_domain_error("spectral_conv: 1-d and 2-d only");
    w_ = store.add(prefix + ".w", init_spectral(shape, c_in, rng));
}

namespace {

/// Frequencies kept on a full-spectrum axis: m lowest |k|, nonnegative first.
std::vector<std::int64_t> full_axis_freqs(std::int64_t m) {
    std::vector<std::int64_t> f;
    for (std::int64_t k = 0; k < (m + 1) / 2; ++k) f.push_back(k);
    for (std::int64_t k = -(m / 2); k < 0; ++k) f.push_back(k);
    return f;
}

} // namespace

Field SpectralConv::forward(const Field& field, std::int64_t n_out_per_axis) const {
    field.validate();
    const auto& disc = *field.disc;
    if (!disc.domain.periodic()) throw unsupported_domain_error("spectral_conv: torus domains only");
    if (disc.domain.dim() != coord_dim_) throw shape_error("spectral_conv: domain dimension mismatch");
    if (field.values.dim(1) != c_in_) throw shape_error("spectral_conv: channel mismatch");
    const std::int64_t n = grid_points_per_axis(disc);
    const std::int64_t n_out = n_out_per_axis > 0 ? n_out_per_axis : n;
    const std::int64_t limit = std::min(n, n_out);

    static bool warned = false;
    if (n < 2 * modes_ && !warned) {
        warned = true;
        std::fprintf(stderr, "spectral_conv: grid of %lld points cannot resolve %lld modes; truncating\n",
                     static_cast<long long>(n), static_cast<long long>(modes_));
    }

    Field out;
    if (coord_dim_ == 1) {
        const std::int64_t m_keep = std::max<std::int64_t>(1, std::min(modes_, limit / 2));
        Tensor h = ops::rfft1(field.values);
        Tensor hk = ops::slice(h, 0, 0, m_keep);
        Tensor w = w_->use();
        if (m_keep < modes_) w = ops::slice(w, 0, 0, m_keep);
        Tensor mixed = ops::mode_contract(hk, w);
        const std::int64_t m_spec = limit / 2 + 1;
        std::vector<std::int64_t> idx(static_cast<std::size_t>(m_keep));
        std::iota(idx.begin(), idx.end(), 0);
        Tensor spec = ops::scatter_rows(mixed, idx, m_spec);
        Tensor y = ops::irfft1(spec, n_out);
        // forward transform was measured over n samples; irfft divided by `limit`
        if (limit != n) y = ops::scale(y, static_cast<double>(limit) / static_cast<double>(n));
        out.values = y;
    } else {
        const std::int64_t m0 = std::max<std::int64_t>(1, std::min(modes_, limit));
        const std::int64_t m1 = std::max<std::int64_t>(1, std::min(modes_, limit / 2));
        Tensor h = ops::rfft2(field.values, n, n); // [n, n/2+1, c_in]
        const std::int64_t n1h_in = n / 2 + 1;
        const std::int64_t n1h_out = n_out / 2 + 1;
        Tensor rows = ops::reshape(h, {n * n1h_in, c_in_});
        const auto freqs0 = full_axis_freqs(m0);
        std::vector<std::int64_t> take_idx, put_idx;
        for (std::int64_t a = 0; a < m0; ++a) {
            const std::int64_t k0 = freqs0[static_cast<std::size_t>(a)];
            const std::int64_t row_in = k0 >= 0 ? k0 : n + k0;
            const std::int64_t row_out = k0 >= 0 ? k0 : n_out + k0;
            for (std::int64_t k1 = 0; k1 < m1; ++k1) {
                take_idx.push_back(row_in * n1h_in + k1);
                put_idx.push_back(row_out * n1h_out + k1);
            }
        }
        Tensor hk = ops::take_rows(rows, take_idx); // [m0*m1, c_in]
        Tensor w = w_->use();
        if (m0 < modes_) w = ops::slice(w, 0, 0, m0);
        if (m1 < modes_) w = ops::slice(w, 1, 0, m1);
        w = ops::reshape(w, {m0 * m1, c_in_, c_out_});
        Tensor mixed = ops::mode_contract(hk, w);
        Tensor spec = ops::scatter_rows(mixed, put_idx, n_out * n1h_out);
        Tensor y = ops::irfft2(ops::reshape(spec, {n_out, n1h_out, c_out_}));
        // renormalize from the output grid back to the input grid's 1/n^2
        const double fix = static_cast<double>(n_out * n_out) / static_cast<double>(n * n);
        if (fix != 1.0) y = ops::scale(y, fix);
        out.values = y;
    }
    out.disc = n_out == n ? field.disc : uniform_grid(disc.domain, n_out);
    return out;
}

// ------------------------------------------------------------------ FnoBlock

FnoBlock::FnoBlock(const std::string& prefix, int coord_dim, std::int64_t channels, std::int64_t modes,
                   std::vector<std::int64_t> mlp_hidden, ParamStore& store, Rng& rng, bool use_gelu)
    : spectral_(prefix + ".spectral", coord_dim, channels, channels, modes, store, rng),
      pointwise_(prefix + ".mlp",
                 [&] {
                     std::vector<std::int64_t> w{channels};
                     w.insert(w.end(), mlp_hidden.begin(), mlp_hidden.end());
                     w.push_back(channels);
                     return w;
                 }(),
                 store, rng),
      use_gelu_(use_gelu) {
    skip_w_ = store.add(prefix + ".skip_w", init_linear({channels, channels}, channels, rng));
    skip_b_ = store.add(prefix + ".skip_b", init_linear({1, channels}, channels, rng));
}

Field FnoBlock::forward(const Field& field) const {
    Field spec = spectral_.forward(field);
    Tensor skip = ops::add(ops::matmul(field.values, skip_w_->use()), skip_b_->use());
    Tensor h = ops::add(spec.values, skip);
    if (use_gelu_) h = ops::gelu(h);
    Field out;
    out.disc = field.disc;
    out.values = pointwise_.forward(h);
    return out;
}

// ------------------------------------------------------------- AttentionLayer

AttentionLayer::AttentionLayer(const std::string& prefix, std::int64_t channels, std::int64_t d_att,
                               std::int64_t d_value, ParamStore& store, Rng& rng, double temperature)
    : c_(channels), d_att_(d_att), d_value_(d_value),
      tau_(temperature > 0.0 ? temperature : 1.0 / std::sqrt(static_cast<double>(d_att))) {
    wk_ = store.add(prefix + ".wk", init_linear({channels, d_att}, channels, rng));
    bk_ = store.add(prefix + ".bk", init_linear({1, d_att}, channels, rng));
    wq_ = store.add(prefix + ".wq", init_linear({channels, d_att}, channels, rng));
    bq_ = store.add(prefix + ".bq", init_linear({1, d_att}, channels, rng));
    wv_ = store.add(prefix + ".wv", init_linear({channels, d_value}, channels, rng));
    bv_ = store.add(prefix + ".bv", init_linear({1, d_value}, channels, rng));
}

Field AttentionLayer::forward(const Field& field) const {
    field.validate();
    if (field.values.dim(1) != c_) throw shape_error("attention: channel mismatch");
    Tensor k = ops::add(ops::matmul(field.values, wk_->use()), bk_->use());
    Tensor q = ops::add(ops::matmul(field.values, wq_->use()), bq_->use());
    Tensor v = ops::add(ops::matmul(field.values, wv_->use()), bv_->use());
    Tensor logits = ops::scale(ops::matmul(q, k, false, true), tau_); // [n_query, n_key]
    Tensor y = ops::softmax_weighted(logits, field.disc->weights);
    Field out;
    out.disc = field.disc;
    out.values = ops::matmul(y, v);
    return out;
}

// --------------------------------------------------------------- EncDecLayer

EncDecLayer::EncDecLayer(const std::string& prefix, int coord_dim, std::int64_t channels, Options opt,
                         ParamStore& store, Rng& rng)
    : coord_dim_(coord_dim), channels_(channels), opt_(std::move(opt)) {
    if (opt_.latent < 1) throw invalid_argument_error("encdec: latent dimension must be positive");
    if (opt_.basis == Basis::Fourier && (coord_dim != 1 || channels != 1))
        throw unsupported_domain_error("encdec: the fixed Fourier basis is 1-d single-channel");
    if (opt_.basis == Basis::Mlp) {
        std::vector<std::int64_t> w{coord_dim};
        w.insert(w.end(), opt_.basis_hidden.begin(), opt_.basis_hidden.end());
        w.push_back(opt_.latent * channels);
        basis_net_.emplace(prefix + ".basis", std::move(w), store, rng);
    }
    {
        std::vector<std::int64_t> w{opt_.latent};
        w.insert(w.end(), opt_.latent_hidden.begin(), opt_.latent_hidden.end());
        w.push_back(opt_.latent);
        latent_map_.emplace(prefix + ".latent", std::move(w), store, rng);
    }
    if (opt_.decoder == Decoder::NomadMlp) {
        std::vector<std::int64_t> w{opt_.latent + coord_dim};
        w.insert(w.end(), opt_.decoder_hidden.begin(), opt_.decoder_hidden.end());
        w.push_back(opt_.out_channels);
        decoder_net_.emplace(prefix + ".decoder", std::move(w), store, rng);
    } else if (opt_.out_channels != 1) {
        throw invalid_argument_error("encdec: the linear Fourier decoder is single-channel");
    }
}

Tensor EncDecLayer::basis_values(const Tensor& coords) const {
    if (basis_net_) return basis_net_->forward(coords);
    // orthonormal torus basis: 1, sqrt2*cos(2pi m x), sqrt2*sin(2pi m x), ...
    const std::int64_t n = coords.dim(0), k = opt_.latent;
    const auto& cv = coords.rdata();
    std::vector<double> b(static_cast<std::size_t>(n * k));
    const double s2 = std::sqrt(2.0);
    for (std::int64_t i = 0; i < n; ++i) {
        const double x = cv[static_cast<std::size_t>(i * coords.dim(1))];
        for (std::int64_t j = 0; j < k; ++j) {
            double val;
            if (j == 0)
                val = 1.0;
            else if (j % 2 == 1)
                val = s2 * std::cos(2.0 * kPi * static_cast<double>((j + 1) / 2) * x);
            else
                val = s2 * std::sin(2.0 * kPi * static_cast<double>(j / 2) * x);
            b[static_cast<std::size_t>(i * k + j)] = val;
        }
    }
    return Tensor::from_real({n, k}, std::move(b));
}

Tensor EncDecLayer::encode(const Field& field) const {
    field.validate();
    if (field.values.dim(1) != channels_) throw shape_error("encdec: channel mismatch");
    const std::int64_t n = field.disc->size(), k = opt_.latent, c = channels_;
    Tensor fw = ops::mul(field.values, weight_column(*field.disc)); // [n, c]
    Tensor B = ops::reshape(basis_values(field.disc->points), {n, k, c});
    Tensor prod = ops::mul(B, ops::reshape(fw, {n, 1, c}));
    Tensor v = ops::reduce_sum(ops::reduce_sum(prod, 0), 1); // [k]
    return ops::reshape(v, {1, k});
}

Field EncDecLayer::forward(const Field& field, const DiscPtr& query) const {
    Tensor w = latent_map_->forward(encode(field));
    const std::int64_t m = query->size();
    Field out;
    out.disc = query;
    if (opt_.decoder == Decoder::NomadMlp) {
        Tensor lat = ops::broadcast_to(w, {m, opt_.latent});
        out.values = decoder_net_->forward(ops::concat({lat, query->points}, 1));
    } else {
        Tensor Bq = basis_values(query->points); // [m, latent]
        out.values = ops::matmul(Bq, w, false, true);
    }
    return out;
}

// --------------------------------------------------------------- statistics

ChannelStats field_stats(const Field& field) {
    field.validate();
    const std::int64_t n = field.values.dim(0), c = field.values.dim(1);
    const auto& v = field.values.rdata();
    const auto& w = field.disc->weights;
    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
    ChannelStats st;
    st.mu.assign(static_cast<std::size_t>(c), 0.0);
    st.sigma.assign(static_cast<std::size_t>(c), 0.0);
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t ch = 0; ch < c; ++ch)
            st.mu[static_cast<std::size_t>(ch)] += v[static_cast<std::size_t>(i * c + ch)] * w[static_cast<std::size_t>(i)];
    for (auto& m : st.mu) m /= wsum;
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t ch = 0; ch < c; ++ch) {
            const double dvi = v[static_cast<std::size_t>(i * c + ch)] - st.mu[static_cast<std::size_t>(ch)];
            st.sigma[static_cast<std::size_t>(ch)] += dvi * dvi * w[static_cast<std::size_t>(i)];
        }
    for (auto& s : st.sigma) s = std::sqrt(s / wsum);
    return st;
}

ChannelStats dataset_stats(const std::vector<Field>& fields) {
    if (fields.empty()) throw invalid_argument_error("dataset_stats: no fields");
    ChannelStats acc = field_stats(fields[0]);
    for (std::size_t s = 1; s < fields.size(); ++s) {
        const ChannelStats st = field_stats(fields[s]);
        if (st.mu.size() != acc.mu.size()) throw shape_error("dataset_stats: channel mismatch");
        for (std::size_t ch = 0; ch < acc.mu.size(); ++ch) {
            acc.mu[ch] += st.mu[ch];
            acc.sigma[ch] += st.sigma[ch];
        }
    }
    const auto inv = 1.0 / static_cast<double>(fields.size());
    for (auto& m : acc.mu) m *= inv;
    for (auto& s : acc.sigma) s *= inv;
    return acc;
}

namespace {
constexpr double kStdFloor = 1e-8;

Tensor stats_row(const std::vector<double>& v) {
    return Tensor::from_real({1, static_cast<std::int64_t>(v.size())}, std::vector<double>(v));
}
} // namespace

Tensor standardize_values(const Tensor& values, const ChannelStats& stats) {
    std::vector<double> inv(stats.sigma.size());
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / std::max(stats.sigma[i], kStdFloor);
    return ops::mul(ops::sub(values, stats_row(stats.mu)), stats_row(inv));
}

Tensor destandardize_values(const Tensor& values, const ChannelStats& stats) {
    std::vector<double> sig(stats.sigma.size());
    for (std::size_t i = 0; i < sig.size(); ++i) sig[i] = std::max(stats.sigma[i], kStdFloor);
    return ops::add(ops::mul(values, stats_row(sig)), stats_row(stats.mu));
}

Field standardize(const Field& field, const ChannelStats& stats) {
    Field out;
    out.disc = field.disc;
    out.values = standardize_values(field.values, stats);
    return out;
}

Field destandardize(const Field& field, const ChannelStats& stats) {
    Field out;
    out.disc = field.disc;
    out.values = destandardize_values(field.values, stats);
    return out;
}

// ------------------------------------------------------------ domain padding

Field domain_padding(const Field& field, double pad_fraction) {
    field.validate();
    if (pad_fraction < 0.0) throw invalid_argument_error("domain_padding: negative fraction");
    const auto& disc = *field.disc;
    if (disc.domain.periodic()) throw unsupported_domain_error("domain_padding: field is already periodic");
    const std::int64_t n = grid_points_per_axis(disc);
    const int d = disc.domain.dim();
    const auto p = static_cast<std::int64_t>(std::llround(pad_fraction * static_cast<double>(n)));
    const std::int64_t N = n + 2 * p;
    const double h = disc.domain.length(0) / static_cast<double>(n - 1);
    const double lo = disc.domain.lo[0] - static_cast<double>(p) * h;

    Domain dom = d == 1 ? Domain::torus1d(lo, lo + static_cast<double>(N) * h)
                        : Domain::torus2d(lo, lo + static_cast<double>(N) * h);
    auto clampi = [&](std::int64_t i) { return std::clamp(i - p, std::int64_t{0}, n - 1); };

    std::vector<std::int64_t> idx;
    std::vector<double> pts;
    if (d == 1) {
        for (std::int64_t i = 0; i < N; ++i) {
            idx.push_back(clampi(i));
            pts.push_back(lo + static_cast<double>(i) * h);
        }
    } else {
        for (std::int64_t i = 0; i < N; ++i)
            for (std::int64_t j = 0; j < N; ++j) {
                idx.push_back(clampi(i) * n + clampi(j));
                pts.push_back(lo + static_cast<double>(i) * h);
                pts.push_back(lo + static_cast<double>(j) * h);
            }
    }
    const std::int64_t total = d == 1 ? N : N * N;
    std::vector<double> w(static_cast<std::size_t>(total), dom.measure() / static_cast<double>(total));
    Shape gshape = d == 1 ? Shape{N} : Shape{N, N};

    Field out;
    out.disc = make_disc(dom, Tensor::from_real({total, d}, std::move(pts)), std::move(w), gshape);
    out.values = ops::take_rows(field.values, idx);
    return out;
}

Field domain_unpad(const Field& padded, const Field& original_like) {
    padded.validate();
    original_like.validate();
    const std::int64_t N = grid_points_per_axis(*padded.disc);
    const std::int64_t n = grid_points_per_axis(*original_like.disc);
    const std::int64_t p = (N - n) / 2;
    if (N != n + 2 * p) throw shape_error("domain_unpad: incompatible grids");
    const int d = padded.disc->domain.dim();
    std::vector<std::int64_t> idx;
    if (d == 1) {
        for (std::int64_t i = 0; i < n; ++i) idx.push_back(i + p);
    } else {
        for (std::int64_t i = 0; i < n; ++i)
            for (std::int64_t j = 0; j < n; ++j) idx.push_back((i + p) * N + (j + p));
    }
    Field out;
    out.disc = original_like.disc;
    out.values = ops::take_rows(padded.values, idx);
    return out;
}

} // namespace nok

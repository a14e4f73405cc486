#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nok/domain.hpp"
#include "nok/mlp.hpp"

namespace nok {

/// Sinusoidal features per coordinate axis: angles 2^k * pi * x for
/// k = 0..F-1, emitting sin then cos. Output shape [n, 2*F*d].
Tensor positional_encoding(const Tensor& coords, int num_frequencies);

/// Appends feature columns to a field's channels.
Field concat_to_field(const Field& field, const Tensor& features);

/// Nemytskii operator: applies `net` row-wise; keeps the discretization.
class PointwiseLayer {
public:
    PointwiseLayer(const std::string& prefix, std::vector<std::int64_t> widths, ParamStore& store, Rng& rng)
        : net_(prefix, std::move(widths), store, rng) {}
    Field forward(const Field& field) const;
    Mlp& net() { return net_; }

private:
    Mlp net_;
};

/// Kernel integral operator  g(y_j) = sum_i K(x_i, y_j, [f(x_i)]) . f-or-1 . w_i + b(y_j).
///
/// Default is the linear diagonal-kernel variant: the kernel net maps
/// (x, y) to c multipliers applied elementwise to f(x). The nonlinear
/// variant feeds f(x) to the kernel and sums its output directly. The
/// kernel never sees f(y), so outputs stay queryable anywhere.
class IntegralTransform {
public:
    struct Options {
        bool nonlinear = false;      // kernel input (x, y, f(x)) instead of (x, y)
        double radius = 0.0;         // 0 = all pairs; > 0 = closed ball, periodic metric on tori
        bool with_bias = false;      // adds a learned b(y)
        std::vector<std::int64_t> hidden = {32, 32};
    };

    IntegralTransform(const std::string& prefix, int coord_dim, std::int64_t channels, Options opt,
                      ParamStore& store, Rng& rng);

    Field forward(const Field& field, const DiscPtr& query) const;
    Field forward(const Field& field) const { return forward(field, field.disc); }

private:
    int coord_dim_;
    std::int64_t channels_;
    Options opt_;
    Mlp kernel_;
    std::optional<Mlp> bias_;
};

/// Continuous convolution on an equispaced grid:
/// g(y_j) = w . sum_{|x_i-y_j| <= r} K(y_j - x_i) f(x_i), periodic wrap on tori.
class ConvOperator {
public:
    ConvOperator(const std::string& prefix, int coord_dim, std::int64_t channels, double radius,
                 std::vector<std::int64_t> hidden, ParamStore& store, Rng& rng);
    Field forward(const Field& field) const;

private:
    int coord_dim_;
    std::int64_t channels_;
    double radius_;
    Mlp kernel_;
};

/// Discrete taps reinterpreted as a continuous kernel: taps learned at
/// reference spacing h0 sit at offsets {-k..k} * h0, are divided by h0, and
/// are linearly interpolated in between. Evaluation at the current grid
/// spacing is quadrature-scaled, so the physical receptive field stays
/// 2*k*h0 at every resolution.
class KernelInterpolatedConv {
public:
    KernelInterpolatedConv(const std::string& prefix, int half_width, double ref_spacing,
                           ParamStore& store, Rng& rng);
    KernelInterpolatedConv(ParamPtr taps, double ref_spacing); // adopt existing taps
    Field forward(const Field& field) const;

private:
    int k_;
    double h0_;
    ParamPtr taps_; // [2k+1]
};

/// Truncated-mode spectral convolution on torus grids (1-d and 2-d).
/// Weights have shape (modes, c_in, c_out) in 1-d and
/// (modes0, modes1, c_in, c_out) in 2-d; the last transformed axis stores the
/// real-FFT half spectrum (frequencies 0..modes-1), other axes keep the
/// `modes` lowest |frequency| rows ordered [0..ceil(m/2)-1, -floor(m/2)..-1].
class SpectralConv {
public:
    SpectralConv(const std::string& prefix, int coord_dim, std::int64_t c_in, std::int64_t c_out,
                 std::int64_t modes, ParamStore& store, Rng& rng);

    /// n_out_per_axis = 0 keeps the input grid; anything else queries the
    /// band-limited output on that grid (Fourier interpolation).
    Field forward(const Field& field, std::int64_t n_out_per_axis = 0) const;

    ParamPtr weights() const { return w_; }
    std::int64_t modes() const { return modes_; }

private:
    int coord_dim_;
    std::int64_t c_in_, c_out_, modes_;
    ParamPtr w_;
};

/// FNO block: activation(spectral_conv(f) + W f + b) followed by a pointwise MLP.
class FnoBlock {
public:
    FnoBlock(const std::string& prefix, int coord_dim, std::int64_t channels, std::int64_t modes,
             std::vector<std::int64_t> mlp_hidden, ParamStore& store, Rng& rng, bool use_gelu = true);
    Field forward(const Field& field) const;
    SpectralConv& spectral() { return spectral_; }
    Mlp& pointwise() { return pointwise_; }
    ParamPtr skip_w() const { return skip_w_; }
    ParamPtr skip_b() const { return skip_b_; }

private:
    SpectralConv spectral_;
    ParamPtr skip_w_, skip_b_;
    Mlp pointwise_;
    bool use_gelu_;
};

/// Quadrature-weighted self-attention (queries = the input points):
/// g(y_j) = sum_i softmax_i[tau <k_i, q_j>; weights w] v_i w_i.
/// With equal weights this reduces exactly to standard softmax attention.
class AttentionLayer {
public:
    AttentionLayer(const std::string& prefix, std::int64_t channels, std::int64_t d_att,
                   std::int64_t d_value, ParamStore& store, Rng& rng, double temperature = 0.0);
    Field forward(const Field& field) const;

private:
    std::int64_t c_, d_att_, d_value_;
    double tau_;
    ParamPtr wk_, bk_, wq_, bq_, wv_, bv_;
};

/// Encoder-decoder operator layer: inner-product encoder against a basis,
/// latent map, and a decoder queryable at arbitrary coordinates.
class EncDecLayer {
public:
    enum class Basis { Mlp, Fourier };       // Fourier: fixed orthonormal 1-d torus basis
    enum class Decoder { NomadMlp, FourierLinear }; // FourierLinear: g(y) = sum_j w_j b_j(y)

    struct Options {
        std::int64_t latent = 64;
        Basis basis = Basis::Mlp;
        Decoder decoder = Decoder::NomadMlp;
        std::vector<std::int64_t> basis_hidden = {32};
        std::vector<std::int64_t> latent_hidden = {};   // {} = single affine map
        std::vector<std::int64_t> decoder_hidden = {32};
        std::int64_t out_channels = 1;
    };

    EncDecLayer(const std::string& prefix, int coord_dim, std::int64_t channels, Options opt,
                ParamStore& store, Rng& rng);

    Field forward(const Field& field, const DiscPtr& query) const;
    Tensor encode(const Field& field) const; // latent inner products v, [1, latent]
    Mlp& latent_map() { return *latent_map_; }

private:
    Tensor basis_values(const Tensor& coords) const; // [n, latent*c]
    int coord_dim_;
    std::int64_t channels_;
    Options opt_;
    std::optional<Mlp> basis_net_;
    std::optional<Mlp> latent_map_;
    std::optional<Mlp> decoder_net_;
};

/// Quadrature-weighted per-channel statistics (weighted mean and std).
struct ChannelStats {
    std::vector<double> mu, sigma;
};

ChannelStats field_stats(const Field& field);
ChannelStats dataset_stats(const std::vector<Field>& fields); // average of per-sample stats
Field standardize(const Field& field, const ChannelStats& stats);
Field destandardize(const Field& field, const ChannelStats& stats);
/// Tape-friendly variant used on model outputs during training.
Tensor destandardize_values(const Tensor& values, const ChannelStats& stats);
Tensor standardize_values(const Tensor& values, const ChannelStats& stats);

/// Replicates boundary values to turn a non-torus grid field into a periodic
/// one; round(pad_fraction * n) points per side. unpad crops back exactly.
Field domain_padding(const Field& field, double pad_fraction);
Field domain_unpad(const Field& padded, const Field& original_like);

} // namespace nok

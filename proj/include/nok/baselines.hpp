#pragma once

#include "nok/domain.hpp"
#include "nok/mlp.hpp"

namespace nok {

/// Index-based stencil convolution (the non-operator baseline):
/// g_j = sum_t K_t f_{j-t} with periodic wrap and no quadrature factor, so
/// the physical receptive field 2*k*spacing shrinks as the grid refines.
/// Taps are depthwise (shared across channels).
class DiscreteConvLayer {
public:
    DiscreteConvLayer(const std::string& prefix, int coord_dim, int half_width, ParamStore& store, Rng& rng);
    DiscreteConvLayer(ParamPtr taps, int coord_dim); // adopt existing taps
    Field forward(const Field& field) const;
    int half_width() const { return k_; }

private:
    int dim_;
    int k_;
    ParamPtr taps_; // [2k+1, 1] or [(2k+1)^2, 1]
};

/// Trainable multichannel 2-d stencil block used by the baseline model:
/// activation(stencil_conv(f) + W f + b) followed by a pointwise MLP, the
/// exact structural mirror of FnoBlock with the spectral path replaced by an
/// index stencil. The stencil is evaluated as a circulant via the FFT, which
/// is numerically identical to the direct sum (validated in tests) but keeps
/// training at n=32 tractable.
class ConvBlock2d {
public:
    ConvBlock2d(const std::string& prefix, std::int64_t channels, int half_width,
                std::vector<std::int64_t> mlp_hidden, ParamStore& store, Rng& rng, bool use_gelu = true);
    Field forward(const Field& field) const;

    /// Direct O(n^2 * taps) stencil evaluation; reference for the FFT path.
    Tensor conv_direct(const Tensor& values, std::int64_t n) const;
    Tensor conv_fft(const Tensor& values, std::int64_t n) const;

private:
    std::int64_t c_;
    int k_;
    ParamPtr taps_; // [(2k+1)^2, c, c]
    ParamPtr skip_w_, skip_b_;
    Mlp pointwise_;
    bool use_gelu_;
};

/// Mean aggregation over k nearest neighbors (self included); Fig.-2-style
/// GNN layer with no quadrature, hence no unique continuum limit.
class KnnGnnLayer {
public:
    KnnGnnLayer(const std::string& prefix, std::int64_t channels, int k_neighbors,
                std::vector<std::int64_t> hidden, ParamStore& store, Rng& rng);
    Field forward(const Field& field) const;

private:
    std::int64_t c_;
    int k_;
    Mlp message_; // input f_i (+) f_j
};

} // namespace nok

#pragma once

#include <vector>

#include "nok/tensor.hpp"

namespace nok::ops {

// ---- elementwise with numpy-style broadcasting (trailing alignment) ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b); // real only
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double s);

// ---- dtype boundary ----
Tensor to_complex(const Tensor& a);
Tensor real_part(const Tensor& a);
Tensor imag_part(const Tensor& a);
Tensor conj(const Tensor& a);
Tensor abs2(const Tensor& a); // |z|^2, real output

// ---- real-only pointwise nonlinearities ----
Tensor gelu(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor sqrt(const Tensor& a);

/// Row-wise softmax over the last axis of a 2-d real tensor.
Tensor softmax(const Tensor& logits);

/// Quadrature-weighted softmax: out[j,i] = w_i e^{l_ji} / sum_l w_l e^{l_jl}.
/// Stabilized by per-row max subtraction. Weights are constants.
Tensor softmax_weighted(const Tensor& logits, const std::vector<double>& weights);

// ---- shape ----
Tensor reshape(const Tensor& a, Shape shape);
Tensor broadcast_to(const Tensor& a, Shape shape);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& a, int axis, std::int64_t start, std::int64_t len);

/// Gather rows of a 2-d tensor: out[p, :] = a[idx[p], :].
Tensor take_rows(const Tensor& a, std::vector<std::int64_t> idx);

/// Scatter-add rows of a 2-d tensor into `rows` rows: out[idx[p], :] += v[p, :].
Tensor scatter_rows(const Tensor& v, std::vector<std::int64_t> idx, std::int64_t rows);

// ---- contractions ----
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);

/// Per-mode channel mixing: out[m, o] = sum_i f[m, i] * w[m, i, o] (complex).
Tensor mode_contract(const Tensor& f, const Tensor& w);

// ---- reductions ----
Tensor reduce_sum(const Tensor& a);
Tensor reduce_sum(const Tensor& a, int axis);
Tensor reduce_mean(const Tensor& a);
Tensor reduce_mean(const Tensor& a, int axis);

// ---- Fourier transforms along axis 0, batched over remaining axes ----
// Forward DFT is unnormalized; inverses divide by the represented source
// length, so enlarging the output grid is exact band-limited interpolation.

/// [n, c] real -> [n/2+1, c] complex. n must be a power of two unless
/// allow_direct is set, which enables the O(n^2) fallback for odd oracle sizes.
Tensor rfft1(const Tensor& x, bool allow_direct = false);

/// [m, c] complex -> [n_out, c] real; requires n_out >= 2*(m-1).
Tensor irfft1(const Tensor& h, std::int64_t n_out, bool allow_direct = false);

/// Grid spectrum of a [n0*n1, c] real field: rfft along axis 1, full complex
/// FFT along axis 0. Output shape [n0, n1/2+1, c].
Tensor rfft2(const Tensor& x, std::int64_t n0, std::int64_t n1);

/// Inverse of rfft2 for a caller-positioned spectrum [n0, n1/2+1, c];
/// output [n0*n1, c] real with n1 = 2*(dim(1)-1).
Tensor irfft2(const Tensor& h);

} // namespace nok::ops

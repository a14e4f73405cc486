#pragma once

#include <complex>
#include <vector>

namespace nok::fft {

using cd = std::complex<double>;

bool is_pow2(std::size_t n);

/// In-place radix-2 Cooley-Tukey DFT of a power-of-two-length buffer.
/// Forward transform is unnormalized: X_k = sum_j x_j e^{-2*pi*i*j*k/n}.
/// The inverse carries the 1/n factor.
void cfft(std::vector<cd>& data, bool inverse);

/// Strided transform: `count` interleaved signals of length n, element j of
/// signal s at data[j*stride + s]. Used to batch transforms across channels.
void cfft_strided(cd* data, std::size_t n, std::size_t stride, std::size_t count, bool inverse);

/// Direct O(n^2) DFT for lengths that are not powers of two. Only intended
/// for small oracle tests; gated by `allow_direct` at the tensor-op level.
void dft_direct(std::vector<cd>& data, bool inverse);

/// Real-to-complex transform, returning the n/2+1 nonnegative-frequency
/// coefficients of the unnormalized DFT.
std::vector<cd> rfft(const std::vector<double>& x);

/// Inverse of rfft. `half` holds m coefficients for frequencies 0..m-1 and
/// represents a real signal of length n_src = 2*(m-1). The output is the
/// band-limited signal evaluated on n points; normalization is 1/n_src, so
/// n > n_src performs exact Fourier interpolation (zero-padded modes).
/// Requires n >= n_src.
std::vector<double> irfft(const std::vector<cd>& half, std::size_t n);

} // namespace nok::fft

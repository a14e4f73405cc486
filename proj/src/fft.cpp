#include "nok/fft.hpp"

#include <cmath>

#include "nok/errors.hpp"

namespace nok::fft {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

bool is_pow2(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

void cfft_strided(cd* data, std::size_t n, std::size_t stride, std::size_t count, bool inverse) {
    if (!is_pow2(n)) throw unsupported_length_error("cfft: length must be a power of two");
    if (n == 1) return;
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) {
            for (std::size_t s = 0; s < count; ++s)
                std::swap(data[i * stride + s], data[j * stride + s]);
        }
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? kTwoPi : -kTwoPi) / static_cast<double>(len);
        const cd wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cd w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                for (std::size_t s = 0; s < count; ++s) {
                    cd& a = data[(i + j) * stride + s];
                    cd& b = data[(i + j + len / 2) * stride + s];
                    cd u = a;
                    cd v = b * w;
                    a = u + v;
                    b = u - v;
                }
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n * stride; ++i) data[i] *= inv;
    }
}

void cfft(std::vector<cd>& data, bool inverse) {
    cfft_strided(data.data(), data.size(), 1, 1, inverse);
}

void dft_direct(std::vector<cd>& data, bool inverse) {
    const std::size_t n = data.size();
    std::vector<cd> out(n, cd(0.0, 0.0));
    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < n; ++j) {
            double ang = sign * kTwoPi * static_cast<double>(j * k % n) / static_cast<double>(n);
            out[k] += data[j] * cd(std::cos(ang), std::sin(ang));
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& v : out) v *= inv;
    }
    data = std::move(out);
}

std::vector<cd> rfft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<cd> buf(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = cd(x[i], 0.0);
    if (is_pow2(n)) {
        cfft(buf, false);
    } else {
        throw unsupported_length_error("rfft: length must be a power of two");
    }
    buf.resize(n / 2 + 1);
    return buf;
}

std::vector<double> irfft(const std::vector<cd>& half, std::size_t n) {
    const std::size_t m = half.size();
    if (m == 0) throw invalid_argument_error("irfft: empty spectrum");
    const std::size_t n_src = m == 1 ? 1 : 2 * (m - 1);
    if (n < n_src) throw invalid_argument_error("irfft: output length smaller than represented modes");
    if (!is_pow2(n)) throw unsupported_length_error("irfft: length must be a power of two");
    // Hermitian extension to a full spectrum of length n, rescaled so the
    // inverse transform divides by n_src (band-limited interpolation).
    std::vector<cd> full(n, cd(0.0, 0.0));
    full[0] = cd(half[0].real(), 0.0);
    const std::size_t top = m - 1; // source Nyquist frequency n_src/2
    for (std::size_t k = 1; k <= top && k < m; ++k) {
        if (k == top && n == n_src) {
            full[k] = cd(half[k].real(), 0.0); // self-conjugate Nyquist bin
        } else if (k == top) {
            // interpolation: split the source Nyquist between +/- frequencies
            full[k] = half[k] * 0.5;
            full[n - k] = std::conj(half[k]) * 0.5;
        } else {
            full[k] = half[k];
            full[n - k] = std::conj(half[k]);
        }
    }
    const double scale = static_cast<double>(n) / static_cast<double>(n_src);
    cfft(full, true);
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = full[j].real() * scale;
    return out;
}

} // namespace nok::fft

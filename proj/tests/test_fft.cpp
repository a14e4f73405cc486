#include <cmath>

#include "doctest.h"
#include "nok/fft.hpp"
#include "nok/ops.hpp"
#include "nok/rng.hpp"

using namespace nok;

namespace {
constexpr double kPi = 3.14159265358979323846;

std::vector<double> random_signal(std::int64_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> x(static_cast<std::size_t>(n));
    for (auto& v : x) v = rng.normal();
    return x;
}
} // namespace

TEST_CASE("cfft roundtrip and known coefficients") {
    for (std::size_t n : {2u, 8u, 64u}) {
        auto x = random_signal(static_cast<std::int64_t>(n), 11 + n);
        std::vector<fft::cd> z(x.begin(), x.end());
        auto orig = z;
        fft::cfft(z, false);
        fft::cfft(z, true);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(z[i] - orig[i]) < 1e-12);
    }
    // x_j = cos(2 pi j / 8): X_1 = X_7 = 4, everything else 0
    std::vector<fft::cd> z(8);
    for (int j = 0; j < 8; ++j) z[static_cast<std::size_t>(j)] = std::cos(2.0 * kPi * j / 8.0);
    fft::cfft(z, false);
    for (int k = 0; k < 8; ++k) {
        const double expect = (k == 1 || k == 7) ? 4.0 : 0.0;
        CHECK(std::abs(z[static_cast<std::size_t>(k)] - expect) < 1e-12);
    }
}

TEST_CASE("rfft matches direct DFT and Parseval holds") {
    const std::int64_t n = 32;
    auto x = random_signal(n, 3);
    auto half = fft::rfft(x);
    REQUIRE(half.size() == 17);
    std::vector<fft::cd> full(x.begin(), x.end());
    fft::dft_direct(full, false);
    for (std::size_t k = 0; k < half.size(); ++k) CHECK(std::abs(half[k] - full[k]) < 1e-10);

    // sum |x|^2 = (1/n) sum |X|^2
    double t = 0.0, f = 0.0;
    for (double v : x) t += v * v;
    for (std::size_t k = 0; k < full.size(); ++k) f += std::norm(full[k]);
    CHECK(t == doctest::Approx(f / static_cast<double>(n)).epsilon(1e-12));
}

TEST_CASE("irfft inverts rfft and interpolates band-limited signals") {
    const std::int64_t n = 16;
    auto x = random_signal(n, 5);
    auto back = fft::irfft(fft::rfft(x), static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i] == doctest::Approx(x[static_cast<std::size_t>(i)]).epsilon(1e-12));

    // cos(2 pi x) sampled at 8 points, interpolated to 16: exact
    std::vector<double> c8(8);
    for (int j = 0; j < 8; ++j) c8[static_cast<std::size_t>(j)] = std::cos(2.0 * kPi * j / 8.0);
    auto c16 = fft::irfft(fft::rfft(c8), 16);
    for (int j = 0; j < 16; ++j) CHECK(std::abs(c16[static_cast<std::size_t>(j)] - std::cos(2.0 * kPi * j / 16.0)) < 1e-10);
}

TEST_CASE("fft linearity") {
    const std::int64_t n = 32;
    auto x = random_signal(n, 7), y = random_signal(n, 9);
    auto fx = fft::rfft(x), fy = fft::rfft(y);
    std::vector<double> z(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = 2.0 * x[i] - 3.0 * y[i];
    auto fz = fft::rfft(z);
    for (std::size_t k = 0; k < fz.size(); ++k) CHECK(std::abs(fz[k] - (2.0 * fx[k] - 3.0 * fy[k])) < 1e-10);
}

TEST_CASE("rfft2/irfft2 roundtrip and column transform layout") {
    const std::int64_t n0 = 8, n1 = 16, c = 3;
    Rng rng(21);
    std::vector<double> v(static_cast<std::size_t>(n0 * n1 * c));
    for (auto& e : v) e = rng.normal();
    Tensor x = Tensor::from_real({n0 * n1, c}, std::move(v));
    Tensor h = ops::rfft2(x, n0, n1);
    REQUIRE(h.shape() == Shape{n0, n1 / 2 + 1, c});
    Tensor back = ops::irfft2(h);
    const auto& a = x.rdata();
    const auto& b = back.rdata();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-11);

    // a pure 2-d mode lands in exactly one (conjugate-paired) spectral bin
    std::vector<double> m(static_cast<std::size_t>(n0 * n1));
    for (std::int64_t r = 0; r < n0; ++r)
        for (std::int64_t q = 0; q < n1; ++q)
            m[static_cast<std::size_t>(r * n1 + q)] =
                std::cos(2.0 * kPi * (2.0 * r / n0 + 3.0 * q / n1));
    Tensor hm = ops::rfft2(Tensor::from_real({n0 * n1, 1}, std::move(m)), n0, n1);
    const auto& hv = hm.cdata();
    const std::int64_t n1h = n1 / 2 + 1;
    for (std::int64_t r = 0; r < n0; ++r)
        for (std::int64_t q = 0; q < n1h; ++q) {
            const double expect = (r == 2 && q == 3) ? n0 * n1 / 2.0 : 0.0;
            CHECK(std::abs(hv[static_cast<std::size_t>(r * n1h + q)] - expect) < 1e-9);
        }
}

TEST_CASE("non-power-of-two lengths are rejected without the direct fallback") {
    Tensor x = Tensor::from_real({6, 1}, {1, 2, 3, 4, 5, 6});
    CHECK_THROWS_AS((void)ops::rfft1(x), unsupported_length_error);
    Tensor ok = ops::rfft1(x, true); // direct fallback for oracle sizes
    std::vector<fft::cd> z(6);
    for (int i = 0; i < 6; ++i) z[static_cast<std::size_t>(i)] = 1.0 + i;
    fft::dft_direct(z, false);
    for (int k = 0; k < 4; ++k) CHECK(std::abs(ok.cdata()[static_cast<std::size_t>(k)] - z[static_cast<std::size_t>(k)]) < 1e-12);
}

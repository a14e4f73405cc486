#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace nok {

/// Deterministic random stream. Uniform and normal draws are generated from
/// mt19937_64 bits directly (not via std:: distributions, whose output is
/// implementation-defined), so a given seed yields the same values everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    std::uint64_t bits() { return gen_(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // modulo bias is irrelevant for our n << 2^64
        return gen_() % n;
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace nok

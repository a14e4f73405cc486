#pragma once

#include "nok/domain.hpp"

namespace nok {

/// Gaussian random field on the unit torus with spectral density
/// sigma^2 * (4 pi^2 |k|^2 + tau^2)^(-alpha), hard band-limited at |k_axis| <= kmax
/// so that stride subsampling down to 2*kmax+2 points per axis is alias-free.
struct GrfSpec {
    double sigma = 1.0;
    double tau = 3.0;
    double alpha = 2.0;
    std::int64_t kmax = 7;

    void validate(int dim) const;
};

/// Spectral synthesis of one sample; deterministic per seed.
Field grf_sample(const GrfSpec& spec, const DiscPtr& grid, std::uint64_t seed);

/// Zero-mean solution of -lap u = f on the unit torus2d (spectral inversion).
Field poisson_solve(const Field& f);

/// Forcing/solution pairs sharing one native grid.
struct Dataset {
    DiscPtr grid;
    std::vector<Field> forcing;
    std::vector<Field> solution;
    GrfSpec spec;
    std::uint64_t seed = 0;

    std::int64_t count() const { return static_cast<std::int64_t>(forcing.size()); }
};

Dataset generate_dataset(const GrfSpec& spec, std::int64_t n_per_axis, std::int64_t count,
                         std::uint64_t seed);
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

} // namespace nok

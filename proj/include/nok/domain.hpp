#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "nok/tensor.hpp"

namespace nok {

enum class DomainKind { Interval, Torus1d, Square, Torus2d };

/// Axis-aligned computational domain. Torus kinds identify opposite bounds.
struct Domain {
    DomainKind kind = DomainKind::Interval;
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{1.0, 1.0};

    int dim() const { return (kind == DomainKind::Interval || kind == DomainKind::Torus1d) ? 1 : 2; }
    bool periodic() const { return kind == DomainKind::Torus1d || kind == DomainKind::Torus2d; }
    double length(int axis) const { return hi[static_cast<std::size_t>(axis)] - lo[static_cast<std::size_t>(axis)]; }
    double measure() const;
    void validate() const;

    static Domain interval(double a = 0.0, double b = 1.0);
    static Domain torus1d(double a = 0.0, double b = 1.0);
    static Domain square(double a = 0.0, double b = 1.0);
    static Domain torus2d(double a = 0.0, double b = 1.0);
};

/// Point cloud with per-point quadrature weights. grid_shape holds per-axis
/// counts when the points form a structured grid (row-major scan order) and
/// is empty for unstructured clouds.
struct Discretization {
    Domain domain;
    Tensor points; // [n, d]
    std::vector<double> weights;
    Shape grid_shape;

    std::int64_t size() const { return points.dim(0); }
    bool is_grid() const { return !grid_shape.empty(); }
    void validate() const;
};

using DiscPtr = std::shared_ptr<const Discretization>;

/// Function values sampled on a discretization (n rows, c channels).
struct Field {
    DiscPtr disc;
    Tensor values; // [n, c]

    std::int64_t channels() const { return values.dim(1); }
    void validate() const;
};

/// Nested discretizations: each level's points are a prefix of the next.
struct RefinementChain {
    std::vector<DiscPtr> levels;
};

/// Equispaced grid. Torus kinds exclude the identified right endpoint and get
/// equal weights; interval/square grids include both endpoints and use the
/// Riemann boundary rule (per axis, multiplied across axes in 2-d).
DiscPtr uniform_grid(const Domain& domain, std::int64_t n_per_axis);

/// Midpoint-rule weights for sorted 1-d points: interior (x_{i+1}-x_{i-1})/2,
/// boundary half-gap plus the gap to the domain end; torus wraps around.
std::vector<double> riemann_weights_1d(const std::vector<double>& points, const Domain& domain);

/// Monte-Carlo weights w_i = 1 / (n * p(x_i)) for points drawn from density p.
std::vector<double> monte_carlo_weights(const Tensor& points,
                                        const std::function<double(const double*)>& density);

/// Per-channel quadrature sum  sum_i values[i,:] * w_i.
std::vector<double> integrate(const Field& field);

/// Dyadic refinement of a grid discretization; level k+1 doubles the point
/// count per axis (cells for interval kinds) and keeps level k's points as a
/// row prefix.
RefinementChain refine(const DiscPtr& disc, int levels);

/// Restriction to target_n points: stride subsampling for grids (target must
/// tile the grid evenly), uniform without-replacement draw for clouds.
/// Weights are recomputed with the rule matching the construction.
Field subsample(const Field& field, std::int64_t target_n, std::uint64_t seed);

DiscPtr make_disc(Domain domain, Tensor points, std::vector<double> weights, Shape grid_shape = {});

} // namespace nok

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "nok/tensor.hpp"

namespace nok {

/// Delaunay triangulation of a planar point set via Bowyer-Watson.
/// Returned triangles index the input rows; orientation is normalized CCW.
std::vector<std::array<std::int64_t, 3>> delaunay_triangulate(const Tensor& points);

/// Quadrature weights from the triangulation: each triangle contributes a
/// third of its area to each of its vertices. Weights sum to the area of the
/// convex hull of the points.
std::vector<double> delaunay_weights_2d(const Tensor& points);

} // namespace nok

#pragma once

#include "nok/domain.hpp"

namespace nok {

enum class DerivMode { Fourier, CentralDifference };

/// Quadrature L2 loss  sum_j |pred - target|^2(y_j) w_j  (summed over channels).
Tensor l2_loss(const Tensor& pred, const Tensor& target, const Discretization& disc);

/// sqrt(l2_loss) / sqrt(sum |target|^2 w); errors on a zero-norm target.
Tensor relative_l2(const Tensor& pred, const Tensor& target, const Discretization& disc);

/// L2 plus the L2 of the gradient mismatch along every axis.
Tensor h1_loss(const Tensor& pred, const Tensor& target, const Discretization& disc, DerivMode mode);

/// Spectral derivative along `axis` on an equispaced torus grid. The Nyquist
/// mode's derivative is set to zero.
Tensor fourier_derivative_values(const Tensor& values, const Discretization& disc, int axis);
Field fourier_derivative(const Field& field, int axis);

/// Physics residual ||(-lap u) - f||^2 on a torus2d grid, Laplacian spectral.
Tensor poisson_residual(const Tensor& u, const Tensor& f, const Discretization& disc);

/// Flattened [n, n/2+1] multipliers 4*pi^2*|k|^2 of -lap on the unit torus2d
/// grid (row-major over the rfft2 spectrum layout); shared with the data
/// module's spectral Poisson solver.
std::vector<double> neg_laplace_multiplier(std::int64_t n);

} // namespace nok

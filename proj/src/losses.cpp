#include "nok/losses.hpp"

#include <cmath>

#include "nok/ops.hpp"

namespace nok {

namespace {

constexpr double kPi = 3.14159265358979323846;

Tensor weight_column(const Discretization& disc) {
    return Tensor::from_real({disc.size(), 1}, std::vector<double>(disc.weights));
}

std::int64_t grid_side(const Discretization& disc) {
    if (!disc.is_grid()) throw unsupported_domain_error("spectral derivative requires a grid");
    for (std::size_t a = 1; a < disc.grid_shape.size(); ++a)
        if (disc.grid_shape[a] != disc.grid_shape[0]) throw unsupported_domain_error("grid sides must be equal");
    return disc.grid_shape[0];
}

Tensor central_difference(const Tensor& values, const Discretization& disc, int axis) {
    const std::int64_t n = grid_side(disc);
    const double h = disc.domain.length(axis) / static_cast<double>(n);
    const int d = disc.domain.dim();
    const std::int64_t total = values.dim(0);
    std::vector<std::int64_t> up(static_cast<std::size_t>(total)), down(static_cast<std::size_t>(total));
    if (d == 1) {
        for (std::int64_t j = 0; j < n; ++j) {
            up[static_cast<std::size_t>(j)] = (j + 1) % n;
            down[static_cast<std::size_t>(j)] = (j - 1 + n) % n;
        }
    } else {
        for (std::int64_t j0 = 0; j0 < n; ++j0)
            for (std::int64_t j1 = 0; j1 < n; ++j1) {
                const std::int64_t r = j0 * n + j1;
                if (axis == 0) {
                    up[static_cast<std::size_t>(r)] = ((j0 + 1) % n) * n + j1;
                    down[static_cast<std::size_t>(r)] = ((j0 - 1 + n) % n) * n + j1;
                } else {
                    up[static_cast<std::size_t>(r)] = j0 * n + (j1 + 1) % n;
                    down[static_cast<std::size_t>(r)] = j0 * n + (j1 - 1 + n) % n;
                }
            }
    }
    return ops::scale(ops::sub(ops::take_rows(values, up), ops::take_rows(values, down)), 0.5 / h);
}

} // namespace

Tensor l2_loss(const Tensor& pred, const Tensor& target, const Discretization& disc) {
    if (pred.shape() != target.shape()) throw shape_error("l2_loss: shape mismatch");
    if (pred.dim(0) != disc.size()) throw shape_error("l2_loss: discretization mismatch");
    Tensor sq = ops::abs2(ops::sub(pred, target));
    return ops::reduce_sum(ops::mul(sq, weight_column(disc)));
}

Tensor relative_l2(const Tensor& pred, const Tensor& target, const Discretization& disc) {
    Tensor den = ops::sqrt(l2_loss(target, Tensor::zeros(target.shape(), target.dtype()), disc));
    if (den.item() < 1e-14) throw division_guard_error("relative_l2: zero-norm target");
    return ops::div(ops::sqrt(l2_loss(pred, target, disc)), den);
}

std::vector<double> neg_laplace_multiplier(std::int64_t n) {
    const std::int64_t n1h = n / 2 + 1;
    std::vector<double> m(static_cast<std::size_t>(n * n1h));
    for (std::int64_t k0 = 0; k0 < n; ++k0) {
        const double s0 = static_cast<double>(k0 <= n / 2 ? k0 : k0 - n);
        for (std::int64_t k1 = 0; k1 < n1h; ++k1) {
            const double s1 = static_cast<double>(k1);
            m[static_cast<std::size_t>(k0 * n1h + k1)] = 4.0 * kPi * kPi * (s0 * s0 + s1 * s1);
        }
    }
    return m;
}

Tensor fourier_derivative_values(const Tensor& values, const Discretization& disc, int axis) {
    if (!disc.domain.periodic()) throw unsupported_domain_error("fourier_derivative: torus domains only");
    const std::int64_t n = grid_side(disc);
    const int d = disc.domain.dim();
    if (axis < 0 || axis >= d) throw invalid_argument_error("fourier_derivative: bad axis");
    const double L = disc.domain.length(axis);

    if (d == 1) {
        const std::int64_t m = n / 2 + 1;
        std::vector<cd> mult(static_cast<std::size_t>(m));
        for (std::int64_t k = 0; k < m; ++k)
            mult[static_cast<std::size_t>(k)] = (2 * k == n) ? cd(0.0, 0.0)
                                                             : cd(0.0, 2.0 * kPi * static_cast<double>(k) / L);
        Tensor h = ops::rfft1(values);
        return ops::irfft1(ops::mul(h, Tensor::from_complex({m, 1}, std::move(mult))), n);
    }
    const std::int64_t n1h = n / 2 + 1;
    Tensor h = ops::rfft2(values, n, n);
    Tensor mult;
    if (axis == 0) {
        std::vector<cd> mv(static_cast<std::size_t>(n));
        for (std::int64_t k0 = 0; k0 < n; ++k0) {
            const std::int64_t s = k0 <= n / 2 ? k0 : k0 - n;
            mv[static_cast<std::size_t>(k0)] = (2 * k0 == n) ? cd(0.0, 0.0) : cd(0.0, 2.0 * kPi * static_cast<double>(s) / L);
        }
        mult = Tensor::from_complex({n, 1, 1}, std::move(mv));
    } else {
        std::vector<cd> mv(static_cast<std::size_t>(n1h));
        for (std::int64_t k1 = 0; k1 < n1h; ++k1)
            mv[static_cast<std::size_t>(k1)] = (2 * k1 == n) ? cd(0.0, 0.0) : cd(0.0, 2.0 * kPi * static_cast<double>(k1) / L);
        mult = Tensor::from_complex({1, n1h, 1}, std::move(mv));
    }
    return ops::irfft2(ops::mul(h, mult));
}

Field fourier_derivative(const Field& field, int axis) {
    field.validate();
    Field out;
    out.disc = field.disc;
    out.values = fourier_derivative_values(field.values, *field.disc, axis);
    return out;
}

Tensor h1_loss(const Tensor& pred, const Tensor& target, const Discretization& disc, DerivMode mode) {
    Tensor total = l2_loss(pred, target, disc);
    Tensor diff = ops::sub(pred, target);
    for (int axis = 0; axis < disc.domain.dim(); ++axis) {
        Tensor ddiff = mode == DerivMode::Fourier ? fourier_derivative_values(diff, disc, axis)
                                                  : central_difference(diff, disc, axis);
        total = ops::add(total, ops::reduce_sum(ops::mul(ops::abs2(ddiff), weight_column(disc))));
    }
    return total;
}

Tensor poisson_residual(const Tensor& u, const Tensor& f, const Discretization& disc) {
    if (disc.domain.kind != DomainKind::Torus2d) throw unsupported_domain_error("poisson_residual: torus2d grids only");
    const std::int64_t n = grid_side(disc);
    const std::int64_t n1h = n / 2 + 1;
    Tensor mult = Tensor::from_real({n, n1h, 1}, neg_laplace_multiplier(n));
    Tensor neglap = ops::irfft2(ops::mul(ops::rfft2(u, n, n), mult));
    return l2_loss(neglap, f, disc);
}

} // namespace nok

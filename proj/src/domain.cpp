#include "nok/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nok/delaunay.hpp"
#include "nok/rng.hpp"

namespace nok {

double Domain::measure() const {
    double m = 1.0;
    for (int a = 0; a < dim(); ++a) m *= length(a);
    return m;
}

void Domain::validate() const {
    for (int a = 0; a < dim(); ++a)
        if (!(lo[static_cast<std::size_t>(a)] < hi[static_cast<std::size_t>(a)]))
            throw invalid_argument_error("domain bounds must satisfy lower < upper");
}

Domain Domain::interval(double a, double b) { return Domain{DomainKind::Interval, {a, 0.0}, {b, 1.0}}; }
Domain Domain::torus1d(double a, double b) { return Domain{DomainKind::Torus1d, {a, 0.0}, {b, 1.0}}; }
Domain Domain::square(double a, double b) { return Domain{DomainKind::Square, {a, a}, {b, b}}; }
Domain Domain::torus2d(double a, double b) { return Domain{DomainKind::Torus2d, {a, a}, {b, b}}; }

void Discretization::validate() const {
    domain.validate();
    if (points.rank() != 2 || points.dim(1) != domain.dim())
        throw shape_error("discretization points must be [n, d] with d matching the domain");
    const std::int64_t n = points.dim(0);
    if (n < 1) throw invalid_argument_error("discretization needs at least one point");
    if (static_cast<std::int64_t>(weights.size()) != n)
        throw shape_error("weight count does not match point count");
    for (double w : weights)
        if (w < 0.0) throw invalid_argument_error("quadrature weights must be nonnegative");
}

void Field::validate() const {
    if (!disc) throw invalid_argument_error("field without discretization");
    if (values.rank() != 2 || values.dim(0) != disc->size())
        throw shape_error("field values must be [n, c] with n matching the discretization");
    if (values.dim(1) < 1) throw shape_error("field needs at least one channel");
}

DiscPtr make_disc(Domain domain, Tensor points, std::vector<double> weights, Shape grid_shape) {
    auto d = std::make_shared<Discretization>();
    d->domain = domain;
    d->points = std::move(points);
    d->weights = std::move(weights);
    d->grid_shape = std::move(grid_shape);
    d->validate();
    return d;
}

std::vector<double> riemann_weights_1d(const std::vector<double>& points, const Domain& domain) {
    domain.validate();
    const std::size_t n = points.size();
    if (n == 0) throw invalid_argument_error("riemann_weights_1d: no points");
    for (std::size_t i = 1; i < n; ++i)
        if (!(points[i] > points[i - 1]))
            throw invalid_argument_error("riemann_weights_1d: points must be strictly increasing");
    const double a = domain.lo[0], b = domain.hi[0];
    if (points.front() < a || points.back() > b)
        throw invalid_argument_error("riemann_weights_1d: point outside domain");
    std::vector<double> w(n);
    if (domain.periodic()) {
        const double len = b - a;
        if (n == 1) return {len};
        for (std::size_t i = 0; i < n; ++i) {
            const double next = i + 1 < n ? points[i + 1] : points[0] + len;
            const double prev = i > 0 ? points[i - 1] : points[n - 1] - len;
            w[i] = 0.5 * (next - prev);
        }
        return w;
    }
    if (n == 1) return {b - a};
    w[0] = 0.5 * (points[1] - points[0]) + (points[0] - a);
    w[n - 1] = 0.5 * (points[n - 1] - points[n - 2]) + (b - points[n - 1]);
    for (std::size_t i = 1; i + 1 < n; ++i) w[i] = 0.5 * (points[i + 1] - points[i - 1]);
    return w;
}

namespace {

std::vector<double> axis_coords(const Domain& domain, int axis, std::int64_t n) {
    const double a = domain.lo[static_cast<std::size_t>(axis)];
    const double len = domain.length(axis);
    std::vector<double> x(static_cast<std::size_t>(n));
    if (domain.periodic()) {
        for (std::int64_t i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = a + len * static_cast<double>(i) / static_cast<double>(n);
    } else if (n == 1) {
        x[0] = a + 0.5 * len;
    } else {
        for (std::int64_t i = 0; i < n; ++i)
            x[static_cast<std::size_t>(i)] = a + len * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return x;
}

std::vector<double> axis_weights(const Domain& domain, const std::vector<double>& coords, int axis) {
    Domain line = domain.periodic() ? Domain::torus1d(domain.lo[static_cast<std::size_t>(axis)], domain.hi[static_cast<std::size_t>(axis)])
                                    : Domain::interval(domain.lo[static_cast<std::size_t>(axis)], domain.hi[static_cast<std::size_t>(axis)]);
    return riemann_weights_1d(coords, line);
}

DiscPtr grid_from_axes(const Domain& domain, const std::vector<std::vector<double>>& axes,
                       const std::vector<std::int64_t>& order) {
    const int d = domain.dim();
    std::vector<std::vector<double>> aw;
    for (int a = 0; a < d; ++a) aw.push_back(axis_weights(domain, axes[static_cast<std::size_t>(a)], a));
    std::int64_t n = 1;
    Shape gshape;
    for (int a = 0; a < d; ++a) {
        n *= static_cast<std::int64_t>(axes[static_cast<std::size_t>(a)].size());
        gshape.push_back(static_cast<std::int64_t>(axes[static_cast<std::size_t>(a)].size()));
    }
    std::vector<double> pts(static_cast<std::size_t>(n * d));
    std::vector<double> w(static_cast<std::size_t>(n));
    for (std::int64_t row = 0; row < n; ++row) {
        const std::int64_t flat = order.empty() ? row : order[static_cast<std::size_t>(row)];
        std::int64_t rem = flat;
        double wp = 1.0;
        for (int a = d - 1; a >= 0; --a) {
            const auto na = static_cast<std::int64_t>(axes[static_cast<std::size_t>(a)].size());
            const std::int64_t ia = rem % na;
            rem /= na;
            pts[static_cast<std::size_t>(row * d + a)] = axes[static_cast<std::size_t>(a)][static_cast<std::size_t>(ia)];
            wp *= aw[static_cast<std::size_t>(a)][static_cast<std::size_t>(ia)];
        }
        w[static_cast<std::size_t>(row)] = wp;
    }
    return make_disc(domain, Tensor::from_real({n, d}, std::move(pts)), std::move(w),
                     order.empty() ? gshape : Shape{});
}

} // namespace

DiscPtr uniform_grid(const Domain& domain, std::int64_t n_per_axis) {
    domain.validate();
    if (n_per_axis <= 0) throw invalid_argument_error("uniform_grid: n_per_axis must be positive");
    std::vector<std::vector<double>> axes;
    for (int a = 0; a < domain.dim(); ++a) axes.push_back(axis_coords(domain, a, n_per_axis));
    return grid_from_axes(domain, axes, {});
}

std::vector<double> monte_carlo_weights(const Tensor& points,
                                        const std::function<double(const double*)>& density) {
    if (points.rank() != 2) throw shape_error("monte_carlo_weights: [n, d] points expected");
    const std::int64_t n = points.dim(0), d = points.dim(1);
    std::vector<double> w(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const double p = density(points.rdata().data() + i * d);
        if (!(p > 0.0)) throw invalid_argument_error("monte_carlo_weights: density must be positive at samples");
        w[static_cast<std::size_t>(i)] = 1.0 / (static_cast<double>(n) * p);
    }
    return w;
}

std::vector<double> integrate(const Field& field) {
    field.validate();
    const std::int64_t n = field.values.dim(0), c = field.values.dim(1);
    const auto& v = field.values.rdata();
    std::vector<double> out(static_cast<std::size_t>(c), 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
        const double w = field.disc->weights[static_cast<std::size_t>(i)];
        for (std::int64_t ch = 0; ch < c; ++ch) out[static_cast<std::size_t>(ch)] += v[static_cast<std::size_t>(i * c + ch)] * w;
    }
    return out;
}

RefinementChain refine(const DiscPtr& disc, int levels) {
    if (!disc->is_grid()) throw invalid_argument_error("refine: grid discretization required");
    if (levels < 0) throw invalid_argument_error("refine: negative level count");
    const Domain& dom = disc->domain;
    const int d = dom.dim();

    RefinementChain chain;
    chain.levels.push_back(disc);

    // stored-row -> per-axis grid indices, maintained across levels so that
    // every level keeps its predecessor's rows as a prefix
    std::vector<std::int64_t> axis_n(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) axis_n[static_cast<std::size_t>(a)] = disc->grid_shape[static_cast<std::size_t>(a)];
    std::vector<std::vector<std::int64_t>> idx;
    for (std::int64_t r = 0; r < disc->size(); ++r) {
        std::vector<std::int64_t> ia(static_cast<std::size_t>(d));
        std::int64_t rem = r;
        for (int a = d - 1; a >= 0; --a) {
            ia[static_cast<std::size_t>(a)] = rem % axis_n[static_cast<std::size_t>(a)];
            rem /= axis_n[static_cast<std::size_t>(a)];
        }
        idx.push_back(std::move(ia));
    }

    for (int l = 0; l < levels; ++l) {
        std::vector<std::int64_t> fine_n(static_cast<std::size_t>(d));
        std::vector<std::vector<double>> axes, aw;
        std::int64_t total = 1;
        for (int a = 0; a < d; ++a) {
            fine_n[static_cast<std::size_t>(a)] =
                dom.periodic() ? 2 * axis_n[static_cast<std::size_t>(a)] : 2 * axis_n[static_cast<std::size_t>(a)] - 1;
            total *= fine_n[static_cast<std::size_t>(a)];
            axes.push_back(axis_coords(dom, a, fine_n[static_cast<std::size_t>(a)]));
            aw.push_back(axis_weights(dom, axes.back(), a));
        }
        std::vector<std::vector<std::int64_t>> fine_idx;
        fine_idx.reserve(static_cast<std::size_t>(total));
        std::vector<char> taken(static_cast<std::size_t>(total), 0);
        auto flat_of = [&](const std::vector<std::int64_t>& ia) {
            std::int64_t f = 0;
            for (int a = 0; a < d; ++a) f = f * fine_n[static_cast<std::size_t>(a)] + ia[static_cast<std::size_t>(a)];
            return f;
        };
        for (const auto& ia : idx) { // coarse rows double their indices
            std::vector<std::int64_t> fa(static_cast<std::size_t>(d));
            for (int a = 0; a < d; ++a) fa[static_cast<std::size_t>(a)] = 2 * ia[static_cast<std::size_t>(a)];
            taken[static_cast<std::size_t>(flat_of(fa))] = 1;
            fine_idx.push_back(std::move(fa));
        }
        for (std::int64_t flat = 0; flat < total; ++flat) {
            if (taken[static_cast<std::size_t>(flat)]) continue;
            std::vector<std::int64_t> fa(static_cast<std::size_t>(d));
            std::int64_t rem = flat;
            for (int a = d - 1; a >= 0; --a) {
                fa[static_cast<std::size_t>(a)] = rem % fine_n[static_cast<std::size_t>(a)];
                rem /= fine_n[static_cast<std::size_t>(a)];
            }
            fine_idx.push_back(std::move(fa));
        }

        std::vector<double> pts(static_cast<std::size_t>(total * d));
        std::vector<double> w(static_cast<std::size_t>(total));
        for (std::int64_t r = 0; r < total; ++r) {
            double wp = 1.0;
            for (int a = 0; a < d; ++a) {
                const std::int64_t ia = fine_idx[static_cast<std::size_t>(r)][static_cast<std::size_t>(a)];
                pts[static_cast<std::size_t>(r * d + a)] = axes[static_cast<std::size_t>(a)][static_cast<std::size_t>(ia)];
                wp *= aw[static_cast<std::size_t>(a)][static_cast<std::size_t>(ia)];
            }
            w[static_cast<std::size_t>(r)] = wp;
        }
        // reordered rows are no longer in scan order, so no grid_shape
        chain.levels.push_back(make_disc(dom, Tensor::from_real({total, d}, std::move(pts)), std::move(w)));
        idx = std::move(fine_idx);
        axis_n = fine_n;
    }
    return chain;
}

Field subsample(const Field& field, std::int64_t target_n, std::uint64_t seed) {
    field.validate();
    const auto& disc = *field.disc;
    const std::int64_t n = disc.size(), c = field.values.dim(1), d = disc.domain.dim();
    if (target_n > n) throw invalid_argument_error("subsample: target larger than source");
    if (target_n < 1) throw invalid_argument_error("subsample: empty target");

    std::vector<std::int64_t> keep;
    bool strided = false;
    if (disc.is_grid()) {
        // per-axis stride; requires the target to tile the grid evenly
        std::int64_t per_axis_src = disc.grid_shape[0];
        std::int64_t per_axis_tgt = d == 1 ? target_n : static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(target_n))));
        if (d == 2 && per_axis_tgt * per_axis_tgt != target_n) per_axis_tgt = 0;
        if (per_axis_tgt <= 0 || per_axis_src % per_axis_tgt != 0)
            throw invalid_argument_error("subsample: target does not tile the grid evenly");
        {
            const std::int64_t s = per_axis_src / per_axis_tgt;
            strided = true;
            if (d == 1) {
                for (std::int64_t i = 0; i < per_axis_tgt; ++i) keep.push_back(i * s);
            } else {
                const std::int64_t n1 = disc.grid_shape[1];
                for (std::int64_t i = 0; i < per_axis_tgt; ++i)
                    for (std::int64_t j = 0; j < per_axis_tgt; ++j) keep.push_back(i * s * n1 + j * s);
            }
        }
    }
    if (!strided) {
        // uniform draw without replacement (partial Fisher-Yates)
        Rng rng(seed);
        std::vector<std::int64_t> pool(static_cast<std::size_t>(n));
        std::iota(pool.begin(), pool.end(), 0);
        for (std::int64_t i = 0; i < target_n; ++i) {
            const auto j = i + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n - i)));
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
        }
        keep.assign(pool.begin(), pool.begin() + target_n);
    }

    std::vector<double> pts(static_cast<std::size_t>(target_n * d));
    std::vector<double> vals(static_cast<std::size_t>(target_n * c));
    const auto& pv = disc.points.rdata();
    const auto& fv = field.values.rdata();
    for (std::int64_t r = 0; r < target_n; ++r) {
        const std::int64_t src = keep[static_cast<std::size_t>(r)];
        for (std::int64_t a = 0; a < d; ++a) pts[static_cast<std::size_t>(r * d + a)] = pv[static_cast<std::size_t>(src * d + a)];
        for (std::int64_t ch = 0; ch < c; ++ch) vals[static_cast<std::size_t>(r * c + ch)] = fv[static_cast<std::size_t>(src * c + ch)];
    }
    Tensor points = Tensor::from_real({target_n, d}, std::move(pts));

    std::vector<double> w;
    Shape gshape;
    if (strided) {
        if (d == 1) {
            gshape = {target_n};
        } else {
            const auto pa = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(target_n))));
            gshape = {pa, pa};
        }
        if (disc.domain.periodic()) {
            w.assign(static_cast<std::size_t>(target_n), disc.domain.measure() / static_cast<double>(target_n));
        } else if (d == 1) {
            std::vector<double> xs(points.rdata());
            w = riemann_weights_1d(xs, disc.domain);
        } else {
            // product rule from the strided axis coordinates
            const auto pa = gshape[0];
            std::vector<double> ax(static_cast<std::size_t>(pa));
            for (std::int64_t i = 0; i < pa; ++i) ax[static_cast<std::size_t>(i)] = points.rdata()[static_cast<std::size_t>(i * pa * d)];
            std::vector<double> ay(static_cast<std::size_t>(pa));
            for (std::int64_t j = 0; j < pa; ++j) ay[static_cast<std::size_t>(j)] = points.rdata()[static_cast<std::size_t>(j * d + 1)];
            auto wx = axis_weights(disc.domain, ax, 0);
            auto wy = axis_weights(disc.domain, ay, 1);
            w.resize(static_cast<std::size_t>(target_n));
            for (std::int64_t i = 0; i < pa; ++i)
                for (std::int64_t j = 0; j < pa; ++j)
                    w[static_cast<std::size_t>(i * pa + j)] = wx[static_cast<std::size_t>(i)] * wy[static_cast<std::size_t>(j)];
        }
    } else if (d == 1) {
        std::vector<std::int64_t> ord(static_cast<std::size_t>(target_n));
        std::iota(ord.begin(), ord.end(), 0);
        const auto& pr = points.rdata();
        std::sort(ord.begin(), ord.end(), [&](std::int64_t a, std::int64_t b) { return pr[static_cast<std::size_t>(a)] < pr[static_cast<std::size_t>(b)]; });
        std::vector<double> xs(static_cast<std::size_t>(target_n));
        for (std::int64_t i = 0; i < target_n; ++i) xs[static_cast<std::size_t>(i)] = pr[static_cast<std::size_t>(ord[static_cast<std::size_t>(i)])];
        auto ws = riemann_weights_1d(xs, disc.domain);
        w.resize(static_cast<std::size_t>(target_n));
        for (std::int64_t i = 0; i < target_n; ++i) w[static_cast<std::size_t>(ord[static_cast<std::size_t>(i)])] = ws[static_cast<std::size_t>(i)];
    } else {
        w = delaunay_weights_2d(points);
    }

    Field out;
    out.disc = make_disc(disc.domain, std::move(points), std::move(w), gshape);
    out.values = Tensor::from_real({target_n, c}, std::move(vals));
    return out;
}

} // namespace nok

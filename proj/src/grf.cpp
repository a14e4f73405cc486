#include "nok/grf.hpp"

#include <cmath>

#include "nok/container.hpp"
#include "nok/fft.hpp"
#include "nok/losses.hpp"
#include "nok/ops.hpp"
#include "nok/rng.hpp"

namespace nok {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void GrfSpec::validate(int dim) const {
    if (sigma <= 0.0 || tau <= 0.0) throw invalid_argument_error("grf: sigma and tau must be positive");
    if (alpha <= static_cast<double>(dim) / 2.0)
        throw invalid_argument_error("grf: alpha must exceed d/2 for a summable spectrum");
    if (kmax < 1) throw invalid_argument_error("grf: kmax must be positive");
}

Field grf_sample(const GrfSpec& spec, const DiscPtr& grid, std::uint64_t seed) {
    if (grid->domain.kind != DomainKind::Torus2d) throw unsupported_domain_error("grf: torus2d grids only");
    spec.validate(2);
    const std::int64_t n = grid->grid_shape.at(0);
    if (!fft::is_pow2(static_cast<std::size_t>(n))) throw unsupported_length_error("grf: grid side must be a power of two");
    if (spec.kmax >= n / 2) throw invalid_argument_error("grf: kmax must be below the grid Nyquist");

    Rng rng(seed);
    const double nn = static_cast<double>(n * n);
    std::vector<cd> F(static_cast<std::size_t>(n * n), cd(0.0, 0.0));
    auto put = [&](std::int64_t s0, std::int64_t s1, cd v) {
        const std::int64_t r = (s0 % n + n) % n;
        const std::int64_t c = (s1 % n + n) % n;
        F[static_cast<std::size_t>(r * n + c)] = v;
    };
    // canonical half-plane, fixed draw order for determinism
    for (std::int64_t s0 = 0; s0 <= spec.kmax; ++s0) {
        const std::int64_t s1_begin = s0 == 0 ? 1 : -spec.kmax;
        for (std::int64_t s1 = s1_begin; s1 <= spec.kmax; ++s1) {
            const double k2 = static_cast<double>(s0 * s0 + s1 * s1);
            const double density = spec.sigma * spec.sigma *
                                   std::pow(4.0 * kPi * kPi * k2 + spec.tau * spec.tau, -spec.alpha);
            const double amp = nn * std::sqrt(0.5 * density);
            const cd xi(rng.normal(), rng.normal());
            put(s0, s1, amp * xi);
            put(-s0, -s1, amp * std::conj(xi));
        }
    }
    // physical samples = (1/n^2) sum_k F_k e^{2 pi i k.x / n}
    for (std::int64_t r = 0; r < n; ++r) {
        std::vector<cd> row(F.begin() + r * n, F.begin() + (r + 1) * n);
        fft::cfft(row, true);
        for (std::int64_t c = 0; c < n; ++c) F[static_cast<std::size_t>(r * n + c)] = row[static_cast<std::size_t>(c)] * static_cast<double>(n);
    }
    fft::cfft_strided(F.data(), static_cast<std::size_t>(n), static_cast<std::size_t>(n),
                      static_cast<std::size_t>(n), true);
    std::vector<double> vals(static_cast<std::size_t>(n * n));
    for (std::int64_t i = 0; i < n * n; ++i) vals[static_cast<std::size_t>(i)] = F[static_cast<std::size_t>(i)].real();

    Field out;
    out.disc = grid;
    out.values = Tensor::from_real({n * n, 1}, std::move(vals));
    return out;
}

Field poisson_solve(const Field& f) {
    f.validate();
    const auto& disc = *f.disc;
    if (disc.domain.kind != DomainKind::Torus2d) throw unsupported_domain_error("poisson_solve: torus2d grids only");
    const std::int64_t n = disc.grid_shape.at(0);

    const auto mean = integrate(f);
    double m2 = 0.0;
    for (double m : mean) m2 += m * m;
    if (std::sqrt(m2) >= 1e-6) throw invalid_argument_error("poisson_solve: forcing is not mean-zero");

    const std::int64_t n1h = n / 2 + 1;
    auto mult = neg_laplace_multiplier(n);
    std::vector<double> inv(mult.size(), 0.0);
    for (std::size_t i = 1; i < mult.size(); ++i) inv[i] = 1.0 / mult[i];
    inv[0] = 0.0; // zero-mean gauge (also absorbs any residual forcing mean)

    Tensor fhat = ops::rfft2(f.values.detached(), n, n);
    Tensor uhat = ops::mul(fhat, Tensor::from_real({n, n1h, 1}, std::move(inv)));
    Field out;
    out.disc = f.disc;
    out.values = ops::irfft2(uhat);
    return out;
}

Dataset generate_dataset(const GrfSpec& spec, std::int64_t n_per_axis, std::int64_t count,
                         std::uint64_t seed) {
    if (count < 1) throw invalid_argument_error("generate_dataset: count must be positive");
    Dataset ds;
    ds.grid = uniform_grid(Domain::torus2d(), n_per_axis);
    ds.spec = spec;
    ds.seed = seed;
    for (std::int64_t i = 0; i < count; ++i) {
        const std::uint64_t sample_seed = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(i + 1);
        Field f = grf_sample(spec, ds.grid, sample_seed);
        ds.solution.push_back(poisson_solve(f));
        ds.forcing.push_back(std::move(f));
    }
    return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    const std::int64_t n = ds.grid->grid_shape.at(0);
    const std::int64_t count = ds.count();
    std::vector<double> fbuf, ubuf;
    fbuf.reserve(static_cast<std::size_t>(count * n * n));
    ubuf.reserve(static_cast<std::size_t>(count * n * n));
    for (std::int64_t i = 0; i < count; ++i) {
        const auto& fv = ds.forcing[static_cast<std::size_t>(i)].values.rdata();
        const auto& uv = ds.solution[static_cast<std::size_t>(i)].values.rdata();
        fbuf.insert(fbuf.end(), fv.begin(), fv.end());
        ubuf.insert(ubuf.end(), uv.begin(), uv.end());
    }
    std::map<std::string, std::string> meta{
        {"kind", "poisson-grf"},
        {"n", std::to_string(n)},
        {"count", std::to_string(count)},
        {"sigma", std::to_string(ds.spec.sigma)},
        {"tau", std::to_string(ds.spec.tau)},
        {"alpha", std::to_string(ds.spec.alpha)},
        {"kmax", std::to_string(ds.spec.kmax)},
        {"seed", std::to_string(ds.seed)},
    };
    container_write(path, {{"f", Tensor::from_real({count, n, n}, std::move(fbuf))},
                           {"u", Tensor::from_real({count, n, n}, std::move(ubuf))}},
                    meta);
}

Dataset load_dataset(const std::string& path) {
    Container c = container_read(path);
    Dataset ds;
    const std::int64_t n = std::stoll(c.meta.at("n"));
    const std::int64_t count = std::stoll(c.meta.at("count"));
    ds.spec.sigma = std::stod(c.meta.at("sigma"));
    ds.spec.tau = std::stod(c.meta.at("tau"));
    ds.spec.alpha = std::stod(c.meta.at("alpha"));
    ds.spec.kmax = std::stoll(c.meta.at("kmax"));
    ds.seed = std::stoull(c.meta.at("seed"));
    ds.grid = uniform_grid(Domain::torus2d(), n);
    const Tensor& f = c.get("f");
    const Tensor& u = c.get("u");
    if (f.shape() != Shape{count, n, n} || u.shape() != Shape{count, n, n})
        throw io_error("dataset: header metadata does not match array shapes in '" + path + "'");
    for (std::int64_t i = 0; i < count; ++i) {
        auto slice_of = [&](const Tensor& t) {
            std::vector<double> buf(t.rdata().begin() + i * n * n, t.rdata().begin() + (i + 1) * n * n);
            Field fd;
            fd.disc = ds.grid;
            fd.values = Tensor::from_real({n * n, 1}, std::move(buf));
            return fd;
        };
        ds.forcing.push_back(slice_of(f));
        ds.solution.push_back(slice_of(u));
    }
    return ds;
}

} // namespace nok

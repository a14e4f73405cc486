#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "nok/grf.hpp"
#include "nok/losses.hpp"
#include "nok/ops.hpp"

using namespace nok;

namespace {
constexpr double kPi = 3.14159265358979323846;

Field sample_2d(const DiscPtr& disc, const std::function<double(double, double)>& f) {
    std::vector<double> v(static_cast<std::size_t>(disc->size()));
    const auto& x = disc->points.rdata();
    for (std::int64_t i = 0; i < disc->size(); ++i)
        v[static_cast<std::size_t>(i)] = f(x[static_cast<std::size_t>(2 * i)], x[static_cast<std::size_t>(2 * i + 1)]);
    return {disc, Tensor::from_real({disc->size(), 1}, std::move(v))};
}

double max_abs(const Tensor& t) {
    double m = 0.0;
    for (double v : t.rdata()) m = std::max(m, std::fabs(v));
    return m;
}
} // namespace

TEST_CASE("grf samples are deterministic per seed and distinct across seeds") {
    GrfSpec spec;
    auto grid = uniform_grid(Domain::torus2d(), 32);
    Field a = grf_sample(spec, grid, 7);
    Field b = grf_sample(spec, grid, 7);
    Field c = grf_sample(spec, grid, 8);
    CHECK(a.values.rdata() == b.values.rdata());
    CHECK(a.values.rdata() != c.values.rdata());
    CHECK(max_abs(a.values) > 1e-3);
}

TEST_CASE("grf samples have zero mean") {
    GrfSpec spec;
    auto grid = uniform_grid(Domain::torus2d(), 64);
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        Field f = grf_sample(spec, grid, seed);
        CHECK(std::fabs(integrate(f)[0]) < 1e-12);
    }
}

TEST_CASE("grf samples are band-limited: subsampling commutes with synthesis") {
    // with kmax = 7 every mode survives a 64 -> 32 stride subsample, so the
    // coarse restriction of a fine sample equals the coarse grid's values.
    GrfSpec spec;
    auto fine = uniform_grid(Domain::torus2d(), 64);
    Field f = grf_sample(spec, fine, 11);
    Field coarse = subsample(f, 32 * 32, 0);
    // spectral content above kmax must vanish on the fine grid.
    Tensor h = ops::rfft2(f.values.detached(), 64, 64);
    const auto& c = h.cdata();
    const std::int64_t n1h = 33;
    double leak = 0.0;
    for (std::int64_t k0 = 0; k0 < 64; ++k0) {
        const std::int64_t s0 = k0 <= 32 ? k0 : k0 - 64;
        for (std::int64_t k1 = 0; k1 < n1h; ++k1)
            if (std::llabs(s0) > spec.kmax || k1 > spec.kmax)
                leak = std::max(leak, std::abs(c[static_cast<std::size_t>(k0 * n1h + k1)]));
    }
    CHECK(leak < 1e-9);
    // alias-free restriction: values at shared points match exactly.
    const auto& fv = f.values.rdata();
    const auto& cv = coarse.values.rdata();
    for (std::int64_t i0 = 0; i0 < 32; ++i0)
        for (std::int64_t i1 = 0; i1 < 32; ++i1)
            CHECK(cv[static_cast<std::size_t>(i0 * 32 + i1)] ==
                  fv[static_cast<std::size_t>((2 * i0) * 64 + 2 * i1)]);
}

TEST_CASE("grf spec validation") {
    auto grid = uniform_grid(Domain::torus2d(), 16);
    GrfSpec bad;
    bad.kmax = 8; // needs kmax < n/2
    CHECK_THROWS_AS((void)grf_sample(bad, grid, 1), invalid_argument_error);
    GrfSpec neg;
    neg.sigma = -1.0;
    CHECK_THROWS_AS((void)grf_sample(neg, grid, 1), invalid_argument_error);
}

TEST_CASE("poisson solve inverts the laplacian on an analytic forcing") {
    auto grid = uniform_grid(Domain::torus2d(), 32);
    Field f = sample_2d(grid, [](double x0, double x1) { return std::sin(2 * kPi * x0) * std::sin(2 * kPi * x1); });
    Field u = poisson_solve(f);
    const auto& x = grid->points.rdata();
    for (std::int64_t i = 0; i < grid->size(); ++i) {
        const double want = std::sin(2 * kPi * x[static_cast<std::size_t>(2 * i)]) *
                            std::sin(2 * kPi * x[static_cast<std::size_t>(2 * i + 1)]) / (8 * kPi * kPi);
        CHECK(u.values.rdata()[static_cast<std::size_t>(i)] == doctest::Approx(want).epsilon(1e-13));
    }
    // residual of the recovered solution is numerically zero.
    CHECK(poisson_residual(u.values, f.values, *grid).item() < 1e-22);
}

TEST_CASE("poisson solve rejects forcings with nonzero mean") {
    auto grid = uniform_grid(Domain::torus2d(), 16);
    Field one{grid, Tensor::from_real({grid->size(), 1}, std::vector<double>(static_cast<std::size_t>(grid->size()), 1.0))};
    CHECK_THROWS_AS((void)poisson_solve(one), invalid_argument_error);
}

TEST_CASE("generated datasets pair each forcing with its spectral solution") {
    GrfSpec spec;
    Dataset ds = generate_dataset(spec, 32, 4, 99);
    REQUIRE(ds.count() == 4);
    for (std::int64_t i = 0; i < ds.count(); ++i) {
        const Field& f = ds.forcing[static_cast<std::size_t>(i)];
        const Field& u = ds.solution[static_cast<std::size_t>(i)];
        CHECK(poisson_residual(u.values, f.values, *ds.grid).item() < 1e-18);
    }
    // samples are independent draws.
    CHECK(ds.forcing[0].values.rdata() != ds.forcing[1].values.rdata());
    // regeneration is bitwise identical.
    Dataset again = generate_dataset(spec, 32, 4, 99);
    for (std::int64_t i = 0; i < 4; ++i) {
        CHECK(ds.forcing[static_cast<std::size_t>(i)].values.rdata() ==
              again.forcing[static_cast<std::size_t>(i)].values.rdata());
        CHECK(ds.solution[static_cast<std::size_t>(i)].values.rdata() ==
              again.solution[static_cast<std::size_t>(i)].values.rdata());
    }
}

TEST_CASE("dataset save/load round-trips bitwise") {
    GrfSpec spec;
    spec.kmax = 5;
    Dataset ds = generate_dataset(spec, 16, 3, 42);
    const std::string path = "test_dataset_roundtrip.nopk";
    save_dataset(ds, path);
    Dataset back = load_dataset(path);
    std::remove(path.c_str());
    REQUIRE(back.count() == 3);
    CHECK(back.grid->size() == ds.grid->size());
    CHECK(back.spec.sigma == ds.spec.sigma);
    CHECK(back.spec.tau == ds.spec.tau);
    CHECK(back.spec.alpha == ds.spec.alpha);
    CHECK(back.spec.kmax == ds.spec.kmax);
    CHECK(back.seed == ds.seed);
    for (std::int64_t i = 0; i < 3; ++i) {
        CHECK(back.forcing[static_cast<std::size_t>(i)].values.rdata() ==
              ds.forcing[static_cast<std::size_t>(i)].values.rdata());
        CHECK(back.solution[static_cast<std::size_t>(i)].values.rdata() ==
              ds.solution[static_cast<std::size_t>(i)].values.rdata());
    }
}

#include <cmath>

#include "doctest.h"
#include "nok/baselines.hpp"
#include "nok/layers.hpp"
#include "nok/ops.hpp"

using namespace nok;

namespace {
constexpr double kPi = 3.14159265358979323846;

Field sample_1d(const DiscPtr& disc, const std::function<double(double)>& f) {
    std::vector<double> v(static_cast<std::size_t>(disc->size()));
    const auto& x = disc->points.rdata();
    for (std::int64_t i = 0; i < disc->size(); ++i) v[static_cast<std::size_t>(i)] = f(x[static_cast<std::size_t>(i)]);
    Field out{disc, Tensor::from_real({disc->size(), 1}, std::move(v))};
    return out;
}

void zero_param(ParamStore& store, const std::string& name) {
    auto p = store.find(name);
    REQUIRE(p != nullptr);
    p->value = Tensor::zeros(p->value.shape(), p->value.dtype());
}

void set_param(ParamStore& store, const std::string& name, std::vector<double> v) {
    auto p = store.find(name);
    REQUIRE(p != nullptr);
    p->value = Tensor::from_real(p->value.shape(), std::move(v));
}

/// Doubles point i into two coincident points with half weight each.
DiscPtr split_point(const DiscPtr& disc, std::int64_t i) {
    const std::int64_t n = disc->size(), d = disc->points.dim(1);
    std::vector<double> pts(disc->points.rdata());
    std::vector<double> w(disc->weights);
    for (std::int64_t a = 0; a < d; ++a) pts.push_back(pts[static_cast<std::size_t>(i * d + a)]);
    w[static_cast<std::size_t>(i)] *= 0.5;
    w.push_back(w[static_cast<std::size_t>(i)]);
    return make_disc(disc->domain, Tensor::from_real({n + 1, d}, std::move(pts)), std::move(w));
}

Field split_field(const Field& f, std::int64_t i) {
    const std::int64_t n = f.values.dim(0), c = f.values.dim(1);
    std::vector<double> v(f.values.rdata());
    for (std::int64_t ch = 0; ch < c; ++ch) v.push_back(v[static_cast<std::size_t>(i * c + ch)]);
    return {split_point(f.disc, i), Tensor::from_real({n + 1, c}, std::move(v))};
}

double max_abs_diff(const Tensor& a, const Tensor& b, std::int64_t rows) {
    double m = 0.0;
    const std::int64_t c = a.dim(1);
    for (std::int64_t i = 0; i < rows * c; ++i)
        m = std::max(m, std::fabs(a.rdata()[static_cast<std::size_t>(i)] - b.rdata()[static_cast<std::size_t>(i)]));
    return m;
}
} // namespace

TEST_CASE("positional encoding oracle at x = 0.5, F = 2") {
    Tensor coords = Tensor::from_real({1, 1}, {0.5});
    Tensor pe = positional_encoding(coords, 2);
    REQUIRE(pe.shape() == Shape{1, 4});
    // angles pi/2 and pi: sin {1, 0}, cos {0, -1}
    CHECK(pe.rdata()[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::fabs(pe.rdata()[1]) < 1e-15);
    CHECK(std::fabs(pe.rdata()[2]) < 1e-12);
    CHECK(pe.rdata()[3] == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("integral transform with a constant kernel reduces to quadrature") {
    Rng rng(5);
    ParamStore store;
    IntegralTransform layer("gno", 1, 1, {}, store, rng);
    zero_param(store, "gno.kernel.w2");
    set_param(store, "gno.kernel.b2", {2.5}); // kernel == 2.5 everywhere

    auto disc = uniform_grid(Domain::torus1d(), 8);
    Field f = sample_1d(disc, [](double x) { return std::sin(2.0 * kPi * x) + 2.0; });
    Field out = layer.forward(f);
    const double integral = integrate(f)[0];
    for (std::int64_t j = 0; j < 8; ++j)
        CHECK(out.values.rdata()[static_cast<std::size_t>(j)] == doctest::Approx(2.5 * integral).epsilon(1e-12));

    // nonlinear variant sums the kernel itself: constant kernel -> c * measure
    ParamStore store2;
    Rng rng2(6);
    IntegralTransform::Options no;
    no.nonlinear = true;
    IntegralTransform nl("gno2", 1, 1, no, store2, rng2);
    zero_param(store2, "gno2.kernel.w2");
    set_param(store2, "gno2.kernel.b2", {-1.5});
    Field out2 = nl.forward(f);
    for (std::int64_t j = 0; j < 8; ++j)
        CHECK(out2.values.rdata()[static_cast<std::size_t>(j)] == doctest::Approx(-1.5).epsilon(1e-12));
}

TEST_CASE("integral transform radius truncates and reports empty neighborhoods") {
    Rng rng(7);
    ParamStore store;
    IntegralTransform::Options o;
    o.radius = 0.2;
    IntegralTransform layer("gno", 1, 1, o, store, rng);
    auto disc = uniform_grid(Domain::torus1d(), 8);
    Field f = sample_1d(disc, [](double x) { return x; });
    CHECK_NOTHROW((void)layer.forward(f));

    // an isolated far-away query has nothing within the radius
    auto query = make_disc(Domain::torus1d(),
                           Tensor::from_real({8, 1}, disc->points.rdata()), std::vector<double>(disc->weights));
    IntegralTransform::Options tight;
    tight.radius = 1e-4;
    ParamStore s2;
    Rng r2(8);
    IntegralTransform layer2("gno3", 1, 1, tight, s2, r2);
    auto off_grid = make_disc(Domain::torus1d(), Tensor::from_real({1, 1}, {0.0312119}), {1.0});
    CHECK_THROWS_AS((void)layer2.forward(f, off_grid), empty_neighborhood_error);
    (void)query;
}

TEST_CASE("weight splitting leaves quadrature layers invariant") {
    auto disc = uniform_grid(Domain::torus1d(), 8);
    Field f = sample_1d(disc, [](double x) { return std::sin(2.0 * kPi * x) + 0.3 * std::cos(4.0 * kPi * x); });
    Field fs = split_field(f, 3);

    Rng rng(9);
    ParamStore store;
    IntegralTransform gno("gno", 1, 1, {}, store, rng);
    CHECK(max_abs_diff(gno.forward(f).values, gno.forward(fs, f.disc).values, 8) < 1e-12);

    AttentionLayer att("att", 1, 4, 1, store, rng);
    CHECK(max_abs_diff(att.forward(f).values, att.forward(fs).values, 8) < 1e-12);

    EncDecLayer::Options eo;
    eo.latent = 6;
    EncDecLayer ed("ed", 1, 1, eo, store, rng);
    CHECK(max_abs_diff(ed.forward(f, disc).values, ed.forward(fs, disc).values, 8) < 1e-12);

    // normalization statistics are quadrature sums, so they split the same way
    auto a = field_stats(f), b = field_stats(fs);
    CHECK(a.mu[0] == doctest::Approx(b.mu[0]).epsilon(1e-14));
    CHECK(a.sigma[0] == doctest::Approx(b.sigma[0]).epsilon(1e-14));
}

TEST_CASE("spectral conv: identity weights, mean mode, and exact interpolation") {
    Rng rng(11);
    ParamStore store;
    SpectralConv sc("sc", 1, 1, 1, 3, store, rng);
    auto ident = store.find("sc.w");
    REQUIRE(ident->value.shape() == Shape{3, 1, 1});
    ident->value = Tensor::from_complex({3, 1, 1}, {cd(1, 0), cd(1, 0), cd(1, 0)});

    auto disc = uniform_grid(Domain::torus1d(), 8);
    Field f = sample_1d(disc, [](double x) { return std::cos(2.0 * kPi * x) - 0.5 * std::sin(4.0 * kPi * x); });
    Field out = sc.forward(f);
    CHECK(max_abs_diff(out.values, f.values, 8) < 1e-12);

    // querying a finer grid performs exact band-limited interpolation
    Field fine = sc.forward(f, 16);
    auto fine_disc = uniform_grid(Domain::torus1d(), 16);
    Field expect = sample_1d(fine_disc, [](double x) { return std::cos(2.0 * kPi * x) - 0.5 * std::sin(4.0 * kPi * x); });
    CHECK(max_abs_diff(fine.values, expect.values, 16) < 1e-10);

    // keeping only mode 0 yields the mean
    ident->value = Tensor::from_complex({3, 1, 1}, {cd(1, 0), cd(0, 0), cd(0, 0)});
    Field mean = sc.forward(sample_1d(disc, [](double x) { return 1.75 + std::sin(2.0 * kPi * x); }));
    for (std::int64_t i = 0; i < 8; ++i)
        CHECK(mean.values.rdata()[static_cast<std::size_t>(i)] == doctest::Approx(1.75).epsilon(1e-12));
}

TEST_CASE("spectral conv equals direct quadrature convolution for band-limited kernels") {
    // kernel g(x) = a0 + a1 cos(2 pi x) + a2 cos(4 pi x); rfft weights are the
    // e^{2 pi i k x} coefficients {a0, a1/2, a2/2}
    const double a0 = 0.4, a1 = -1.1, a2 = 0.75;
    Rng rng(13);
    ParamStore store;
    SpectralConv sc("sc", 1, 1, 1, 3, store, rng);
    store.find("sc.w")->value = Tensor::from_complex({3, 1, 1}, {cd(a0, 0), cd(a1 / 2, 0), cd(a2 / 2, 0)});

    const std::int64_t n = 128;
    auto disc = uniform_grid(Domain::torus1d(), n);
    Field f = sample_1d(disc, [](double x) {
        return std::sin(2.0 * kPi * x) + 0.2 * std::cos(6.0 * kPi * x) + 0.7;
    });
    Field spec = sc.forward(f);

    const auto& x = disc->points.rdata();
    const auto& fv = f.values.rdata();
    for (std::int64_t j = 0; j < n; j += 7) {
        double direct = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            const double dxy = x[static_cast<std::size_t>(j)] - x[static_cast<std::size_t>(i)];
            direct += (a0 + a1 * std::cos(2.0 * kPi * dxy) + a2 * std::cos(4.0 * kPi * dxy)) *
                      fv[static_cast<std::size_t>(i)] * disc->weights[static_cast<std::size_t>(i)];
        }
        CHECK(spec.values.rdata()[static_cast<std::size_t>(j)] == doctest::Approx(direct).epsilon(1e-6));
    }
}

TEST_CASE("attention with equal weights matches reference softmax attention") {
    Rng rng(17);
    ParamStore store;
    const std::int64_t c = 2, da = 3, dv = 2, n = 6;
    AttentionLayer att("att", c, da, dv, store, rng);

    auto disc = uniform_grid(Domain::torus1d(), n);
    std::vector<double> v(static_cast<std::size_t>(n * c));
    Rng data_rng(18);
    for (auto& e : v) e = data_rng.normal();
    Field f{disc, Tensor::from_real({n, c}, std::move(v))};
    Field out = att.forward(f);

    // reference: softmax(tau q k^T) v with tau = 1/sqrt(d_att)
    auto getp = [&](const char* name) { return store.find(std::string("att.") + name)->value; };
    Tensor k = ops::add(ops::matmul(f.values, getp("wk")), getp("bk"));
    Tensor q = ops::add(ops::matmul(f.values, getp("wq")), getp("bq"));
    Tensor vv = ops::add(ops::matmul(f.values, getp("wv")), getp("bv"));
    Tensor logits = ops::scale(ops::matmul(q, k, false, true), 1.0 / std::sqrt(static_cast<double>(da)));
    Tensor ref = ops::matmul(ops::softmax(logits), vv);
    CHECK(max_abs_diff(out.values, ref, n) < 1e-12);
}

TEST_CASE("encoder-decoder with the Fourier basis reproduces spectral conv") {
    // latent 5 = frequencies {0, 1, 2}; diagonal latent map with per-frequency
    // gains equals a 1-d spectral conv with those (real) mode weights
    const double u0 = 0.3, u1 = -0.8, u2 = 1.4;
    Rng rng(19);
    ParamStore store;
    EncDecLayer::Options eo;
    eo.latent = 5;
    eo.basis = EncDecLayer::Basis::Fourier;
    eo.decoder = EncDecLayer::Decoder::FourierLinear;
    EncDecLayer ed("ed", 1, 1, eo, store, rng);
    std::vector<double> diag(25, 0.0);
    const double gains[5] = {u0, u1, u1, u2, u2};
    for (int j = 0; j < 5; ++j) diag[static_cast<std::size_t>(j * 5 + j)] = gains[j];
    set_param(store, "ed.latent.w0", std::move(diag));
    zero_param(store, "ed.latent.b0");

    SpectralConv sc("sc", 1, 1, 1, 3, store, rng);
    store.find("sc.w")->value = Tensor::from_complex({3, 1, 1}, {cd(u0, 0), cd(u1, 0), cd(u2, 0)});

    auto disc = uniform_grid(Domain::torus1d(), 16);
    Field f = sample_1d(disc, [](double x) {
        return 0.6 + std::cos(2.0 * kPi * x) - 0.25 * std::sin(4.0 * kPi * x);
    });
    Field a = ed.forward(f, disc);
    Field b = sc.forward(f);
    CHECK(max_abs_diff(a.values, b.values, 16) < 1e-10);
}

TEST_CASE("conv block fft path equals the direct stencil sum") {
    Rng rng(23);
    ParamStore store;
    ConvBlock2d blk("cb", 2, 1, {4}, store, rng);
    const std::int64_t n = 8;
    std::vector<double> v(static_cast<std::size_t>(n * n * 2));
    for (auto& e : v) e = rng.normal();
    Tensor x = Tensor::from_real({n * n, 2}, std::move(v));
    Tensor direct = blk.conv_direct(x, n);
    Tensor fftd = blk.conv_fft(x, n);
    CHECK(max_abs_diff(direct, fftd, n * n) < 1e-10);
}

TEST_CASE("discrete conv stencil ignores quadrature: torus shift oracle") {
    // taps {0, 0, 1}: g_j = f_{j-1} regardless of spacing
    auto taps = std::make_shared<Param>(Param{"t", Tensor::from_real({3, 1}, {0.0, 0.0, 1.0}), Tensor{}});
    DiscreteConvLayer layer(taps, 1);
    auto disc = uniform_grid(Domain::torus1d(), 8);
    std::vector<double> v{0, 1, 2, 3, 4, 5, 6, 7};
    Field f{disc, Tensor::from_real({8, 1}, std::move(v))};
    Field g = layer.forward(f);
    CHECK(g.values.rdata() == std::vector<double>{7, 0, 1, 2, 3, 4, 5, 6});
}

TEST_CASE("kernel-interpolated conv matches the stencil at the reference spacing") {
    const double h0 = 1.0 / 8.0;
    auto taps = std::make_shared<Param>(Param{"t", Tensor::from_real({3, 1}, {0.25, 0.5, 0.25}), Tensor{}});
    KernelInterpolatedConv cont(taps, h0);
    DiscreteConvLayer disc_conv(taps, 1);
    auto disc = uniform_grid(Domain::torus1d(), 8);
    Field f = sample_1d(disc, [](double x) { return std::sin(2.0 * kPi * x); });
    CHECK(max_abs_diff(cont.forward(f).values, disc_conv.forward(f).values, 8) < 1e-12);

    // refining the grid keeps the physical receptive field, so the outputs
    // form a Cauchy sequence (the index stencil has no such limit)
    auto gap_to_next = [&](std::int64_t n) {
        auto coarse = uniform_grid(Domain::torus1d(), n);
        auto fine = uniform_grid(Domain::torus1d(), 2 * n);
        Field gc = cont.forward(sample_1d(coarse, [](double x) { return std::sin(2.0 * kPi * x); }));
        Field gf = cont.forward(sample_1d(fine, [](double x) { return std::sin(2.0 * kPi * x); }));
        double m = 0.0;
        for (std::int64_t i = 0; i < n; ++i)
            m = std::max(m, std::fabs(gf.values.rdata()[static_cast<std::size_t>(2 * i)] -
                                      gc.values.rdata()[static_cast<std::size_t>(i)]));
        return m;
    };
    const double d8 = gap_to_next(8), d16 = gap_to_next(16), d32 = gap_to_next(32);
    CHECK(d16 < d8);
    CHECK(d32 < d16);
}

TEST_CASE("standardization statistics and padding round-trips") {
    auto disc = uniform_grid(Domain::torus1d(), 8);
    Field f = sample_1d(disc, [](double x) { return 3.0 + std::sin(2.0 * kPi * x); });
    auto st = field_stats(f);
    CHECK(st.mu[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(st.sigma[0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));

    Field z = standardize(f, st);
    auto zst = field_stats(z);
    CHECK(std::fabs(zst.mu[0]) < 1e-12);
    CHECK(zst.sigma[0] == doctest::Approx(1.0).epsilon(1e-12));
    Field back = destandardize(z, st);
    CHECK(max_abs_diff(back.values, f.values, 8) < 1e-12);

    // constant field: sigma floors at 1e-8 instead of dividing by zero
    Field c = sample_1d(disc, [](double) { return 2.0; });
    auto cs = field_stats(c);
    Field cz = standardize(c, cs);
    for (double e : cz.values.rdata()) CHECK(std::fabs(e) < 1e-6);

    // dataset stats average the per-sample stats
    Field g = sample_1d(disc, [](double x) { return 5.0 + 3.0 * std::sin(2.0 * kPi * x); });
    auto ds = dataset_stats({f, g});
    CHECK(ds.mu[0] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(ds.sigma[0] == doctest::Approx(0.5 * (1.0 + 3.0) * std::sqrt(0.5)).epsilon(1e-12));

    auto sq = uniform_grid(Domain::square(), 8);
    std::vector<double> sv(64);
    for (int i = 0; i < 64; ++i) sv[static_cast<std::size_t>(i)] = i * 0.1;
    Field sf{sq, Tensor::from_real({64, 1}, std::move(sv))};
    Field padded = domain_padding(sf, 0.25);
    CHECK(padded.disc->domain.periodic());
    CHECK(padded.disc->grid_shape == Shape{12, 12});
    Field unpadded = domain_unpad(padded, sf);
    CHECK(max_abs_diff(unpadded.values, sf.values, 64) < 1e-15);
}

TEST_CASE("every layer passes gradient checks on small shapes") {
    auto disc = uniform_grid(Domain::torus1d(), 8);
    Field f = sample_1d(disc, [](double x) { return std::sin(2.0 * kPi * x) + 0.1; });

    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        Rng rng(200 + seed);
        ParamStore store;
        PointwiseLayer pw("pw", {1, 5, 1}, store, rng);
        IntegralTransform::Options io;
        io.hidden = {6};
        io.with_bias = true;
        IntegralTransform gno("gno", 1, 1, io, store, rng);
        IntegralTransform::Options nlo;
        nlo.hidden = {6};
        nlo.nonlinear = true;
        IntegralTransform nl("nl", 1, 1, nlo, store, rng);
        SpectralConv sc("sc", 1, 1, 1, 3, store, rng);
        FnoBlock fb("fb", 1, 1, 2, {4}, store, rng);
        AttentionLayer att("att", 1, 3, 1, store, rng);
        EncDecLayer::Options eo;
        eo.latent = 4;
        eo.basis_hidden = {5};
        eo.decoder_hidden = {5};
        EncDecLayer ed("ed", 1, 1, eo, store, rng);
        ConvBlock2d cb("cb", 1, 1, {4}, store, rng);
        KnnGnnLayer knn("knn", 1, 3, {6}, store, rng);
        KernelInterpolatedConv kic("kic", 1, 1.0 / 8.0, store, rng);
        DiscreteConvLayer dc("dc", 1, 1, store, rng);

        auto loss_of = [&](const std::function<Field()>& run) {
            return [&run](Tape&) {
                Field out = run();
                return ops::reduce_sum(ops::mul(out.values, out.values));
            };
        };
        auto run_check = [&](const std::function<Field()>& run) {
            CHECK(grad_check(loss_of(run), store, 1e-5, 6, &rng) < 1e-5);
        };
        run_check([&] { return pw.forward(f); });
        run_check([&] { return gno.forward(f); });
        run_check([&] { return nl.forward(f); });
        run_check([&] { return sc.forward(f); });
        run_check([&] { return fb.forward(f); });
        run_check([&] { return att.forward(f); });
        run_check([&] { return ed.forward(f, f.disc); });
        run_check([&] { return knn.forward(f); });
        run_check([&] { return kic.forward(f); });
        run_check([&] { return dc.forward(f); });

        auto sq = uniform_grid(Domain::torus2d(), 4);
        std::vector<double> v(16);
        Rng vr(300 + seed);
        for (auto& e : v) e = vr.normal();
        Field f2{sq, Tensor::from_real({16, 1}, std::move(v))};
        run_check([&] { return cb.forward(f2); });
        ParamStore s2;
        Rng r2(400 + seed);
        SpectralConv sc2("sc2", 2, 1, 1, 2, s2, r2);
        auto loss2 = [&](Tape&) {
            Field out = sc2.forward(f2);
            return ops::reduce_sum(ops::mul(out.values, out.values));
        };
        CHECK(grad_check(loss2, s2, 1e-5, 6, &rng) < 1e-5);
    }
}

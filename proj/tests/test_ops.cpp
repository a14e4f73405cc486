#include <cmath>

#include "doctest.h"
#include "nok/ops.hpp"
#include "nok/param.hpp"

using namespace nok;

namespace {

Tensor rand_real(Shape s, Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(shape_numel(s)));
    for (auto& e : v) e = rng.normal();
    return Tensor::from_real(std::move(s), std::move(v));
}

Tensor rand_complex(Shape s, Rng& rng) {
    std::vector<cd> v(static_cast<std::size_t>(shape_numel(s)));
    for (auto& e : v) e = cd(rng.normal(), rng.normal());
    return Tensor::from_complex(std::move(s), std::move(v));
}

} // namespace

TEST_CASE("broadcasting matches trailing-axis alignment") {
    Tensor a = Tensor::from_real({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor b = Tensor::from_real({3}, {10, 20, 30});
    Tensor c = ops::add(a, b);
    CHECK(c.rdata() == std::vector<double>{11, 22, 33, 14, 25, 36});
    Tensor col = Tensor::from_real({2, 1}, {100, 200});
    Tensor d = ops::mul(a, col);
    CHECK(d.rdata() == std::vector<double>{100, 200, 300, 800, 1000, 1200});
    CHECK_THROWS_AS((void)ops::add(a, Tensor::from_real({2}, {1, 2})), shape_error);
}

TEST_CASE("matmul values and transpose flags") {
    Tensor a = Tensor::from_real({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor b = Tensor::from_real({3, 2}, {7, 8, 9, 10, 11, 12});
    CHECK(ops::matmul(a, b).rdata() == std::vector<double>{58, 64, 139, 154});
    CHECK(ops::matmul(b, a, true, true).rdata() == std::vector<double>{58, 139, 64, 154});
    // complex uses plain (non-conjugating) transposes
    Tensor z = Tensor::from_complex({1, 2}, {cd(0, 1), cd(1, 0)});
    Tensor w = Tensor::from_complex({1, 2}, {cd(0, 1), cd(2, 0)});
    const cd got = ops::matmul(z, w, false, true).cdata()[0];
    CHECK(std::abs(got - cd(1.0, 0.0)) < 1e-15);
}

TEST_CASE("softmax_weighted oracle") {
    Tensor logits = Tensor::from_real({1, 3}, {0.0, std::log(2.0), std::log(3.0)});
    Tensor y = ops::softmax_weighted(logits, {2.0, 1.0, 1.0});
    // numerators w*e^l = {2, 2, 3} -> {2/7, 2/7, 3/7}
    CHECK(y.rdata()[0] == doctest::Approx(2.0 / 7.0).epsilon(1e-14));
    CHECK(y.rdata()[1] == doctest::Approx(2.0 / 7.0).epsilon(1e-14));
    CHECK(y.rdata()[2] == doctest::Approx(3.0 / 7.0).epsilon(1e-14));
    // equal weights reduce to plain softmax
    Tensor p = ops::softmax(logits);
    Tensor q = ops::softmax_weighted(logits, {1.0, 1.0, 1.0});
    for (int i = 0; i < 3; ++i) CHECK(p.rdata()[static_cast<std::size_t>(i)] == doctest::Approx(q.rdata()[static_cast<std::size_t>(i)]).epsilon(1e-14));
}

TEST_CASE("op gradients match finite differences over 10 seeds") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(100 + seed);
        ParamStore store;
        auto a = store.add("a", rand_real({3, 4}, rng));
        auto b = store.add("b", rand_real({4}, rng));
        auto m = store.add("m", rand_real({4, 3}, rng));
        auto z = store.add("z", rand_complex({3, 2}, rng));
        auto w = store.add("w", rand_complex({3, 2, 2}, rng));

        auto real_chain = [&](Tape&) {
            Tensor t = ops::mul(ops::add(a->use(), b->use()), ops::scale(a->use(), 0.5));
            t = ops::gelu(t);
            t = ops::matmul(t, m->use());
            t = ops::softmax_weighted(t, {0.2, 0.5, 0.3});
            return ops::reduce_sum(ops::mul(t, t));
        };
        CHECK(grad_check(real_chain, store, 1e-5) < 1e-6);

        auto complex_chain = [&](Tape&) {
            Tensor t = ops::mode_contract(z->use(), w->use());
            t = ops::add(t, ops::conj(z->use()));
            return ops::reduce_sum(ops::abs2(t));
        };
        CHECK(grad_check(complex_chain, store, 1e-5) < 1e-6);

        auto fft_grad = [&](Tape&) {
            Tensor x = ops::concat({a->use(), ops::neg(a->use()), a->use()}, 0); // [9,4]
            Tensor sig = ops::slice(x, 0, 0, 8);                                 // [8,4], power of two
            Tensor h = ops::rfft1(sig);
            Tensor back = ops::irfft1(h, 16);
            return ops::reduce_sum(ops::mul(back, back));
        };
        CHECK(grad_check(fft_grad, store, 1e-5) < 1e-6);

        auto fft2_grad = [&](Tape&) {
            Tensor flat = ops::reshape(a->use(), {12, 1});
            Tensor grid = ops::concat({flat, ops::neg(flat)}, 1); // [12,2] channels
            Tensor sig = ops::slice(ops::concat({grid, grid, ops::scale(grid, 0.5)}, 0), 0, 0, 32); // [32,2] = 4x8 grid
            Tensor h = ops::rfft2(sig, 4, 8);
            Tensor back = ops::irfft2(h);
            return ops::reduce_sum(ops::mul(back, back));
        };
        CHECK(grad_check(fft2_grad, store, 1e-5) < 1e-6);

        auto gather_scatter = [&](Tape&) {
            Tensor t = ops::take_rows(a->use(), {2, 0, 0, 1});
            t = ops::scatter_rows(t, {1, 1, 0, 3}, 4);
            t = ops::relu(ops::add(t, b->use()));
            return ops::reduce_sum(t);
        };
        CHECK(grad_check(gather_scatter, store, 1e-5) < 1e-6);
    }
}

TEST_CASE("reductions and dtype boundary ops") {
    Tensor a = Tensor::from_real({2, 2}, {1, 2, 3, 4});
    CHECK(ops::reduce_sum(a).item() == 10.0);
    CHECK(ops::reduce_mean(a).item() == 2.5);
    CHECK(ops::reduce_sum(a, 0).rdata() == std::vector<double>{4, 6});
    CHECK(ops::reduce_sum(a, 1).rdata() == std::vector<double>{3, 7});
    Tensor z = Tensor::from_complex({2}, {cd(3, 4), cd(-1, 2)});
    CHECK(ops::abs2(z).rdata() == std::vector<double>{25, 5});
    CHECK(ops::real_part(z).rdata() == std::vector<double>{3, -1});
    CHECK(ops::imag_part(z).rdata() == std::vector<double>{4, 2});
    const auto cj = ops::conj(z).cdata();
    CHECK(cj[0] == cd(3, -4));
    CHECK(cj[1] == cd(-1, -2));
}

#include "nok/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "nok/fft.hpp"

namespace nok::ops {

namespace {

// ---------------------------------------------------------------- plumbing

using BackAll = std::function<std::vector<Tensor>(const Tensor& g, const std::vector<bool>& need)>;

/// Records the op on the tape of its tracked inputs (if any) and returns the
/// value with the graph handle attached.
Tensor finish(Tensor value, const std::vector<Tensor>& inputs, BackAll back_all) {
    Tape* tp = nullptr;
    for (const auto& t : inputs) {
        if (!t.tracked()) continue;
        if (tp && tp != t.tape()) throw graph_error("operands belong to different tapes");
        tp = t.tape();
    }
    if (!tp) return value;
    std::vector<int> parents;
    std::vector<bool> need(inputs.size(), false);
    std::vector<std::size_t> which;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].tracked()) {
            parents.push_back(inputs[i].node());
            need[i] = true;
            which.push_back(i);
        }
    }
    BackFn fn = [back_all = std::move(back_all), need, which](const Tensor& g) {
        auto all = back_all(g, need);
        std::vector<Tensor> out;
        out.reserve(which.size());
        for (auto i : which) out.push_back(all[i]);
        return out;
    };
    int id = tp->add_node(std::move(parents), std::move(fn));
    return attach_node(std::move(value), tp, id);
}

Shape broadcast_shape(const Shape& a, const Shape& b) {
    const std::size_t r = std::max(a.size(), b.size());
    Shape out(r);
    for (std::size_t i = 0; i < r; ++i) {
        std::int64_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
        std::int64_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
        if (da != db && da != 1 && db != 1)
            throw shape_error("cannot broadcast " + shape_str(a) + " with " + shape_str(b));
        out[i] = std::max(da, db);
    }
    return out;
}

/// Element strides of `in` viewed at broadcast shape `out` (0 on broadcast axes).
std::vector<std::int64_t> bcast_strides(const Shape& in, const Shape& out) {
    std::vector<std::int64_t> st(out.size(), 0);
    std::int64_t acc = 1;
    for (std::size_t i = 0; i < in.size(); ++i) {
        std::size_t ri = in.size() - 1 - i;
        std::size_t ro = out.size() - 1 - i;
        st[ro] = (in[ri] == 1 && out[ro] != 1) ? 0 : acc;
        acc *= in[ri];
    }
    return st;
}

template <typename T, typename F>
std::vector<T> bcast_loop(const std::vector<T>& a, const Shape& sa, const std::vector<T>& b,
                          const Shape& sb, const Shape& so, F f) {
    const auto n = static_cast<std::size_t>(shape_numel(so));
    std::vector<T> out(n);
    if (sa == sb) { // fast path
        for (std::size_t i = 0; i < n; ++i) out[i] = f(a[i], b[i]);
        return out;
    }
    const auto sta = bcast_strides(sa, so);
    const auto stb = bcast_strides(sb, so);
    std::vector<std::int64_t> idx(so.size(), 0);
    std::int64_t offa = 0, offb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = f(a[static_cast<std::size_t>(offa)], b[static_cast<std::size_t>(offb)]);
        for (int ax = static_cast<int>(so.size()) - 1; ax >= 0; --ax) {
            auto u = static_cast<std::size_t>(ax);
            ++idx[u];
            offa += sta[u];
            offb += stb[u];
            if (idx[u] < so[u]) break;
            offa -= sta[u] * so[u];
            offb -= stb[u] * so[u];
            idx[u] = 0;
        }
    }
    return out;
}

bool any_complex(const Tensor& a, const Tensor& b) { return a.is_complex() || b.is_complex(); }

Tensor promote(const Tensor& t) { return t.is_complex() ? t : to_complex(t); }

/// Reduces a gradient back to the (possibly broadcast) input shape.
Tensor unbroadcast(const Tensor& g, const Shape& target) {
    if (g.shape() == target) return g;
    Tensor out = g;
    while (out.rank() > static_cast<int>(target.size())) out = reduce_sum(out, 0);
    for (int ax = 0; ax < out.rank(); ++ax) {
        if (target[static_cast<std::size_t>(ax)] == 1 && out.dim(ax) != 1) {
            Tensor s = reduce_sum(out, ax);
            Shape keep = out.shape();
            keep[static_cast<std::size_t>(ax)] = 1;
            out = reshape(s, keep);
        }
    }
    return out;
}

/// Converts a gradient to the dtype of the input it belongs to (complex
/// gradients of promoted real inputs keep only their real part).
Tensor match_dtype(const Tensor& g, const Tensor& input) {
    if (g.dtype() == input.dtype()) return g;
    if (input.is_real() && g.is_complex()) return real_part(g);
    return to_complex(g);
}

Tensor grad_for(const Tensor& g, const Tensor& input) {
    return unbroadcast(match_dtype(g, input), input.shape());
}

Tensor binary_elementwise(const Tensor& a, const Tensor& b, auto rf, auto cf) {
    Shape so = broadcast_shape(a.shape(), b.shape());
    if (any_complex(a, b)) {
        Tensor ac = promote(a).detached(), bc = promote(b).detached();
        return Tensor::from_complex(so, bcast_loop(ac.cdata(), ac.shape(), bc.cdata(), bc.shape(), so, cf));
    }
    return Tensor::from_real(so, bcast_loop(a.rdata(), a.shape(), b.rdata(), b.shape(), so, rf));
}

template <typename F, typename DF>
Tensor unary_real(const Tensor& a, F f, DF df) {
    const auto& x = a.rdata();
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
    Tensor out = Tensor::from_real(a.shape(), std::move(y));
    return finish(out, {a}, [a, df](const Tensor& g, const std::vector<bool>&) -> std::vector<Tensor> {
        const auto& xv = a.rdata();
        const auto& gv = g.rdata();
        std::vector<double> gi(xv.size());
        for (std::size_t i = 0; i < xv.size(); ++i) gi[i] = gv[i] * df(xv[i]);
        return {Tensor::from_real(a.shape(), std::move(gi))};
    });
}

/// Payload-level 2-d transpose (no recording).
Tensor t2(const Tensor& a) {
    if (a.rank() != 2) throw shape_error("transpose expects rank 2");
    const auto m = a.dim(0), n = a.dim(1);
    if (a.is_real()) {
        std::vector<double> out(static_cast<std::size_t>(m * n));
        const auto& in = a.rdata();
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j < n; ++j)
                out[static_cast<std::size_t>(j * m + i)] = in[static_cast<std::size_t>(i * n + j)];
        return Tensor::from_real({n, m}, std::move(out));
    }
    std::vector<cd> out(static_cast<std::size_t>(m * n));
    const auto& in = a.cdata();
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < n; ++j)
            out[static_cast<std::size_t>(j * m + i)] = in[static_cast<std::size_t>(i * n + j)];
    return Tensor::from_complex({n, m}, std::move(out));
}

} // namespace

// ------------------------------------------------------------- elementwise

Tensor add(const Tensor& a, const Tensor& b) {
    Tensor out = binary_elementwise(a, b, [](double x, double y) { return x + y; },
                                    [](cd x, cd y) { return x + y; });
    return finish(out, {a, b}, [a, b](const Tensor& g, const std::vector<bool>& need) {
        std::vector<Tensor> gs(2);
        if (need[0]) gs[0] = grad_for(g, a);
        if (need[1]) gs[1] = grad_for(g, b);
        return gs;
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    Tensor out = binary_elementwise(a, b, [](double x, double y) { return x - y; },
                                    [](cd x, cd y) { return x - y; });
    return finish(out, {a, b}, [a, b](const Tensor& g, const std::vector<bool>& need) {
        std::vector<Tensor> gs(2);
        if (need[0]) gs[0] = grad_for(g, a);
        if (need[1]) gs[1] = grad_for(neg(g), b);
        return gs;
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    Tensor out = binary_elementwise(a, b, [](double x, double y) { return x * y; },
                                    [](cd x, cd y) { return x * y; });
    return finish(out, {a, b}, [a, b](const Tensor& g, const std::vector<bool>& need) {
        std::vector<Tensor> gs(2);
        if (need[0]) gs[0] = grad_for(mul(g, conj(b.detached())), a);
        if (need[1]) gs[1] = grad_for(mul(g, conj(a.detached())), b);
        return gs;
    });
}

Tensor div(const Tensor& a, const Tensor& b) {
    if (a.is_complex() || b.is_complex()) throw dtype_error("div: real tensors only");
    Tensor out = binary_elementwise(a, b, [](double x, double y) { return x / y; }, [](cd, cd) { return cd{}; });
    return finish(out, {a, b}, [a, b](const Tensor& g, const std::vector<bool>& need) {
        std::vector<Tensor> gs(2);
        Tensor ad = a.detached(), bd = b.detached();
        if (need[0]) gs[0] = grad_for(div(g, bd), a);
        if (need[1]) gs[1] = grad_for(neg(div(mul(g, ad), mul(bd, bd))), b);
        return gs;
    });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor scale(const Tensor& a, double s) {
    Tensor out;
    if (a.is_real()) {
        std::vector<double> y(a.rdata());
        for (auto& v : y) v *= s;
        out = Tensor::from_real(a.shape(), std::move(y));
    } else {
        std::vector<cd> y(a.cdata());
        for (auto& v : y) v *= s;
        out = Tensor::from_complex(a.shape(), std::move(y));
    }
    return finish(out, {a}, [s](const Tensor& g, const std::vector<bool>&) -> std::vector<Tensor> {
        return {scale(g, s)};
    });
}

// ----------------------------------------------------------- dtype boundary

Tensor to_complex(const Tensor& a) {
    if (a.is_complex()) return a;
    const auto& x = a.rdata();
    std::vector<cd> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = cd(x[i], 0.0);
    Tensor out = Tensor::from_complex(a.shape(), std::move(y));
    return finish(out, {a}, [](const Tensor& g, const std::vector<bool>&) -> std::vector<Tensor> {
        return {real_part(g)};
    });
}

Tensor real_part(const Tensor& a) {
    if (a.is_real()) return a;
    const auto& z = a.cdata();
    std::vector<double> y(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) y[i] = z[i].real();
    Tensor out = Tensor::from_real(a.shape(), std::move(y));
    return finish(out, {a}, [](const Tensor& g, const std::vector<bool>&) -> std::vector<Tensor> {
        return {to_complex(g)};
    });
}

Tensor imag_part(const Tensor& a) {
    const auto& z = a.cdata();
    std::vector<double> y(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) y[i] = z[i].imag();
    Tensor out = Tensor::from_real(a.shape(), std::move(y));
    return finish(out, {a}, [](const Tensor& g, const std::vector<bool>&) -> std::vector<Tensor> {
        const auto& gv = g.rdata();
        std::vector<cd> gi(gv.size());
        for (std::size_t i = 0; i < gv.size(); ++i) gi[i] = cd(0.0, gv[i]);
        return {Tensor::from_complex(g.shape(), std::move(gi))};
    });
}

Tensor conj(const Tensor& a) {
    if (a.is_real()) return a;
    std::vector<cd> y(a.cdata());
    for (auto& v : y) v = std::conj(v);
    Tensor out = Tensor::from_complex(a.shape(), std::move(y));
    return finish(out, {a}, [](const Tensor& g, const std::vector<bool>&) -> std::vector<Tensor> {
        return {conj(g)};
    });
}

Tensor abs2(const Tensor& a) {
    Tensor out;
    if (a.is_real()) {
        const auto& x = a.rdata();
        std::vector<double> y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * x[i];
        out = Tensor::from_real(a.shape(), std::move(y));
    } else {
        const auto& z = a.cdata();
        std::vector<double> y(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) y[i] = std::norm(z[i]);
        out = Tensor::from_real(a.shape(), std::move(y));
    }
    return finish(out, {a}, [a](const Tensor& g, const std::vector<bool>&) -> std::vector<Tensor> {
        return {match_dtype(scale(mul(g, a.detached()), 2.0), a)};
    });
}

// ------------------------------------------------------------ nonlinearities

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
} // namespace

Tensor gelu(const Tensor& a) {
    return unary_real(a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); },
                      [](double x) {
                          return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) +
                                 x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
                      });
}

Tensor relu(const Tensor& a) {
    return unary_real(a, [](double x) { return x > 0.0 ? x : 0.0; },
                      [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& a) {
    return unary_real(a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Tensor sqrt(const Tensor& a) {
    return unary_real(a, [](double x) { return std::sqrt(x); },
                      [](double x) { return 0.5 / std::sqrt(x); });
}

Tensor softmax_weighted(const Tensor& logits, const std::vector<double>& weights) {
    if (logits.rank() != 2) throw shape_error("softmax: rank-2 tensor expected");
    const auto m = logits.dim(0), n = logits.dim(1);
    if (static_cast<std::int64_t>(weights.size()) != n)
        throw shape_error("softmax: weight count does not match columns");
    const auto& x = logits.rdata();
    std::vector<double> y(x.size());
    for (std::int64_t j = 0; j < m; ++j) {
        const double* row = x.data() + j * n;
        double mx = row[0];
        for (std::int64_t i = 1; i < n; ++i) mx = std::max(mx, row[i]);
        double z = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            double e = weights[static_cast<std::size_t>(i)] * std::exp(row[i] - mx);
            y[static_cast<std::size_t>(j * n + i)] = e;
            z += e;
        }
        if (!(z > 0.0)) throw division_guard_error("softmax: zero normalization");
        for (std::int64_t i = 0; i < n; ++i) y[static_cast<std::size_t>(j * n + i)] /= z;
    }
    Tensor out = Tensor::from_real(logits.shape(), std::move(y));
    return finish(out, {logits}, [out, m, n](const Tensor& g, const std::vector<bool>&) -> std::vector<Tensor> {
        const auto& yv = out.rdata();
        const auto& gv = g.rdata();
        std::vector<double> gl(yv.size());
        for (std::int64_t j = 0; j < m; ++j) {
            double dot = 0.0;
            for (std::int64_t i = 0; i < n; ++i) {
                auto u = static_cast<std::size_t>(j * n + i);
                dot += gv[u] * yv[u];
            }
            for (std::int64_t i = 0; i < n; ++i) {
                auto u = static_cast<std::size_t>(j * n + i);
                gl[u] = yv[u] * (gv[u] - dot);
            }
        }
        return {Tensor::from_real(g.shape(), std::move(gl))};
    });
}

Tensor softmax(const Tensor& logits) {
    return softmax_weighted(logits, std::vector<double>(static_cast<std::size_t>(logits.dim(1)), 1.0));
}

// ------------------------------------------------------------------- shape

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel())
        throw shape_error("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
    Tensor out = a.is_real() ? Tensor::from_real(shape, a.rdata()) : Tensor::from_complex(shape, a.cdata());
    return finish(out, {a}, [s = a.shape()](const Tensor& g, const std::vector<bool>&) -> std::vector<Tensor> {
        return {reshape(g, s)};
    });
}

Tensor broadcast_to(const Tensor& a, Shape shape) {
    Shape so = broadcast_shape(a.shape(), shape);
    if (so != shape) throw shape_error("broadcast_to: incompatible shapes");
    Tensor zero = a.is_real() ? Tensor::zeros(shape) : Tensor::zeros(shape, Dtype::Complex128);
    return add(a, zero);
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
    if (parts.empty()) throw invalid_argument_error("concat: no operands");
    const int rank = parts[0].rank();
    if (axis < 0 || axis >= rank) throw shape_error("concat: bad axis");
    const Dtype dt = parts[0].dtype();
    Shape so = parts[0].shape();
    so[static_cast<std::size_t>(axis)] = 0;
    for (const auto& p : parts) {
        if (p.rank() != rank || p.dtype() != dt) throw shape_error("concat: mismatched operands");
        for (int ax = 0; ax < rank; ++ax)
            if (ax != axis && p.dim(ax) != parts[0].dim(ax)) throw shape_error("concat: mismatched shapes");
        so[static_cast<std::size_t>(axis)] += p.dim(axis);
    }
    std::int64_t outer = 1, inner = 1;
    for (int ax = 0; ax < axis; ++ax) outer *= so[static_cast<std::size_t>(ax)];
    for (int ax = axis + 1; ax < rank; ++ax) inner *= so[static_cast<std::size_t>(ax)];
    const std::int64_t total_axis = so[static_cast<std::size_t>(axis)];

    auto assemble = [&](auto getter, auto& out) {
        std::int64_t off = 0;
        for (const auto& p : parts) {
            const auto& src = getter(p);
            const std::int64_t len = p.dim(axis);
            for (std::int64_t o = 0; o < outer; ++o)
                std::copy_n(src.data() + o * len * inner, len * inner,
                            out.data() + (o * total_axis + off) * inner);
            off += len;
        }
    };
    Tensor out;
    if (dt == Dtype::Real64) {
        std::vector<double> buf(static_cast<std::size_t>(shape_numel(so)));
        assemble([](const Tensor& t) -> const std::vector<double>& { return t.rdata(); }, buf);
        out = Tensor::from_real(so, std::move(buf));
    } else {
        std::vector<cd> buf(static_cast<std::size_t>(shape_numel(so)));
        assemble([](const Tensor& t) -> const std::vector<cd>& { return t.cdata(); }, buf);
        out = Tensor::from_complex(so, std::move(buf));
    }
    std::vector<std::int64_t> lens;
    for (const auto& p : parts) lens.push_back(p.dim(axis));
    return finish(out, parts, [axis, lens](const Tensor& g, const std::vector<bool>& need) {
        std::vector<Tensor> gs(lens.size());
        std::int64_t off = 0;
        for (std::size_t i = 0; i < lens.size(); ++i) {
            if (need[i]) gs[i] = slice(g, axis, off, lens[i]);
            off += lens[i];
        }
        return gs;
    });
}

Tensor slice(const Tensor& a, int axis, std::int64_t start, std::int64_t len) {
    const int rank = a.rank();
    if (axis < 0 || axis >= rank) throw shape_error("slice: bad axis");
    if (start < 0 || len < 0 || start + len > a.dim(axis)) throw shape_error("slice: out of range");
    Shape so = a.shape();
    so[static_cast<std::size_t>(axis)] = len;
    std::int64_t outer = 1, inner = 1;
    for (int ax = 0; ax < axis; ++ax) outer *= a.dim(ax);
    for (int ax = axis + 1; ax < rank; ++ax) inner *= a.dim(ax);
    const std::int64_t full = a.dim(axis);

    Tensor out;
    if (a.is_real()) {
        std::vector<double> buf(static_cast<std::size_t>(shape_numel(so)));
        for (std::int64_t o = 0; o < outer; ++o)
            std::copy_n(a.rdata().data() + (o * full + start) * inner, len * inner, buf.data() + o * len * inner);
        out = Tensor::from_real(so, std::move(buf));
    } else {
        std::vector<cd> buf(static_cast<std::size_t>(shape_numel(so)));
        for (std::int64_t o = 0; o < outer; ++o)
            std::copy_n(a.cdata().data() + (o * full + start) * inner, len * inner, buf.data() + o * len * inner);
        out = Tensor::from_complex(so, std::move(buf));
    }
    return finish(out, {a}, [a, axis, start, len, outer, inner, full](const Tensor& g, const std::vector<bool>&)
                                -> std::vector<Tensor> {
        Tensor gi = Tensor::zeros(a.shape(), a.dtype());
        if (a.is_real()) {
            std::vector<double> buf(gi.rdata());
            for (std::int64_t o = 0; o < outer; ++o)
                std::copy_n(g.rdata().data() + o * len * inner, len * inner, buf.data() + (o * full + start) * inner);
            return {Tensor::from_real(a.shape(), std::move(buf))};
        }
        std::vector<cd> buf(gi.cdata());
        for (std::int64_t o = 0; o < outer; ++o)
            std::copy_n(g.cdata().data() + o * len * inner, len * inner, buf.data() + (o * full + start) * inner);
        return {Tensor::from_complex(a.shape(), std::move(buf))};
    });
}

Tensor take_rows(const Tensor& a, std::vector<std::int64_t> idx) {
    if (a.rank() != 2) throw shape_error("take_rows: rank-2 tensor expected");
    const auto rows = a.dim(0), cols = a.dim(1);
    for (auto i : idx)
        if (i < 0 || i >= rows) throw invalid_argument_error("take_rows: index out of range");
    const auto p = static_cast<std::int64_t>(idx.size());
    Tensor out;
    if (a.is_real()) {
        std::vector<double> buf(static_cast<std::size_t>(p * cols));
        for (std::int64_t r = 0; r < p; ++r)
            std::copy_n(a.rdata().data() + idx[static_cast<std::size_t>(r)] * cols, cols, buf.data() + r * cols);
        out = Tensor::from_real({p, cols}, std::move(buf));
    } else {
        std::vector<cd> buf(static_cast<std::size_t>(p * cols));
        for (std::int64_t r = 0; r < p; ++r)
            std::copy_n(a.cdata().data() + idx[static_cast<std::size_t>(r)] * cols, cols, buf.data() + r * cols);
        out = Tensor::from_complex({p, cols}, std::move(buf));
    }
    return finish(out, {a}, [idx = std::move(idx), rows](const Tensor& g, const std::vector<bool>&)
                                -> std::vector<Tensor> {
        return {scatter_rows(g, idx, rows)};
    });
}

Tensor scatter_rows(const Tensor& v, std::vector<std::int64_t> idx, std::int64_t rows) {
    if (v.rank() != 2) throw shape_error("scatter_rows: rank-2 tensor expected");
    if (static_cast<std::int64_t>(idx.size()) != v.dim(0))
        throw shape_error("scatter_rows: index count does not match rows");
    const auto cols = v.dim(1);
    for (auto i : idx)
        if (i < 0 || i >= rows) throw invalid_argument_error("scatter_rows: index out of range");
    Tensor out;
    if (v.is_real()) {
        std::vector<double> buf(static_cast<std::size_t>(rows * cols), 0.0);
        const auto& src = v.rdata();
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::int64_t c = 0; c < cols; ++c)
                buf[static_cast<std::size_t>(idx[r] * cols + c)] += src[r * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)];
        out = Tensor::from_real({rows, cols}, std::move(buf));
    } else {
        std::vector<cd> buf(static_cast<std::size_t>(rows * cols), cd(0.0, 0.0));
        const auto& src = v.cdata();
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::int64_t c = 0; c < cols; ++c)
                buf[static_cast<std::size_t>(idx[r] * cols + c)] += src[r * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)];
        out = Tensor::from_complex({rows, cols}, std::move(buf));
    }
    return finish(out, {v}, [idx = std::move(idx)](const Tensor& g, const std::vector<bool>&) -> std::vector<Tensor> {
        return {take_rows(g, idx)};
    });
}

// -------------------------------------------------------------- contraction

namespace {

template <typename T>
std::vector<T> mm_kernel(const std::vector<T>& a, const std::vector<T>& b, std::int64_t m,
                         std::int64_t k, std::int64_t n) {
    std::vector<T> out(static_cast<std::size_t>(m * n), T{});
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t p = 0; p < k; ++p) {
            const T av = a[static_cast<std::size_t>(i * k + p)];
            const T* brow = b.data() + p * n;
            T* orow = out.data() + i * n;
            for (std::int64_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

} // namespace

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
    if (a.rank() != 2 || b.rank() != 2) throw shape_error("matmul: rank-2 tensors expected");
    Tensor ae = trans_a ? t2(a.detached()) : a.detached();
    Tensor be = trans_b ? t2(b.detached()) : b.detached();
    const auto m = ae.dim(0), k = ae.dim(1);
    if (be.dim(0) != k)
        throw shape_error("matmul: inner dimensions disagree: " + shape_str(ae.shape()) + " x " + shape_str(be.shape()));
    const auto n = be.dim(1);
    Tensor out;
    if (any_complex(a, b)) {
        Tensor ac = promote(ae).detached(), bc = promote(be).detached();
        out = Tensor::from_complex({m, n}, mm_kernel(ac.cdata(), bc.cdata(), m, k, n));
    } else {
        out = Tensor::from_real({m, n}, mm_kernel(ae.rdata(), be.rdata(), m, k, n));
    }
    return finish(out, {a, b}, [a, b, trans_a, trans_b](const Tensor& g, const std::vector<bool>& need) {
        std::vector<Tensor> gs(2);
        Tensor ae = trans_a ? t2(a.detached()) : a.detached();
        Tensor be = trans_b ? t2(b.detached()) : b.detached();
        if (need[0]) {
            Tensor gae = matmul(g, conj(be), false, true);
            gs[0] = match_dtype(trans_a ? t2(gae) : gae, a);
        }
        if (need[1]) {
            Tensor gbe = matmul(conj(ae), g, true, false);
            gs[1] = match_dtype(trans_b ? t2(gbe) : gbe, b);
        }
        return gs;
    });
}

Tensor mode_contract(const Tensor& f, const Tensor& w) {
    if (f.rank() != 2 || w.rank() != 3) throw shape_error("mode_contract: expected [M,ci] and [M,ci,co]");
    const auto modes = f.dim(0), ci = f.dim(1);
    if (w.dim(0) != modes || w.dim(1) != ci) throw shape_error("mode_contract: shape mismatch");
    const auto co = w.dim(2);
    const auto& fv = f.cdata();
    const auto& wv = w.cdata();
    std::vector<cd> out(static_cast<std::size_t>(modes * co), cd(0.0, 0.0));
    for (std::int64_t mo = 0; mo < modes; ++mo)
        for (std::int64_t i = 0; i < ci; ++i) {
            const cd fvv = fv[static_cast<std::size_t>(mo * ci + i)];
            const cd* wrow = wv.data() + (mo * ci + i) * co;
            cd* orow = out.data() + mo * co;
            for (std::int64_t o = 0; o < co; ++o) orow[o] += fvv * wrow[o];
        }
    Tensor result = Tensor::from_complex({modes, co}, std::move(out));
    return finish(result, {f, w}, [f, w, modes, ci, co](const Tensor& g, const std::vector<bool>& need) {
        std::vector<Tensor> gs(2);
        const auto& gv = g.cdata();
        if (need[0]) {
            const auto& wv = w.cdata();
            std::vector<cd> gf(static_cast<std::size_t>(modes * ci), cd(0.0, 0.0));
            for (std::int64_t mo = 0; mo < modes; ++mo)
                for (std::int64_t i = 0; i < ci; ++i) {
                    cd acc(0.0, 0.0);
                    const cd* wrow = wv.data() + (mo * ci + i) * co;
                    const cd* grow = gv.data() + mo * co;
                    for (std::int64_t o = 0; o < co; ++o) acc += std::conj(wrow[o]) * grow[o];
                    gf[static_cast<std::size_t>(mo * ci + i)] = acc;
                }
            gs[0] = Tensor::from_complex(f.shape(), std::move(gf));
        }
        if (need[1]) {
            const auto& fv = f.cdata();
            std::vector<cd> gw(static_cast<std::size_t>(modes * ci * co), cd(0.0, 0.0));
            for (std::int64_t mo = 0; mo < modes; ++mo)
                for (std::int64_t i = 0; i < ci; ++i) {
                    const cd fc = std::conj(fv[static_cast<std::size_t>(mo * ci + i)]);
                    const cd* grow = gv.data() + mo * co;
                    cd* wrow = gw.data() + (mo * ci + i) * co;
                    for (std::int64_t o = 0; o < co; ++o) wrow[o] = fc * grow[o];
                }
            gs[1] = Tensor::from_complex(w.shape(), std::move(gw));
        }
        return gs;
    });
}

// --------------------------------------------------------------- reductions

Tensor reduce_sum(const Tensor& a) {
    Tensor out;
    if (a.is_real()) {
        double s = 0.0;
        for (double v : a.rdata()) s += v;
        out = Tensor::scalar(s);
    } else {
        cd s(0.0, 0.0);
        for (cd v : a.cdata()) s += v;
        out = Tensor::from_complex({}, {s});
    }
    return finish(out, {a}, [a](const Tensor& g, const std::vector<bool>&) -> std::vector<Tensor> {
        return {grad_for(broadcast_to(g, a.shape()), a)};
    });
}

Tensor reduce_sum(const Tensor& a, int axis) {
    const int rank = a.rank();
    if (axis < 0 || axis >= rank) throw shape_error("reduce_sum: bad axis");
    Shape so;
    for (int ax = 0; ax < rank; ++ax)
        if (ax != axis) so.push_back(a.dim(ax));
    std::int64_t outer = 1, inner = 1;
    for (int ax = 0; ax < axis; ++ax) outer *= a.dim(ax);
    for (int ax = axis + 1; ax < rank; ++ax) inner *= a.dim(ax);
    const std::int64_t len = a.dim(axis);

    auto sum_into = [&](const auto& src, auto& dst) {
        for (std::int64_t o = 0; o < outer; ++o)
            for (std::int64_t l = 0; l < len; ++l)
                for (std::int64_t i = 0; i < inner; ++i)
                    dst[static_cast<std::size_t>(o * inner + i)] +=
                        src[static_cast<std::size_t>((o * len + l) * inner + i)];
    };
    Tensor out;
    if (a.is_real()) {
        std::vector<double> buf(static_cast<std::size_t>(outer * inner), 0.0);
        sum_into(a.rdata(), buf);
        out = Tensor::from_real(so, std::move(buf));
    } else {
        std::vector<cd> buf(static_cast<std::size_t>(outer * inner), cd(0.0, 0.0));
        sum_into(a.cdata(), buf);
        out = Tensor::from_complex(so, std::move(buf));
    }
    return finish(out, {a}, [a, axis](const Tensor& g, const std::vector<bool>&) -> std::vector<Tensor> {
        Shape keep = a.shape();
        keep[static_cast<std::size_t>(axis)] = 1;
        return {broadcast_to(reshape(g, keep), a.shape())};
    });
}

Tensor reduce_mean(const Tensor& a) { return scale(reduce_sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor reduce_mean(const Tensor& a, int axis) {
    return scale(reduce_sum(a, axis), 1.0 / static_cast<double>(a.dim(axis)));
}

// --------------------------------------------------------------------- FFT

namespace {

/// Unnormalized inverse DFT of `v` in place (i.e., multiplies by F^H).
void idft_unnormalized(std::vector<cd>& v, bool allow_direct) {
    const std::size_t n = v.size();
    if (fft::is_pow2(n)) {
        fft::cfft(v, true);
    } else if (allow_direct) {
        fft::dft_direct(v, true);
    } else {
        throw unsupported_length_error("fft: length is not a power of two");
    }
    for (auto& x : v) x *= static_cast<double>(n);
}

std::vector<cd> dft_forward(std::vector<cd> v, bool allow_direct) {
    if (fft::is_pow2(v.size())) {
        fft::cfft(v, false);
    } else if (allow_direct) {
        fft::dft_direct(v, false);
    } else {
        throw unsupported_length_error("fft: length is not a power of two");
    }
    return v;
}

} // namespace

Tensor rfft1(const Tensor& x, bool allow_direct) {
    if (x.rank() < 1 || x.rank() > 2) throw shape_error("rfft1: rank-1/2 tensor expected");
    if (!x.is_real()) throw dtype_error("rfft1: real input expected");
    const std::int64_t n = x.dim(0);
    const std::int64_t c = x.rank() == 2 ? x.dim(1) : 1;
    const std::int64_t m = n / 2 + 1; // covers odd n: frequencies 0..(n-1)/2
    const auto& xv = x.rdata();
    std::vector<cd> out(static_cast<std::size_t>(m * c));
    std::vector<cd> col(static_cast<std::size_t>(n));
    for (std::int64_t ch = 0; ch < c; ++ch) {
        for (std::int64_t j = 0; j < n; ++j) col[static_cast<std::size_t>(j)] = cd(xv[static_cast<std::size_t>(j * c + ch)], 0.0);
        auto spec = dft_forward(col, allow_direct);
        for (std::int64_t k = 0; k < m; ++k) out[static_cast<std::size_t>(k * c + ch)] = spec[static_cast<std::size_t>(k)];
    }
    Shape so = x.rank() == 2 ? Shape{m, c} : Shape{m};
    Tensor result = Tensor::from_complex(so, std::move(out));
    return finish(result, {x}, [x, n, c, m, allow_direct](const Tensor& g, const std::vector<bool>&)
                                   -> std::vector<Tensor> {
        // grad_x[j] = Re sum_{k=0..m-1} g_k e^{2 pi i j k / n}
        const auto& gv = g.cdata();
        std::vector<double> gx(static_cast<std::size_t>(n * c), 0.0);
        std::vector<cd> full(static_cast<std::size_t>(n));
        for (std::int64_t ch = 0; ch < c; ++ch) {
            std::fill(full.begin(), full.end(), cd(0.0, 0.0));
            for (std::int64_t k = 0; k < m; ++k) full[static_cast<std::size_t>(k)] = gv[static_cast<std::size_t>(k * c + ch)];
            idft_unnormalized(full, allow_direct);
            for (std::int64_t j = 0; j < n; ++j) gx[static_cast<std::size_t>(j * c + ch)] = full[static_cast<std::size_t>(j)].real();
        }
        return {Tensor::from_real(x.shape(), std::move(gx))};
    });
}

namespace {

/// Half-spectrum coefficient multiplicities for an irfft to n_out points.
/// n_src is the represented signal length the normalization divides by.
struct IrfftPlan {
    std::int64_t n_src;
    std::vector<double> mult; // per stored coefficient: 1 or 2
};

IrfftPlan irfft_plan(std::int64_t m, std::int64_t n_out) {
    if (m < 1) throw invalid_argument_error("irfft: empty spectrum");
    IrfftPlan plan;
    if (n_out == 2 * m - 1) {
        plan.n_src = n_out; // odd-length roundtrip: every k >= 1 interior
    } else {
        plan.n_src = m == 1 ? 1 : 2 * (m - 1);
        if (n_out < plan.n_src) throw invalid_argument_error("irfft: output length smaller than represented modes");
    }
    plan.mult.assign(static_cast<std::size_t>(m), 2.0);
    plan.mult[0] = 1.0;
    if (n_out != 2 * m - 1 && m > 1) plan.mult[static_cast<std::size_t>(m - 1)] = 1.0;
    return plan;
}

/// y_j = (1/n_src) * sum_k mult_k * Re(h_k w^{jk}) evaluated via a full DFT.
void irfft_apply(const cd* h, std::int64_t m, std::int64_t n_out, const IrfftPlan& plan,
                 bool allow_direct, double* out, std::int64_t out_stride) {
    std::vector<cd> full(static_cast<std::size_t>(n_out), cd(0.0, 0.0));
    full[0] = cd(h[0].real(), 0.0);
    for (std::int64_t k = 1; k < m; ++k) {
        const double mult = plan.mult[static_cast<std::size_t>(k)];
        if (mult == 1.0 && 2 * k == n_out) {
            full[static_cast<std::size_t>(k)] = cd(h[k].real(), 0.0); // output Nyquist bin
        } else if (mult == 1.0) {
            full[static_cast<std::size_t>(k)] = h[k] * 0.5;
            full[static_cast<std::size_t>(n_out - k)] = std::conj(h[k]) * 0.5;
        } else {
            full[static_cast<std::size_t>(k)] = h[k];
            full[static_cast<std::size_t>(n_out - k)] = std::conj(h[k]);
        }
    }
    idft_unnormalized(full, allow_direct);
    const double norm = 1.0 / static_cast<double>(plan.n_src);
    for (std::int64_t j = 0; j < n_out; ++j) out[j * out_stride] = full[static_cast<std::size_t>(j)].real() * norm;
}

} // namespace

Tensor irfft1(const Tensor& h, std::int64_t n_out, bool allow_direct) {
    if (h.rank() < 1 || h.rank() > 2) throw shape_error("irfft1: rank-1/2 tensor expected");
    if (!h.is_complex()) throw dtype_error("irfft1: complex input expected");
    const std::int64_t m = h.dim(0);
    const std::int64_t c = h.rank() == 2 ? h.dim(1) : 1;
    const IrfftPlan plan = irfft_plan(m, n_out);
    const auto& hv = h.cdata();
    std::vector<double> out(static_cast<std::size_t>(n_out * c));
    std::vector<cd> col(static_cast<std::size_t>(m));
    for (std::int64_t ch = 0; ch < c; ++ch) {
        for (std::int64_t k = 0; k < m; ++k) col[static_cast<std::size_t>(k)] = hv[static_cast<std::size_t>(k * c + ch)];
        irfft_apply(col.data(), m, n_out, plan, allow_direct, out.data() + ch, c);
    }
    Shape so = h.rank() == 2 ? Shape{n_out, c} : Shape{n_out};
    Tensor result = Tensor::from_real(so, std::move(out));
    return finish(result, {h}, [h, m, c, n_out, plan, allow_direct](const Tensor& g, const std::vector<bool>&)
                                   -> std::vector<Tensor> {
        // adjoint: gh_k = mult_k / n_src * DFT_{n_out}(gy)[k]
        const auto& gv = g.rdata();
        std::vector<cd> gh(static_cast<std::size_t>(m * c));
        std::vector<cd> col(static_cast<std::size_t>(n_out));
        for (std::int64_t ch = 0; ch < c; ++ch) {
            for (std::int64_t j = 0; j < n_out; ++j) col[static_cast<std::size_t>(j)] = cd(gv[static_cast<std::size_t>(j * c + ch)], 0.0);
            auto spec = dft_forward(col, allow_direct);
            for (std::int64_t k = 0; k < m; ++k) {
                cd val = spec[static_cast<std::size_t>(k)] * (plan.mult[static_cast<std::size_t>(k)] / static_cast<double>(plan.n_src));
                if (k == 0 || (plan.mult[static_cast<std::size_t>(k)] == 1.0 && 2 * k == n_out))
                    val = cd(val.real(), 0.0); // imaginary parts of self-conjugate bins never reach y
                gh[static_cast<std::size_t>(k * c + ch)] = val;
            }
        }
        return {Tensor::from_complex(h.shape(), std::move(gh))};
    });
}

Tensor rfft2(const Tensor& x, std::int64_t n0, std::int64_t n1) {
    if (x.rank() != 2) throw shape_error("rfft2: rank-2 [n0*n1, c] tensor expected");
    if (x.dim(0) != n0 * n1) throw shape_error("rfft2: grid size does not match rows");
    if (!fft::is_pow2(static_cast<std::size_t>(n0)) || !fft::is_pow2(static_cast<std::size_t>(n1)))
        throw unsupported_length_error("rfft2: grid sides must be powers of two");
    const std::int64_t c = x.dim(1);
    const std::int64_t m1 = n1 / 2 + 1;
    const auto& xv = x.rdata();
    std::vector<cd> out(static_cast<std::size_t>(n0 * m1 * c));
    std::vector<double> row(static_cast<std::size_t>(n1));
    std::vector<cd> work(static_cast<std::size_t>(n0 * m1));
    for (std::int64_t ch = 0; ch < c; ++ch) {
        for (std::int64_t r = 0; r < n0; ++r) {
            for (std::int64_t j = 0; j < n1; ++j) row[static_cast<std::size_t>(j)] = xv[static_cast<std::size_t>((r * n1 + j) * c + ch)];
            auto spec = fft::rfft(row);
            std::copy(spec.begin(), spec.end(), work.begin() + r * m1);
        }
        fft::cfft_strided(work.data(), static_cast<std::size_t>(n0), static_cast<std::size_t>(m1),
                          static_cast<std::size_t>(m1), false);
        for (std::int64_t i = 0; i < n0 * m1; ++i) out[static_cast<std::size_t>(i * c + ch)] = work[static_cast<std::size_t>(i)];
    }
    Tensor result = Tensor::from_complex({n0, m1, c}, std::move(out));
    return finish(result, {x}, [x, n0, n1, m1, c](const Tensor& g, const std::vector<bool>&) -> std::vector<Tensor> {
        const auto& gv = g.cdata();
        std::vector<double> gx(static_cast<std::size_t>(n0 * n1 * c), 0.0);
        std::vector<cd> work(static_cast<std::size_t>(n0 * m1));
        std::vector<cd> full(static_cast<std::size_t>(n1));
        for (std::int64_t ch = 0; ch < c; ++ch) {
            for (std::int64_t i = 0; i < n0 * m1; ++i) work[static_cast<std::size_t>(i)] = gv[static_cast<std::size_t>(i * c + ch)];
            // adjoint of the axis-0 complex DFT: F^H = n0 * inverse
            fft::cfft_strided(work.data(), static_cast<std::size_t>(n0), static_cast<std::size_t>(m1),
                              static_cast<std::size_t>(m1), true);
            for (auto& v : work) v *= static_cast<double>(n0);
            // adjoint of the per-row rfft
            for (std::int64_t r = 0; r < n0; ++r) {
                std::fill(full.begin(), full.end(), cd(0.0, 0.0));
                for (std::int64_t k = 0; k < m1; ++k) full[static_cast<std::size_t>(k)] = work[static_cast<std::size_t>(r * m1 + k)];
                idft_unnormalized(full, false);
                for (std::int64_t j = 0; j < n1; ++j)
                    gx[static_cast<std::size_t>((r * n1 + j) * c + ch)] = full[static_cast<std::size_t>(j)].real();
            }
        }
        return {Tensor::from_real(x.shape(), std::move(gx))};
    });
}

Tensor irfft2(const Tensor& h) {
    if (h.rank() != 3) throw shape_error("irfft2: rank-3 [n0, m1, c] tensor expected");
    const std::int64_t n0 = h.dim(0), m1 = h.dim(1), c = h.dim(2);
    const std::int64_t n1 = 2 * (m1 - 1);
    if (n1 < 2 || !fft::is_pow2(static_cast<std::size_t>(n0)) || !fft::is_pow2(static_cast<std::size_t>(n1)))
        throw unsupported_length_error("irfft2: grid sides must be powers of two");
    const IrfftPlan plan = irfft_plan(m1, n1);
    const auto& hv = h.cdata();
    std::vector<double> out(static_cast<std::size_t>(n0 * n1 * c));
    std::vector<cd> work(static_cast<std::size_t>(n0 * m1));
    for (std::int64_t ch = 0; ch < c; ++ch) {
        for (std::int64_t i = 0; i < n0 * m1; ++i) work[static_cast<std::size_t>(i)] = hv[static_cast<std::size_t>(i * c + ch)];
        fft::cfft_strided(work.data(), static_cast<std::size_t>(n0), static_cast<std::size_t>(m1),
                          static_cast<std::size_t>(m1), true);
        for (std::int64_t r = 0; r < n0; ++r)
            irfft_apply(work.data() + r * m1, m1, n1, plan, false, out.data() + (r * n1) * c + ch, c);
    }
    Tensor result = Tensor::from_real({n0 * n1, c}, std::move(out));
    return finish(result, {h}, [h, n0, n1, m1, c, plan](const Tensor& g, const std::vector<bool>&) -> std::vector<Tensor> {
        const auto& gv = g.rdata();
        std::vector<cd> gh(static_cast<std::size_t>(n0 * m1 * c));
        std::vector<cd> col(static_cast<std::size_t>(n1));
        std::vector<cd> work(static_cast<std::size_t>(n0 * m1));
        for (std::int64_t ch = 0; ch < c; ++ch) {
            for (std::int64_t r = 0; r < n0; ++r) {
                for (std::int64_t j = 0; j < n1; ++j) col[static_cast<std::size_t>(j)] = cd(gv[static_cast<std::size_t>((r * n1 + j) * c + ch)], 0.0);
                auto spec = dft_forward(col, false);
                for (std::int64_t k = 0; k < m1; ++k) {
                    cd val = spec[static_cast<std::size_t>(k)] * (plan.mult[static_cast<std::size_t>(k)] / static_cast<double>(plan.n_src));
                    if (k == 0 || 2 * k == n1) val = cd(val.real(), 0.0);
                    work[static_cast<std::size_t>(r * m1 + k)] = val;
                }
            }
            // adjoint of the axis-0 inverse DFT: (1/n0) * forward
            fft::cfft_strided(work.data(), static_cast<std::size_t>(n0), static_cast<std::size_t>(m1),
                              static_cast<std::size_t>(m1), false);
            for (std::int64_t i = 0; i < n0 * m1; ++i)
                gh[static_cast<std::size_t>(i * c + ch)] = work[static_cast<std::size_t>(i)] / static_cast<double>(n0);
        }
        return {Tensor::from_complex(h.shape(), std::move(gh))};
    });
}

} // namespace nok::ops

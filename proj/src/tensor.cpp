#include "nok/tensor.hpp"

#include <sstream>

namespace nok {

std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (auto d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ")";
    return os.str();
}

Tensor Tensor::zeros(Shape shape, Dtype dtype) {
    auto p = std::make_shared<Payload>();
    p->dtype = dtype;
    const auto n = static_cast<std::size_t>(shape_numel(shape));
    p->shape = std::move(shape);
    if (dtype == Dtype::Real64)
        p->r.assign(n, 0.0);
    else
        p->c.assign(n, cd(0.0, 0.0));
    Tensor t;
    t.p_ = std::move(p);
    return t;
}

Tensor Tensor::full(Shape shape, double value) {
    auto p = std::make_shared<Payload>();
    p->dtype = Dtype::Real64;
    const auto n = static_cast<std::size_t>(shape_numel(shape));
    p->shape = std::move(shape);
    p->r.assign(n, value);
    Tensor t;
    t.p_ = std::move(p);
    return t;
}

Tensor Tensor::scalar(double value) { return full(Shape{}, value); }

Tensor Tensor::from_real(Shape shape, std::vector<double> data) {
    if (static_cast<std::int64_t>(data.size()) != shape_numel(shape))
        throw shape_error("from_real: data length does not match shape " + shape_str(shape));
    auto p = std::make_shared<Payload>();
    p->dtype = Dtype::Real64;
    p->shape = std::move(shape);
    p->r = std::move(data);
    Tensor t;
    t.p_ = std::move(p);
    return t;
}

Tensor Tensor::from_complex(Shape shape, std::vector<cd> data) {
    if (static_cast<std::int64_t>(data.size()) != shape_numel(shape))
        throw shape_error("from_complex: data length does not match shape " + shape_str(shape));
    auto p = std::make_shared<Payload>();
    p->dtype = Dtype::Complex128;
    p->shape = std::move(shape);
    p->c = std::move(data);
    Tensor t;
    t.p_ = std::move(p);
    return t;
}

const std::vector<double>& Tensor::rdata() const {
    if (p_->dtype != Dtype::Real64) throw dtype_error("expected a real tensor");
    return p_->r;
}

const std::vector<cd>& Tensor::cdata() const {
    if (p_->dtype != Dtype::Complex128) throw dtype_error("expected a complex tensor");
    return p_->c;
}

double Tensor::item() const {
    if (numel() != 1) throw shape_error("item() on non-scalar tensor " + shape_str(shape()));
    return is_real() ? rdata()[0] : cdata()[0].real();
}

Tensor Tensor::detached() const {
    Tensor t;
    t.p_ = p_;
    return t;
}

Tensor attach_node(Tensor t, Tape* tape, int node) {
    t.tape_ = tape;
    t.node_ = node;
    return t;
}

Tensor Tape::watch(const Tensor& value) {
    if (value.tracked() && value.tape() != this)
        throw graph_error("watch: tensor already belongs to a different tape");
    nodes_.push_back(NodeRec{{}, nullptr});
    grads_.emplace_back();
    return attach_node(value.detached(), this, static_cast<int>(nodes_.size()) - 1);
}

int Tape::add_node(std::vector<int> parents, BackFn back) {
    nodes_.push_back(NodeRec{std::move(parents), std::move(back)});
    grads_.emplace_back();
    return static_cast<int>(nodes_.size()) - 1;
}

Tensor payload_add(const Tensor& a, const Tensor& b) {
    if (!a.defined()) return b;
    if (!b.defined()) return a;
    if (a.dtype() != b.dtype() || a.shape() != b.shape())
        throw shape_error("gradient accumulation shape/dtype mismatch");
    if (a.is_real()) {
        std::vector<double> out(a.rdata());
        const auto& bb = b.rdata();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += bb[i];
        return Tensor::from_real(a.shape(), std::move(out));
    }
    std::vector<cd> out(a.cdata());
    const auto& bb = b.cdata();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bb[i];
    return Tensor::from_complex(a.shape(), std::move(out));
}

void Tape::accumulate(int node, const Tensor& g) {
    if (node < 0) return;
    auto& slot = grads_[static_cast<std::size_t>(node)];
    slot = slot.defined() ? payload_add(slot, g) : g;
}

void Tape::backward(const Tensor& loss) {
    if (!loss.tracked() || loss.tape() != this)
        throw graph_error("backward: loss is detached from this tape");
    if (!loss.is_real() || loss.numel() != 1)
        throw invalid_argument_error("backward: loss must be a real scalar");
    for (auto& g : grads_) g = Tensor();
    grads_[static_cast<std::size_t>(loss.node())] = Tensor::scalar(1.0);
    for (int i = loss.node(); i >= 0; --i) {
        const auto& rec = nodes_[static_cast<std::size_t>(i)];
        const auto& g = grads_[static_cast<std::size_t>(i)];
        if (!g.defined() || !rec.back) continue;
        std::vector<Tensor> gin = rec.back(g);
        if (gin.size() != rec.parents.size())
            throw graph_error("backward rule returned wrong number of gradients");
        for (std::size_t k = 0; k < gin.size(); ++k)
            if (gin[k].defined()) accumulate(rec.parents[k], gin[k]);
    }
}

Tensor Tape::grad(const Tensor& t) const {
    if (!t.tracked() || t.tape() != this)
        throw graph_error("grad: tensor is not tracked on this tape");
    const auto& g = grads_[static_cast<std::size_t>(t.node())];
    if (g.defined()) return g;
    return Tensor::zeros(t.shape(), t.dtype());
}

} // namespace nok

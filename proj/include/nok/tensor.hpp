#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "nok/errors.hpp"

namespace nok {

enum class Dtype { Real64, Complex128 };

using Shape = std::vector<std::int64_t>;
using cd = std::complex<double>;

std::int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

class Tape;

/// Dense real64/complex128 tensor. Values are immutable after construction;
/// a tensor optionally carries a (tape, node) handle when it participates in
/// a differentiation graph.
///
/// Gradient convention: for real tensors the gradient is the ordinary
/// coordinate gradient dL/dx. For complex tensors the stored gradient packs
/// (dL/dRe z, dL/dIm z) as a complex number, i.e. 2 * dL/d(conj z) in
/// Wirtinger terms. A step z -= lr * grad then decreases a real loss to
/// first order, and finite differences on the real/imaginary parts match the
/// real/imaginary parts of the stored gradient directly.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, Dtype dtype = Dtype::Real64);
    static Tensor full(Shape shape, double value);
    static Tensor scalar(double value);
    static Tensor from_real(Shape shape, std::vector<double> data);
    static Tensor from_complex(Shape shape, std::vector<cd> data);

    bool defined() const { return static_cast<bool>(p_); }
    const Shape& shape() const { return p_->shape; }
    Dtype dtype() const { return p_->dtype; }
    bool is_real() const { return p_->dtype == Dtype::Real64; }
    bool is_complex() const { return p_->dtype == Dtype::Complex128; }
    std::int64_t numel() const { return shape_numel(p_->shape); }
    int rank() const { return static_cast<int>(p_->shape.size()); }
    std::int64_t dim(int axis) const { return p_->shape[static_cast<std::size_t>(axis)]; }

    const std::vector<double>& rdata() const;
    const std::vector<cd>& cdata() const;

    /// Value of a real scalar tensor.
    double item() const;

    bool tracked() const { return tape_ != nullptr; }
    Tape* tape() const { return tape_; }
    int node() const { return node_; }

    /// Same payload without the graph handle.
    Tensor detached() const;

private:
    friend class Tape;
    friend Tensor attach_node(Tensor t, Tape* tape, int node);

    struct Payload {
        Shape shape;
        Dtype dtype = Dtype::Real64;
        std::vector<double> r;
        std::vector<cd> c;
    };
    std::shared_ptr<const Payload> p_;
    Tape* tape_ = nullptr;
    int node_ = -1;
};

Tensor attach_node(Tensor t, Tape* tape, int node);

/// Backward rule of one recorded operation: consumes the output gradient and
/// writes gradients for the tracked parents (aligned with the parent list;
/// an undefined Tensor means "no gradient").
using BackFn = std::function<std::vector<Tensor>(const Tensor& grad_out)>;

/// Append-only record of operations for reverse-mode differentiation.
/// Single-threaded during recording and backward.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Registers a leaf. The returned tensor shares the payload of `value`
    /// and is tracked on this tape.
    Tensor watch(const Tensor& value);

    /// Records an interior node. `parents` are node ids on this tape.
    int add_node(std::vector<int> parents, BackFn back);

    /// Reverse traversal from a real scalar loss. Populates gradients for
    /// every node reachable from the loss.
    void backward(const Tensor& loss);

    /// Gradient of a tracked tensor after backward(); zeros if the tensor
    /// did not influence the loss.
    Tensor grad(const Tensor& t) const;

    std::size_t size() const { return nodes_.size(); }

private:
    struct NodeRec {
        std::vector<int> parents;
        BackFn back;
    };
    std::vector<NodeRec> nodes_;
    std::vector<Tensor> grads_;
    void accumulate(int node, const Tensor& g);
};

/// Elementwise sum of two tensors with identical shape/dtype (plain payload
/// arithmetic, no graph recording). Used for gradient accumulation.
Tensor payload_add(const Tensor& a, const Tensor& b);

} // namespace nok

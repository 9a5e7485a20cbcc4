#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gmvae/errors.hpp"

namespace gmvae {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tape;

class Tensor;

namespace detail {

/// One recorded value in the computation graph. Owned jointly by the Tensor
/// handles pointing at it and by the tape that recorded it.
struct TensorNode {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;    // allocated on first backward pass
    std::vector<double> adjoint; // scratch for the running backward pass
    std::vector<std::shared_ptr<TensorNode>> inputs;
    std::function<void()> backprop; // empty for leaves
    const Tape* tape = nullptr;     // tape that recorded this node, if any
    std::uint64_t pass_mark = 0;    // backward-pass bookkeeping

    std::size_t numel() const { return value.size(); }
};

Tensor wrap(std::shared_ptr<TensorNode> node);

} // namespace detail

/// Dense row-major tensor of 64-bit reals, optionally tracked for
/// reverse-mode differentiation. Handles share the underlying node, so
/// copies are cheap and refer to the same value/gradient storage.
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<double> values);

    static Tensor scalar(double v);
    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double v);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node().shape; }
    std::size_t numel() const { return node().numel(); }

    std::span<const double> data() const { return node().value; }
    double at(std::size_t i) const { return node().value.at(i); }
    /// Value of a one-element tensor.
    double scalar_value() const;

    /// Gradient accumulated by backward passes; empty until the first pass
    /// touches this tensor.
    std::span<const double> grad() const { return node().grad; }
    double grad_at(std::size_t i) const;
    void zero_grad();

    /// Overwrite values in place (optimizer updates on leaf parameters).
    void set_data(std::span<const double> values);
    void set_at(std::size_t i, double v);

    /// Detached copy: same values, no tape membership, no inputs.
    Tensor detached() const;

    bool same_node(const Tensor& other) const { return node_ == other.node_; }

    detail::TensorNode& node() { return *node_; }
    const detail::TensorNode& node() const;
    const std::shared_ptr<detail::TensorNode>& node_ptr() const { return node_; }

private:
    friend class Tape;
    friend Tensor detail::wrap(std::shared_ptr<detail::TensorNode> node);
    explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}

    std::shared_ptr<detail::TensorNode> node_;
};

/// Define-by-run differentiation tape. While an instance is alive it is the
/// active tape for its thread: every operation on tensors gets recorded in
/// creation order, which is already a topological order of the graph.
/// Tapes nest; the innermost one records.
class Tape {
public:
    Tape();
    ~Tape();

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active();

    std::size_t size() const { return nodes_.size(); }

    /// Reverse sweep from a scalar root recorded on this tape. Visits every
    /// recorded node exactly once and adds d root / d leaf into each reachable
    /// tensor's grad. Repeated calls without zero_grad() accumulate.
    void backward(const Tensor& root);

private:
    friend class Tensor;
    friend Tensor detail::wrap(std::shared_ptr<detail::TensorNode> node);

    void record(std::shared_ptr<detail::TensorNode> node);

    std::vector<std::shared_ptr<detail::TensorNode>> nodes_;
    Tape* outer_ = nullptr;
};

/// backward() on the active tape.
void backward(const Tensor& root);

// --- primitive operations ---------------------------------------------------

/// Matrix product. Accepts {m,k}x{k,n} -> {m,n} and {m,k}x{k} -> {m}.
Tensor matmul(const Tensor& a, const Tensor& b);

// Elementwise binary ops; operands must have equal shapes or one of them
// must be a one-element tensor (scalar broadcast).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

// Elementwise unary ops.
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x); // domain error on non-positive entries
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor square(const Tensor& x);
Tensor negate(const Tensor& x);
Tensor scale(const Tensor& x, double c);
/// Clamp into [lo, hi]; gradient passes through only where no clamping occurred.
Tensor clamp(const Tensor& x, double lo, double hi);

/// Sum of all entries -> one-element tensor.
Tensor sum(const Tensor& x);
/// Arithmetic mean of all entries -> one-element tensor.
Tensor mean(const Tensor& x);

/// log(sum(exp(v))) computed max-shifted; exact for extreme inputs.
/// Gradient is softmax(v).
Tensor log_sum_exp(const Tensor& v);

/// One-element tensors stacked into a vector of length n.
Tensor stack_scalars(const std::vector<Tensor>& scalars);

/// 1-D concatenation.
Tensor concat(const Tensor& a, const Tensor& b);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator-(const Tensor& a) { return negate(a); }
inline Tensor operator*(double c, const Tensor& a) { return scale(a, c); }
inline Tensor operator*(const Tensor& a, double c) { return scale(a, c); }

} // namespace gmvae

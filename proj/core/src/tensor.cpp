#include "gmvae/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gmvae {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '{';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << '}';
    return os.str();
}

namespace detail {

Tensor wrap(std::shared_ptr<TensorNode> node) {
    if (Tape* t = Tape::active()) {
        node->tape = t;
        t->record(node);
    }
    return Tensor(std::move(node));
}

} // namespace detail

namespace {

using detail::TensorNode;

std::shared_ptr<TensorNode> make_node(Shape shape, std::vector<double> value) {
    if (shape.empty()) shape = {value.size()};
    if (shape_numel(shape) != value.size())
        throw DimensionError("tensor: shape " + shape_str(shape) + " does not match " +
                             std::to_string(value.size()) + " values");
    auto n = std::make_shared<TensorNode>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    return n;
}

bool tracking() { return Tape::active() != nullptr; }

/// Create the result of an op. Inputs and the backward closure are only
/// retained while a tape is active; untracked evaluation stays a pure
/// value computation with no graph growth.
template <typename MakeBackprop>
Tensor make_op(Shape shape, std::vector<double> value,
               std::vector<std::shared_ptr<TensorNode>> inputs, MakeBackprop&& make_backprop) {
    auto node = make_node(std::move(shape), std::move(value));
    if (tracking()) {
        node->inputs = std::move(inputs);
        node->backprop = make_backprop(node.get());
    }
    return detail::wrap(std::move(node));
}

void check_defined(const Tensor& t, const char* op) {
    if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor operand");
}

// scalar here means one-element; broadcast is scalar<->tensor or equal shape
struct BinaryShapes {
    Shape out;
    bool a_scalar;
    bool b_scalar;
};

BinaryShapes binary_shapes(const Tensor& a, const Tensor& b, const char* op) {
    check_defined(a, op);
    check_defined(b, op);
    if (a.shape() == b.shape()) return {a.shape(), false, false};
    if (a.numel() == 1) return {b.shape(), true, false};
    if (b.numel() == 1) return {a.shape(), false, true};
    throw DimensionError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
}

} // namespace

Tensor::Tensor(Shape shape, std::vector<double> values)
    : node_(nullptr) {
    *this = detail::wrap(make_node(std::move(shape), std::move(values)));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::zeros(Shape shape) {
    const std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(Shape shape, double v) {
    const std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, v));
}

const detail::TensorNode& Tensor::node() const {
    if (!node_) throw ContractError("tensor: handle is empty");
    return *node_;
}

double Tensor::scalar_value() const {
    if (numel() != 1)
        throw ContractError("tensor: scalar_value() on tensor of shape " + shape_str(shape()));
    return node().value[0];
}

double Tensor::grad_at(std::size_t i) const {
    const auto& g = node().grad;
    if (g.empty()) return 0.0;
    return g.at(i);
}

void Tensor::zero_grad() {
    if (!node_) throw ContractError("tensor: handle is empty");
    auto& g = node_->grad;
    std::fill(g.begin(), g.end(), 0.0);
}

void Tensor::set_data(std::span<const double> values) {
    if (values.size() != numel())
        throw DimensionError("tensor: set_data size " + std::to_string(values.size()) +
                             " does not match numel " + std::to_string(numel()));
    std::copy(values.begin(), values.end(), node_->value.begin());
}

void Tensor::set_at(std::size_t i, double v) { node_->value.at(i) = v; }

Tensor Tensor::detached() const {
    auto n = std::make_shared<TensorNode>();
    n->shape = node().shape;
    n->value = node().value;
    return Tensor(std::move(n));
}

// --- tape --------------------------------------------------------------------

namespace {
thread_local Tape* g_active_tape = nullptr;
// shared across tapes so leaf nodes touched by an earlier pass are re-prepared
thread_local std::uint64_t g_pass_counter = 0;
}

Tape::Tape() : outer_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() { g_active_tape = outer_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::record(std::shared_ptr<detail::TensorNode> node) { nodes_.push_back(std::move(node)); }

void Tape::backward(const Tensor& root) {
    if (!root.defined() || root.numel() != 1)
        throw ContractError("backward: root must be a one-element tensor");
    if (root.node().tape != this)
        throw ContractError("backward: root is not recorded on this tape");

    const std::uint64_t mark = ++g_pass_counter;
    std::vector<TensorNode*> touched;
    touched.reserve(nodes_.size());
    auto prepare = [&](TensorNode* n) {
        if (n->pass_mark == mark) return;
        n->pass_mark = mark;
        n->adjoint.assign(n->numel(), 0.0);
        touched.push_back(n);
    };
    for (const auto& n : nodes_) {
        prepare(n.get());
        for (const auto& in : n->inputs) prepare(in.get());
    }

    root.node_->adjoint[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        if ((*it)->backprop) (*it)->backprop();
    }

    for (TensorNode* n : touched) {
        if (n->grad.empty()) n->grad.assign(n->numel(), 0.0);
        for (std::size_t i = 0; i < n->numel(); ++i) n->grad[i] += n->adjoint[i];
    }
}

void backward(const Tensor& root) {
    Tape* t = Tape::active();
    if (!t) throw ContractError("backward: no active tape");
    t->backward(root);
}

// --- primitives ---------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    check_defined(a, "matmul");
    check_defined(b, "matmul");
    const bool vec_rhs = b.shape().size() == 1;
    if (a.shape().size() != 2 || (b.shape().size() != 2 && !vec_rhs))
        throw DimensionError("matmul: expects {m,k}x{k,n} or {m,k}x{k}, got " +
                             shape_str(a.shape()) + " and " + shape_str(b.shape()));
    const std::size_t m = a.shape()[0];
    const std::size_t k = a.shape()[1];
    const std::size_t k2 = b.shape()[0];
    const std::size_t n = vec_rhs ? 1 : b.shape()[1];
    if (k != k2)
        throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));

    std::vector<double> out(m * n, 0.0);
    const auto& av = a.node().value;
    const auto& bv = b.node().value;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * bv[p * n + j];
        }

    Shape out_shape = vec_rhs ? Shape{m} : Shape{m, n};
    return make_op(std::move(out_shape), std::move(out), {a.node_ptr(), b.node_ptr()},
                   [m, k, n](TensorNode* self) -> std::function<void()> {
                       return [self, m, k, n] {
                           auto& ga = self->inputs[0]->adjoint;
                           auto& gb = self->inputs[1]->adjoint;
                           const auto& av = self->inputs[0]->value;
                           const auto& bv = self->inputs[1]->value;
                           const auto& g = self->adjoint;
                           // a.grad += g . b^T ; b.grad += a^T . g
                           for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t p = 0; p < k; ++p) {
                                   double acc = 0.0;
                                   for (std::size_t j = 0; j < n; ++j)
                                       acc += g[i * n + j] * bv[p * n + j];
                                   ga[i * k + p] += acc;
                               }
                           for (std::size_t p = 0; p < k; ++p)
                               for (std::size_t j = 0; j < n; ++j) {
                                   double acc = 0.0;
                                   for (std::size_t i = 0; i < m; ++i)
                                       acc += av[i * k + p] * g[i * n + j];
                                   gb[p * n + j] += acc;
                               }
                       };
                   });
}

namespace {

enum class BinKind { Add, Sub, Mul };

Tensor binary_op(const Tensor& a, const Tensor& b, BinKind kind, const char* name) {
    const BinaryShapes bs = binary_shapes(a, b, name);
    const std::size_t n = shape_numel(bs.out);
    const auto& av = a.node().value;
    const auto& bv = b.node().value;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = bs.a_scalar ? av[0] : av[i];
        const double y = bs.b_scalar ? bv[0] : bv[i];
        switch (kind) {
            case BinKind::Add: out[i] = x + y; break;
            case BinKind::Sub: out[i] = x - y; break;
            case BinKind::Mul: out[i] = x * y; break;
        }
    }
    const bool a_scalar = bs.a_scalar;
    const bool b_scalar = bs.b_scalar;
    return make_op(bs.out, std::move(out), {a.node_ptr(), b.node_ptr()},
                   [kind, a_scalar, b_scalar, n](TensorNode* self) -> std::function<void()> {
                       return [self, kind, a_scalar, b_scalar, n] {
                           auto& ga = self->inputs[0]->adjoint;
                           auto& gb = self->inputs[1]->adjoint;
                           const auto& av = self->inputs[0]->value;
                           const auto& bv = self->inputs[1]->value;
                           const auto& g = self->adjoint;
                           for (std::size_t i = 0; i < n; ++i) {
                               const double x = a_scalar ? av[0] : av[i];
                               const double y = b_scalar ? bv[0] : bv[i];
                               double da = 0.0, db = 0.0;
                               switch (kind) {
                                   case BinKind::Add: da = g[i]; db = g[i]; break;
                                   case BinKind::Sub: da = g[i]; db = -g[i]; break;
                                   case BinKind::Mul: da = g[i] * y; db = g[i] * x; break;
                               }
                               ga[a_scalar ? 0 : i] += da;
                               gb[b_scalar ? 0 : i] += db;
                           }
                       };
                   });
}

enum class UnKind { Exp, Log, Relu, Sigmoid, Square, Negate };

Tensor unary_op(const Tensor& x, UnKind kind, const char* name) {
    check_defined(x, name);
    const std::size_t n = x.numel();
    const auto& xv = x.node().value;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = xv[i];
        switch (kind) {
            case UnKind::Exp: out[i] = std::exp(v); break;
            case UnKind::Log:
                if (!(v > 0.0))
                    throw DomainError("log: non-positive entry " + std::to_string(v));
                out[i] = std::log(v);
                break;
            case UnKind::Relu: out[i] = v > 0.0 ? v : 0.0; break;
            case UnKind::Sigmoid: out[i] = 1.0 / (1.0 + std::exp(-v)); break;
            case UnKind::Square: out[i] = v * v; break;
            case UnKind::Negate: out[i] = -v; break;
        }
    }
    return make_op(x.shape(), std::move(out), {x.node_ptr()},
                   [kind, n](TensorNode* self) -> std::function<void()> {
                       return [self, kind, n] {
                           auto& gx = self->inputs[0]->adjoint;
                           const auto& xv = self->inputs[0]->value;
                           const auto& yv = self->value;
                           const auto& g = self->adjoint;
                           for (std::size_t i = 0; i < n; ++i) {
                               double d = 0.0;
                               switch (kind) {
                                   case UnKind::Exp: d = yv[i]; break;
                                   case UnKind::Log: d = 1.0 / xv[i]; break;
                                   case UnKind::Relu: d = xv[i] > 0.0 ? 1.0 : 0.0; break;
                                   case UnKind::Sigmoid: d = yv[i] * (1.0 - yv[i]); break;
                                   case UnKind::Square: d = 2.0 * xv[i]; break;
                                   case UnKind::Negate: d = -1.0; break;
                               }
                               gx[i] += g[i] * d;
                           }
                       };
                   });
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinKind::Add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinKind::Sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinKind::Mul, "mul"); }

Tensor exp(const Tensor& x) { return unary_op(x, UnKind::Exp, "exp"); }
Tensor log(const Tensor& x) { return unary_op(x, UnKind::Log, "log"); }
Tensor relu(const Tensor& x) { return unary_op(x, UnKind::Relu, "relu"); }
Tensor sigmoid(const Tensor& x) { return unary_op(x, UnKind::Sigmoid, "sigmoid"); }
Tensor square(const Tensor& x) { return unary_op(x, UnKind::Square, "square"); }
Tensor negate(const Tensor& x) { return unary_op(x, UnKind::Negate, "negate"); }

Tensor scale(const Tensor& x, double c) {
    check_defined(x, "scale");
    const std::size_t n = x.numel();
    const auto& xv = x.node().value;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = c * xv[i];
    return make_op(x.shape(), std::move(out), {x.node_ptr()},
                   [c, n](TensorNode* self) -> std::function<void()> {
                       return [self, c, n] {
                           auto& gx = self->inputs[0]->adjoint;
                           const auto& g = self->adjoint;
                           for (std::size_t i = 0; i < n; ++i) gx[i] += c * g[i];
                       };
                   });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
    check_defined(x, "clamp");
    if (!(lo <= hi)) throw ContractError("clamp: lo > hi");
    const std::size_t n = x.numel();
    const auto& xv = x.node().value;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::min(hi, std::max(lo, xv[i]));
    return make_op(x.shape(), std::move(out), {x.node_ptr()},
                   [lo, hi, n](TensorNode* self) -> std::function<void()> {
                       return [self, lo, hi, n] {
                           auto& gx = self->inputs[0]->adjoint;
                           const auto& xv = self->inputs[0]->value;
                           const auto& g = self->adjoint;
                           for (std::size_t i = 0; i < n; ++i)
                               if (xv[i] > lo && xv[i] < hi) gx[i] += g[i];
                       };
                   });
}

Tensor sum(const Tensor& x) {
    check_defined(x, "sum");
    const std::size_t n = x.numel();
    double acc = 0.0;
    for (double v : x.node().value) acc += v;
    return make_op({1}, {acc}, {x.node_ptr()}, [n](TensorNode* self) -> std::function<void()> {
        return [self, n] {
            auto& gx = self->inputs[0]->adjoint;
            const double g = self->adjoint[0];
            for (std::size_t i = 0; i < n; ++i) gx[i] += g;
        };
    });
}

Tensor mean(const Tensor& x) {
    check_defined(x, "mean");
    if (x.numel() == 0) throw DimensionError("mean: empty tensor");
    return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor log_sum_exp(const Tensor& v) {
    check_defined(v, "log_sum_exp");
    const std::size_t n = v.numel();
    if (n == 0) throw DimensionError("log_sum_exp: empty input");
    const auto& xv = v.node().value;
    const double hi = *std::max_element(xv.begin(), xv.end());
    double acc = 0.0;
    for (double x : xv) acc += std::exp(x - hi);
    const double out = hi + std::log(acc);
    return make_op({1}, {out}, {v.node_ptr()}, [n](TensorNode* self) -> std::function<void()> {
        return [self, n] {
            auto& gx = self->inputs[0]->adjoint;
            const auto& xv = self->inputs[0]->value;
            const double lse = self->value[0];
            const double g = self->adjoint[0];
            for (std::size_t i = 0; i < n; ++i) gx[i] += g * std::exp(xv[i] - lse);
        };
    });
}

Tensor stack_scalars(const std::vector<Tensor>& scalars) {
    if (scalars.empty()) throw DimensionError("stack_scalars: empty input");
    std::vector<double> out;
    std::vector<std::shared_ptr<TensorNode>> inputs;
    out.reserve(scalars.size());
    inputs.reserve(scalars.size());
    for (const auto& s : scalars) {
        check_defined(s, "stack_scalars");
        if (s.numel() != 1)
            throw DimensionError("stack_scalars: operand of shape " + shape_str(s.shape()));
        out.push_back(s.node().value[0]);
        inputs.push_back(s.node_ptr());
    }
    const std::size_t n = scalars.size();
    return make_op({n}, std::move(out), std::move(inputs),
                   [n](TensorNode* self) -> std::function<void()> {
                       return [self, n] {
                           for (std::size_t i = 0; i < n; ++i)
                               self->inputs[i]->adjoint[0] += self->adjoint[i];
                       };
                   });
}

Tensor concat(const Tensor& a, const Tensor& b) {
    check_defined(a, "concat");
    check_defined(b, "concat");
    if (a.shape().size() != 1 || b.shape().size() != 1)
        throw DimensionError("concat: expects 1-D operands, got " + shape_str(a.shape()) +
                             " and " + shape_str(b.shape()));
    const std::size_t na = a.numel();
    const std::size_t nb = b.numel();
    std::vector<double> out;
    out.reserve(na + nb);
    out.insert(out.end(), a.node().value.begin(), a.node().value.end());
    out.insert(out.end(), b.node().value.begin(), b.node().value.end());
    return make_op({na + nb}, std::move(out), {a.node_ptr(), b.node_ptr()},
                   [na, nb](TensorNode* self) -> std::function<void()> {
                       return [self, na, nb] {
                           auto& ga = self->inputs[0]->adjoint;
                           auto& gb = self->inputs[1]->adjoint;
                           const auto& g = self->adjoint;
                           for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
                           for (std::size_t i = 0; i < nb; ++i) gb[i] += g[na + i];
                       };
                   });
}

} // namespace gmvae

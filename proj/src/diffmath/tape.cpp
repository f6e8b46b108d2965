#include "vgan/diffmath/tape.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace vgan::diffmath {

namespace {

using Index = Eigen::Index;

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

bool broadcastable(Index x, Index y) { return x == y || x == 1 || y == 1; }

Matrix expand(const Matrix& m, Index rows, Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  return m.replicate(rows / m.rows(), cols / m.cols());
}

template <typename F>
Matrix elementwise(const Matrix& a, const Matrix& b, F f) {
  const Index rows = std::max(a.rows(), b.rows());
  const Index cols = std::max(a.cols(), b.cols());
  if (a.rows() == b.rows() && a.cols() == b.cols()) return f(a.array(), b.array()).matrix();
  if (b.rows() == rows && b.cols() == cols) {
    const Matrix ea = expand(a, rows, cols);
    return f(ea.array(), b.array()).matrix();
  }
  if (a.rows() == rows && a.cols() == cols) {
    const Matrix eb = expand(b, rows, cols);
    return f(a.array(), eb.array()).matrix();
  }
  const Matrix ea = expand(a, rows, cols);
  const Matrix eb = expand(b, rows, cols);
  return f(ea.array(), eb.array()).matrix();
}

double softplus_scalar(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kConstant: return "constant";
    case Op::kStopGradient: return "stop_gradient";
    case Op::kMatmul: return "matmul";
    case Op::kMatmulNT: return "matmul_nt";
    case Op::kMatmulTN: return "matmul_tn";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kScale: return "scale";
    case Op::kAddScalar: return "add_scalar";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kTanh: return "tanh";
    case Op::kLeakyRelu: return "leaky_relu";
    case Op::kSigmoid: return "sigmoid";
    case Op::kSoftplus: return "softplus";
    case Op::kSquare: return "square";
    case Op::kSqrt: return "sqrt";
    case Op::kMin: return "min";
    case Op::kClip: return "clip";
    case Op::kSum: return "sum";
    case Op::kMean: return "mean";
    case Op::kSumTo: return "sum_to";
    case Op::kBroadcastTo: return "broadcast_to";
    case Op::kSlice: return "slice";
    case Op::kPad: return "pad";
    case Op::kLeakyMask: return "leaky_mask";
    case Op::kMinMask: return "min_mask";
    case Op::kClipMask: return "clip_mask";
  }
  return "unknown";
}

bool all_finite(const Matrix& m) {
  // x * 0 is 0 for finite x and NaN otherwise; the vectorized sum keeps NaN.
  return (m.array() * 0.0).sum() == 0.0;
}

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw std::logic_error("diffmath: use of an unbound Var");
  return tape_->node(*this).value;
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("diffmath: scalar() on a " + shape_str(v) + " node");
  }
  return v(0, 0);
}

const Tape::Node& Tape::node(Var x) const { return nodes_.at(x.id_); }

void Tape::check_owner(Var x) const {
  if (x.tape_ != this) throw std::logic_error("diffmath: Var belongs to a different tape");
}

Var Tape::push(Node n) {
  if (!all_finite(n.value)) {
    throw NonFiniteError(std::string("diffmath: non-finite value produced by ") +
                         op_name(n.op) + " (node " + std::to_string(nodes_.size()) + ")");
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::leaf(Matrix value) {
  Node n;
  n.op = Op::kLeaf;
  n.requires_grad = true;
  n.value = std::move(value);
  Var v = push(std::move(n));
  leaf_ids_.push_back(v.id_);
  return v;
}

Var Tape::constant(Matrix value) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::constant_scalar(double value) {
  Matrix m(1, 1);
  m(0, 0) = value;
  return constant(std::move(m));
}

Var Tape::row_vector(std::span<const double> values, bool differentiable) {
  Matrix m(1, static_cast<Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) m(0, static_cast<Index>(i)) = values[i];
  return differentiable ? leaf(std::move(m)) : constant(std::move(m));
}

Matrix Tape::evaluate(const Node& n, const Matrix* a, const Matrix* b) {
  switch (n.op) {
    case Op::kLeaf:
    case Op::kConstant:
      return n.value;
    case Op::kStopGradient:
      return *a;
    case Op::kMatmul:
      return (*a) * (*b);
    case Op::kMatmulNT:
      return (*a) * b->transpose();
    case Op::kMatmulTN:
      return a->transpose() * (*b);
    case Op::kAdd:
      return elementwise(*a, *b, [](const auto& x, const auto& y) { return x + y; });
    case Op::kSub:
      return elementwise(*a, *b, [](const auto& x, const auto& y) { return x - y; });
    case Op::kMul:
      return elementwise(*a, *b, [](const auto& x, const auto& y) { return x * y; });
    case Op::kDiv:
      return elementwise(*a, *b, [](const auto& x, const auto& y) { return x / y; });
    case Op::kScale:
      return (*a) * n.p0;
    case Op::kAddScalar:
      return (a->array() + n.p0).matrix();
    case Op::kExp:
      return a->array().exp().matrix();
    case Op::kLog:
      return a->array().log().matrix();
    case Op::kTanh:
      return a->array().tanh().matrix();
    case Op::kLeakyRelu: {
      const double slope = n.p0;
      return a->unaryExpr([slope](double x) { return x > 0.0 ? x : slope * x; });
    }
    case Op::kSigmoid:
      return a->unaryExpr([](double x) { return sigmoid_scalar(x); });
    case Op::kSoftplus:
      return a->unaryExpr([](double x) { return softplus_scalar(x); });
    case Op::kSquare:
      return a->array().square().matrix();
    case Op::kSqrt:
      return a->array().sqrt().matrix();
    case Op::kMin:
      return a->binaryExpr(*b, [](double x, double y) { return y < x ? y : x; });
    case Op::kClip: {
      const double lo = n.p0;
      const double hi = n.p1;
      return a->unaryExpr([lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); });
    }
    case Op::kSum: {
      Matrix m(1, 1);
      m(0, 0) = a->sum();
      return m;
    }
    case Op::kMean: {
      Matrix m(1, 1);
      m(0, 0) = a->sum() / static_cast<double>(a->size());
      return m;
    }
    case Op::kSumTo: {
      const auto rows = static_cast<Index>(n.s1);
      const auto cols = static_cast<Index>(n.s2);
      if (rows == a->rows() && cols == a->cols()) return *a;
      if (rows == 1 && cols == 1) {
        Matrix m(1, 1);
        m(0, 0) = a->sum();
        return m;
      }
      if (rows == 1) return a->colwise().sum();
      return a->rowwise().sum();
    }
    case Op::kBroadcastTo:
      return expand(*a, static_cast<Index>(n.s1), static_cast<Index>(n.s2));
    case Op::kSlice: {
      const auto rows = static_cast<Index>(n.s1);
      const auto cols = static_cast<Index>(n.s2);
      Matrix m(rows, cols);
      std::copy_n(a->data() + n.s0, rows * cols, m.data());
      return m;
    }
    case Op::kPad: {
      Matrix m = Matrix::Zero(1, static_cast<Index>(n.s1));
      std::copy_n(a->data(), a->size(), m.data() + n.s0);
      return m;
    }
    case Op::kLeakyMask: {
      const double slope = n.p0;
      return a->unaryExpr([slope](double x) { return x > 0.0 ? 1.0 : slope; });
    }
    case Op::kMinMask:
      return a->binaryExpr(*b, [](double x, double y) { return y < x ? 0.0 : 1.0; });
    case Op::kClipMask: {
      const double lo = n.p0;
      const double hi = n.p1;
      return a->unaryExpr([lo, hi](double x) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
    }
  }
  throw std::logic_error("diffmath: unhandled op");
}

Var Tape::unary(Op op, Var x, double p0, double p1) {
  check_owner(x);
  Node n;
  n.op = op;
  n.a = x.id_;
  n.arity = 1;
  n.p0 = p0;
  n.p1 = p1;
  const bool mask = op == Op::kLeakyMask || op == Op::kClipMask || op == Op::kStopGradient;
  n.requires_grad = !mask && node(x).requires_grad;
  n.value = evaluate(n, &node(x).value, nullptr);
  return push(std::move(n));
}

Var Tape::binary(Op op, Var a, Var b) {
  check_owner(a);
  check_owner(b);
  const Matrix& va = node(a).value;
  const Matrix& vb = node(b).value;
  switch (op) {
    case Op::kMatmul:
      if (va.cols() != vb.rows()) {
        throw ShapeError("diffmath: matmul " + shape_str(va) + " * " + shape_str(vb));
      }
      break;
    case Op::kMatmulNT:
      if (va.cols() != vb.cols()) {
        throw ShapeError("diffmath: matmul_nt " + shape_str(va) + " * T(" + shape_str(vb) + ")");
      }
      break;
    case Op::kMatmulTN:
      if (va.rows() != vb.rows()) {
        throw ShapeError("diffmath: matmul_tn T(" + shape_str(va) + ") * " + shape_str(vb));
      }
      break;
    case Op::kMin:
    case Op::kMinMask:
      if (va.rows() != vb.rows() || va.cols() != vb.cols()) {
        throw ShapeError(std::string("diffmath: ") + op_name(op) + " needs equal shapes, got " +
                         shape_str(va) + " and " + shape_str(vb));
      }
      break;
    default:
      if (!broadcastable(va.rows(), vb.rows()) || !broadcastable(va.cols(), vb.cols())) {
        throw ShapeError(std::string("diffmath: cannot broadcast ") + op_name(op) + " " +
                         shape_str(va) + " with " + shape_str(vb));
      }
  }
  Node n;
  n.op = op;
  n.a = a.id_;
  n.b = b.id_;
  n.arity = 2;
  n.requires_grad = op != Op::kMinMask && (node(a).requires_grad || node(b).requires_grad);
  n.value = evaluate(n, &va, &vb);
  return push(std::move(n));
}

Var Tape::stop_gradient(Var x) { return unary(Op::kStopGradient, x); }
Var Tape::matmul(Var a, Var b) { return binary(Op::kMatmul, a, b); }
Var Tape::matmul_nt(Var a, Var b) { return binary(Op::kMatmulNT, a, b); }
Var Tape::matmul_tn(Var a, Var b) { return binary(Op::kMatmulTN, a, b); }
Var Tape::add(Var a, Var b) { return binary(Op::kAdd, a, b); }
Var Tape::sub(Var a, Var b) { return binary(Op::kSub, a, b); }
Var Tape::mul(Var a, Var b) { return binary(Op::kMul, a, b); }
Var Tape::div(Var a, Var b) { return binary(Op::kDiv, a, b); }
Var Tape::scale(Var x, double factor) { return unary(Op::kScale, x, factor); }
Var Tape::add_scalar(Var x, double offset) { return unary(Op::kAddScalar, x, offset); }
Var Tape::exp(Var x) { return unary(Op::kExp, x); }
Var Tape::log(Var x) { return unary(Op::kLog, x); }
Var Tape::tanh(Var x) { return unary(Op::kTanh, x); }
Var Tape::leaky_relu(Var x, double slope) { return unary(Op::kLeakyRelu, x, slope); }
Var Tape::sigmoid(Var x) { return unary(Op::kSigmoid, x); }
Var Tape::softplus(Var x) { return unary(Op::kSoftplus, x); }
Var Tape::square(Var x) { return unary(Op::kSquare, x); }
Var Tape::sqrt(Var x) { return unary(Op::kSqrt, x); }
Var Tape::min(Var a, Var b) { return binary(Op::kMin, a, b); }

Var Tape::clip(Var x, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("diffmath: clip with lo > hi");
  return unary(Op::kClip, x, lo, hi);
}

Var Tape::sum(Var x) { return unary(Op::kSum, x); }
Var Tape::mean(Var x) { return unary(Op::kMean, x); }

Var Tape::sum_to(Var x, std::size_t rows, std::size_t cols) {
  check_owner(x);
  if (x.rows() == rows && x.cols() == cols) return x;
  if ((rows != 1 && rows != x.rows()) || (cols != 1 && cols != x.cols())) {
    throw ShapeError("diffmath: sum_to " + shape_str(x.value()) + " -> " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
  Node n;
  n.op = Op::kSumTo;
  n.a = x.id_;
  n.arity = 1;
  n.s1 = rows;
  n.s2 = cols;
  n.requires_grad = node(x).requires_grad;
  n.value = evaluate(n, &node(x).value, nullptr);
  return push(std::move(n));
}

Var Tape::broadcast_to(Var x, std::size_t rows, std::size_t cols) {
  check_owner(x);
  if (x.rows() == rows && x.cols() == cols) return x;
  if ((x.rows() != 1 && x.rows() != rows) || (x.cols() != 1 && x.cols() != cols)) {
    throw ShapeError("diffmath: broadcast_to " + shape_str(x.value()) + " -> " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
  Node n;
  n.op = Op::kBroadcastTo;
  n.a = x.id_;
  n.arity = 1;
  n.s1 = rows;
  n.s2 = cols;
  n.requires_grad = node(x).requires_grad;
  n.value = evaluate(n, &node(x).value, nullptr);
  return push(std::move(n));
}

Var Tape::slice(Var x, std::size_t offset, std::size_t rows, std::size_t cols) {
  check_owner(x);
  if (x.rows() != 1 || offset + rows * cols > x.cols()) {
    throw ShapeError("diffmath: slice out of range of " + shape_str(x.value()));
  }
  Node n;
  n.op = Op::kSlice;
  n.a = x.id_;
  n.arity = 1;
  n.s0 = offset;
  n.s1 = rows;
  n.s2 = cols;
  n.requires_grad = node(x).requires_grad;
  n.value = evaluate(n, &node(x).value, nullptr);
  return push(std::move(n));
}

Var Tape::pad(Var x, std::size_t offset, std::size_t length) {
  check_owner(x);
  if (offset + x.rows() * x.cols() > length) {
    throw ShapeError("diffmath: pad of " + shape_str(x.value()) + " exceeds length");
  }
  Node n;
  n.op = Op::kPad;
  n.a = x.id_;
  n.arity = 1;
  n.s0 = offset;
  n.s1 = length;
  n.requires_grad = node(x).requires_grad;
  n.value = evaluate(n, &node(x).value, nullptr);
  return push(std::move(n));
}

Var Tape::row_norm(Var x, double smoothing) {
  Var sq = sum_to(square(x), x.rows(), 1);
  if (smoothing > 0.0) sq = add_scalar(sq, smoothing);
  return sqrt(sq);
}

void Tape::accumulate(std::vector<Var>& grads, std::uint32_t target, Var g) {
  if (!grads[target].valid()) {
    grads[target] = g;
  } else {
    grads[target] = add(grads[target], g);
  }
}

void Tape::backward_rule(std::uint32_t id, Var g, std::vector<Var>& grads,
                         const std::vector<char>& needed) {
  // Deque elements stay put while new nodes are appended below.
  const Node& n = nodes_[id];
  const Op op = n.op;
  Var self(this, id);
  Var a(this, n.a);
  Var b(this, n.b);
  const bool want_a = n.arity >= 1 && nodes_[n.a].requires_grad && needed[n.a];
  const bool want_b = n.arity >= 2 && nodes_[n.b].requires_grad && needed[n.b];
  if (!want_a && !want_b) return;
  const std::size_t ar = n.arity >= 1 ? a.rows() : 0;
  const std::size_t ac = n.arity >= 1 ? a.cols() : 0;
  const std::size_t br = n.arity >= 2 ? b.rows() : 0;
  const std::size_t bc = n.arity >= 2 ? b.cols() : 0;
  const double p0 = n.p0;
  const double p1 = n.p1;
  const std::size_t s0 = n.s0;

  switch (op) {
    case Op::kLeaf:
    case Op::kConstant:
    case Op::kStopGradient:
    case Op::kLeakyMask:
    case Op::kMinMask:
    case Op::kClipMask:
      return;
    case Op::kMatmul:
      if (want_a) accumulate(grads, n.a, matmul_nt(g, b));
      if (want_b) accumulate(grads, n.b, matmul_tn(a, g));
      return;
    case Op::kMatmulNT:
      if (want_a) accumulate(grads, n.a, matmul(g, b));
      if (want_b) accumulate(grads, n.b, matmul_tn(g, a));
      return;
    case Op::kMatmulTN:
      if (want_a) accumulate(grads, n.a, matmul_nt(b, g));
      if (want_b) accumulate(grads, n.b, matmul(a, g));
      return;
    case Op::kAdd:
      if (want_a) accumulate(grads, n.a, sum_to(g, ar, ac));
      if (want_b) accumulate(grads, n.b, sum_to(g, br, bc));
      return;
    case Op::kSub:
      if (want_a) accumulate(grads, n.a, sum_to(g, ar, ac));
      if (want_b) accumulate(grads, n.b, sum_to(scale(g, -1.0), br, bc));
      return;
    case Op::kMul:
      if (want_a) accumulate(grads, n.a, sum_to(mul(g, b), ar, ac));
      if (want_b) accumulate(grads, n.b, sum_to(mul(g, a), br, bc));
      return;
    case Op::kDiv:
      if (want_a) accumulate(grads, n.a, sum_to(div(g, b), ar, ac));
      if (want_b) accumulate(grads, n.b, sum_to(scale(mul(g, div(self, b)), -1.0), br, bc));
      return;
    case Op::kScale:
      accumulate(grads, n.a, scale(g, p0));
      return;
    case Op::kAddScalar:
      accumulate(grads, n.a, g);
      return;
    case Op::kExp:
      accumulate(grads, n.a, mul(g, self));
      return;
    case Op::kLog:
      accumulate(grads, n.a, div(g, a));
      return;
    case Op::kTanh:
      accumulate(grads, n.a, mul(g, add_scalar(scale(square(self), -1.0), 1.0)));
      return;
    case Op::kLeakyRelu:
      accumulate(grads, n.a, mul(g, unary(Op::kLeakyMask, a, p0)));
      return;
    case Op::kSigmoid:
      accumulate(grads, n.a, mul(g, mul(self, add_scalar(scale(self, -1.0), 1.0))));
      return;
    case Op::kSoftplus:
      accumulate(grads, n.a, mul(g, sigmoid(a)));
      return;
    case Op::kSquare:
      accumulate(grads, n.a, mul(g, scale(a, 2.0)));
      return;
    case Op::kSqrt:
      accumulate(grads, n.a, div(scale(g, 0.5), self));
      return;
    case Op::kMin: {
      Var mask = binary(Op::kMinMask, a, b);
      Var ga = mul(g, mask);
      if (want_a) accumulate(grads, n.a, ga);
      if (want_b) accumulate(grads, n.b, sub(g, ga));
      return;
    }
    case Op::kClip:
      accumulate(grads, n.a, mul(g, unary(Op::kClipMask, a, p0, p1)));
      return;
    case Op::kSum:
      accumulate(grads, n.a, broadcast_to(g, ar, ac));
      return;
    case Op::kMean:
      accumulate(grads, n.a, scale(broadcast_to(g, ar, ac), 1.0 / static_cast<double>(ar * ac)));
      return;
    case Op::kSumTo:
      accumulate(grads, n.a, broadcast_to(g, ar, ac));
      return;
    case Op::kBroadcastTo:
      accumulate(grads, n.a, sum_to(g, ar, ac));
      return;
    case Op::kSlice:
      accumulate(grads, n.a, pad(g, s0, ac));
      return;
    case Op::kPad:
      accumulate(grads, n.a, slice(g, s0, ar, ac));
      return;
  }
}

std::vector<Var> Tape::gradients(Var output, std::span<const Var> wrt) {
  check_owner(output);
  if (output.rows() != 1 || output.cols() != 1) {
    throw ShapeError("diffmath: gradients() needs a scalar output, got " +
                     shape_str(output.value()));
  }
  const std::uint32_t top = output.id_;
  std::vector<char> needed(top + 1, 0);
  for (const Var& w : wrt) {
    check_owner(w);
    if (!nodes_[w.id_].requires_grad) {
      throw std::invalid_argument("diffmath: gradient requested for detached node " +
                                  std::to_string(w.id_));
    }
    if (w.id_ <= top) needed[w.id_] = 1;
  }
  for (std::uint32_t i = 0; i <= top; ++i) {
    const Node& n = nodes_[i];
    if (needed[i] || !n.requires_grad) continue;
    if ((n.arity >= 1 && needed[n.a]) || (n.arity >= 2 && needed[n.b])) needed[i] = 1;
  }

  std::vector<Var> grads(top + 1);
  if (needed[top]) grads[top] = constant_scalar(1.0);
  for (std::uint32_t i = top + 1; i-- > 0;) {
    if (!grads[i].valid() || !needed[i]) continue;
    backward_rule(i, grads[i], grads, needed);
  }

  std::vector<Var> out;
  out.reserve(wrt.size());
  for (const Var& w : wrt) {
    if (w.id_ <= top && grads[w.id_].valid()) {
      out.push_back(grads[w.id_]);
    } else {
      out.push_back(constant(Matrix::Zero(w.value().rows(), w.value().cols())));
    }
  }
  return out;
}

Var Tape::gradient(Var output, Var wrt) {
  const Var list[] = {wrt};
  return gradients(output, list).front();
}

Matrix Tape::replay(std::span<const Matrix> leaf_values, Var output) const {
  check_owner(output);
  if (leaf_values.size() != leaf_ids_.size()) {
    throw ShapeError("diffmath: replay expects " + std::to_string(leaf_ids_.size()) +
                     " leaf values, got " + std::to_string(leaf_values.size()));
  }
  const std::uint32_t top = output.id_;
  std::vector<Matrix> values(top + 1);
  std::size_t next_leaf = 0;
  for (std::uint32_t i = 0; i <= top; ++i) {
    const Node& n = nodes_[i];
    if (n.op == Op::kLeaf) {
      while (next_leaf < leaf_ids_.size() && leaf_ids_[next_leaf] < i) ++next_leaf;
      const Matrix& v = leaf_values[next_leaf];
      if (v.rows() != n.value.rows() || v.cols() != n.value.cols()) {
        throw ShapeError("diffmath: replay leaf shape " + shape_str(v) + " differs from recorded " +
                         shape_str(n.value));
      }
      values[i] = v;
      continue;
    }
    if (n.op == Op::kConstant) {
      values[i] = n.value;
      continue;
    }
    values[i] = evaluate(n, n.arity >= 1 ? &values[n.a] : nullptr,
                         n.arity >= 2 ? &values[n.b] : nullptr);
    if (!all_finite(values[i])) {
      throw NonFiniteError(std::string("diffmath: non-finite value in replay of ") +
                           op_name(n.op));
    }
  }
  return values[top];
}

}  // namespace vgan::diffmath

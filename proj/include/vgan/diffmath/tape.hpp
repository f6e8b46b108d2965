// Reverse-mode differentiation over dense row-major matrices.
//
// A Tape is an append-only list of nodes. Every node is evaluated eagerly
// when it is recorded and caches its value. Gradients are produced by
// recording the backward pass as ordinary nodes on the same tape, so a
// gradient can itself be differentiated (double backprop).

#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace vgan::diffmath {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateGradientError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Op : std::uint8_t {
  kLeaf,
  kConstant,
  kStopGradient,
  kMatmul,    // A * B
  kMatmulNT,  // A * B^T
  kMatmulTN,  // A^T * B
  kAdd,
  kSub,
  kMul,
  kDiv,
  kScale,
  kAddScalar,
  kExp,
  kLog,
  kTanh,
  kLeakyRelu,
  kSigmoid,
  kSoftplus,
  kSquare,
  kSqrt,
  kMin,
  kClip,
  kSum,
  kMean,
  kSumTo,
  kBroadcastTo,
  kSlice,
  kPad,
  // Non-differentiable masks used by backward rules.
  kLeakyMask,
  kMinMask,
  kClipMask,
};

const char* op_name(Op op);

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  std::size_t rows() const { return static_cast<std::size_t>(value().rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(value().cols()); }
  double scalar() const;
  std::uint32_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable input.
  Var leaf(Matrix value);
  /// Input that never receives a gradient.
  Var constant(Matrix value);
  Var constant_scalar(double value);
  Var row_vector(std::span<const double> values, bool differentiable);

  Var stop_gradient(Var x);

  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var b);
  Var matmul_tn(Var a, Var b);

  // Elementwise binary ops broadcast along any dimension of size 1.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);

  Var scale(Var x, double factor);
  Var add_scalar(Var x, double offset);
  Var exp(Var x);
  Var log(Var x);
  Var tanh(Var x);
  Var leaky_relu(Var x, double slope);
  Var sigmoid(Var x);
  Var softplus(Var x);
  Var square(Var x);
  Var sqrt(Var x);
  /// Ties go to `a`.
  Var min(Var a, Var b);
  /// Gradient passes where lo <= x <= hi (boundaries included).
  Var clip(Var x, double lo, double hi);

  Var sum(Var x);
  Var mean(Var x);
  Var sum_to(Var x, std::size_t rows, std::size_t cols);
  Var broadcast_to(Var x, std::size_t rows, std::size_t cols);
  /// View `rows*cols` contiguous entries of a row vector starting at `offset`
  /// as a rows x cols matrix.
  Var slice(Var x, std::size_t offset, std::size_t rows, std::size_t cols);
  /// Inverse of slice: place x into a zero 1 x length row vector.
  Var pad(Var x, std::size_t offset, std::size_t length);

  /// sqrt(sum of squares of each row + smoothing), as an n x 1 column.
  Var row_norm(Var x, double smoothing);

  /// Reverse accumulation from a 1x1 output. The backward pass is recorded on
  /// this tape, so returned gradients are differentiable themselves. A wrt
  /// node that the output does not depend on gets a zero gradient.
  std::vector<Var> gradients(Var output, std::span<const Var> wrt);
  Var gradient(Var output, Var wrt);

  /// Re-evaluates every node with new leaf values (in leaf creation order)
  /// and returns the recomputed value of `output`. Cached values are left
  /// untouched.
  Matrix replay(std::span<const Matrix> leaf_values, Var output) const;

  std::size_t size() const { return nodes_.size(); }
  std::size_t leaf_count() const { return leaf_ids_.size(); }
  bool requires_grad(Var x) const { return node(x).requires_grad; }

 private:
  friend class Var;

  struct Node {
    Op op = Op::kConstant;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    std::uint8_t arity = 0;
    bool requires_grad = false;
    double p0 = 0.0;
    double p1 = 0.0;
    std::size_t s0 = 0;
    std::size_t s1 = 0;
    std::size_t s2 = 0;
    Matrix value;
  };

  const Node& node(Var x) const;
  Var push(Node n);
  Var unary(Op op, Var x, double p0 = 0.0, double p1 = 0.0);
  Var binary(Op op, Var a, Var b);
  void check_owner(Var x) const;

  static Matrix evaluate(const Node& n, const Matrix* a, const Matrix* b);
  void backward_rule(std::uint32_t id, Var g, std::vector<Var>& grads,
                     const std::vector<char>& needed);
  void accumulate(std::vector<Var>& grads, std::uint32_t target, Var g);

  std::deque<Node> nodes_;
  std::vector<std::uint32_t> leaf_ids_;
};

bool all_finite(const Matrix& m);

}  // namespace vgan::diffmath

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "vgan/diffmath/tape.hpp"

namespace vgan::diffmath {

/// Gradient aligned one-to-one with a parameter vector. Construction rejects
/// non-finite entries.
class Grad {
 public:
  Grad() = default;
  explicit Grad(std::vector<double> values);
  static Grad from_row(const Matrix& row);

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double norm() const;

 private:
  std::vector<double> values_;
};

/// Builds a scalar loss on `tape` from a 1 x P parameter row.
using ParamObjective = std::function<Var(Tape& tape, Var params)>;

/// Builds a per-sample scalar (n x 1) from parameters and an n x d input.
using ParamInputFunction = std::function<Var(Tape& tape, Var params, Var x)>;

Grad analytic_gradient(const ParamObjective& loss, std::span<const double> params);

double evaluate_objective(const ParamObjective& loss, std::span<const double> params);

struct FdReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  /// max(|analytic|, |numeric|) over the coordinates listed as structural
  /// zeros; those are excluded from max_rel_error.
  double structural_zero_max_abs = 0.0;
};

/// Max over coordinates of |analytic - central difference| / (|analytic| + 1e-12).
/// Coordinates whose gradient is identically zero by construction (e.g. the
/// critic's output bias under a weighted mean difference) make the relative
/// error pure rounding noise; pass them in `structural_zeros`.
FdReport finite_diff_check(const ParamObjective& loss, std::span<const double> params,
                           double h = 1e-5, std::span<const std::size_t> structural_zeros = {});

/// mean_i (||grad_x f(x_i)|| - 1)^2 recorded on `tape` with the input
/// gradient itself differentiable. With smoothing == 0 a row whose input
/// gradient is exactly zero raises DegenerateGradientError.
Var input_gradient_penalty(Tape& tape, const std::function<Var(Var x)>& f, Var x,
                           double smoothing);

/// Parameter gradient of input_gradient_penalty via double backprop.
Grad grad_through_input_grad(const ParamInputFunction& f, std::span<const double> params,
                             const Matrix& x, double smoothing = 1e-12);

}  // namespace vgan::diffmath

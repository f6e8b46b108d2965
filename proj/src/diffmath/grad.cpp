#include "vgan/diffmath/grad.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace vgan::diffmath {

Grad::Grad(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw NonFiniteError("diffmath: non-finite gradient entry at index " + std::to_string(i));
    }
  }
}

Grad Grad::from_row(const Matrix& row) {
  return Grad(std::vector<double>(row.data(), row.data() + row.size()));
}

double Grad::norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

Grad analytic_gradient(const ParamObjective& loss, std::span<const double> params) {
  Tape tape;
  Var p = tape.row_vector(params, true);
  Var out = loss(tape, p);
  return Grad::from_row(tape.gradient(out, p).value());
}

double evaluate_objective(const ParamObjective& loss, std::span<const double> params) {
  Tape tape;
  Var p = tape.row_vector(params, false);
  return loss(tape, p).scalar();
}

FdReport finite_diff_check(const ParamObjective& loss, std::span<const double> params,
                           double h, std::span<const std::size_t> structural_zeros) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_check: step must be positive");
  const Grad analytic = analytic_gradient(loss, params);
  std::vector<double> probe(params.begin(), params.end());
  FdReport report;
  bool first = true;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double up = evaluate_objective(loss, probe);
    probe[i] = saved - h;
    const double down = evaluate_objective(loss, probe);
    probe[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NonFiniteError("finite_diff_check: non-finite loss at probe " + std::to_string(i));
    }
    const double numeric = (up - down) / (2.0 * h);
    if (std::find(structural_zeros.begin(), structural_zeros.end(), i) != structural_zeros.end()) {
      report.structural_zero_max_abs = std::max(
          {report.structural_zero_max_abs, std::abs(analytic[i]), std::abs(numeric)});
      continue;
    }
    const double err = std::abs(analytic[i] - numeric) / (std::abs(analytic[i]) + 1e-12);
    if (err > report.max_rel_error || first) {
      first = false;
      report.max_rel_error = err;
      report.worst_index = i;
      report.analytic = analytic[i];
      report.numeric = numeric;
    }
  }
  return report;
}

Var input_gradient_penalty(Tape& tape, const std::function<Var(Var x)>& f, Var x,
                           double smoothing) {
  Var scores = f(x);
  Var grad_x = tape.gradient(tape.sum(scores), x);
  Var sq = tape.sum_to(tape.square(grad_x), grad_x.rows(), 1);
  if (smoothing <= 0.0) {
    const Matrix& v = sq.value();
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      if (v(i, 0) == 0.0) {
        throw DegenerateGradientError(
            "diffmath: input gradient norm is exactly zero at row " + std::to_string(i) +
            "; the norm is not differentiable there (use a smoothing epsilon)");
      }
    }
  } else {
    sq = tape.add_scalar(sq, smoothing);
  }
  Var norms = tape.sqrt(sq);
  return tape.mean(tape.square(tape.add_scalar(norms, -1.0)));
}

Grad grad_through_input_grad(const ParamInputFunction& f, std::span<const double> params,
                             const Matrix& x, double smoothing) {
  Tape tape;
  Var p = tape.row_vector(params, true);
  Var xv = tape.leaf(x);
  Var penalty = input_gradient_penalty(
      tape, [&](Var in) { return f(tape, p, in); }, xv, smoothing);
  return Grad::from_row(tape.gradient(penalty, p).value());
}

}  // namespace vgan::diffmath

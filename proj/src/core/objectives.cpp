#include "vgan/core/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "vgan/diffmath/grad.hpp"

namespace vgan::core {

namespace {

Matrix column(std::span<const double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": length mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

double ImportanceWeights::entropy() const {
  double h = 0.0;
  for (double w : weights) {
    if (w > 0.0) h -= w * std::log(w);
  }
  return h;
}

ImportanceWeights importance_weights(std::span<const double> scores, double alpha) {
  if (scores.empty()) throw std::invalid_argument("importance_weights: no scores");
  double m = -std::numeric_limits<double>::infinity();
  for (double s : scores) {
    if (!std::isfinite(s)) throw std::invalid_argument("importance_weights: non-finite score");
    m = std::max(m, alpha * s);
  }
  ImportanceWeights w;
  w.weights.resize(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    w.weights[i] = std::exp(alpha * scores[i] - m);
    total += w.weights[i];
  }
  for (double& v : w.weights) v /= total;
  w.log_z_hat = m + std::log(total) - std::log(static_cast<double>(scores.size()));
  return w;
}

ImportanceWeights uniform_weights(std::size_t n) {
  ImportanceWeights w;
  w.weights.assign(n, 1.0 / static_cast<double>(n));
  w.log_z_hat = 0.0;
  return w;
}

Var critic_objective(Tape& tape, Var real_scores, Var fake_scores, const ImportanceWeights& w) {
  require_same_length(w.weights.size(), fake_scores.rows() * fake_scores.cols(),
                      "critic_objective");
  Var weights = tape.constant(column(w.weights));
  return tape.sub(tape.mean(real_scores), tape.sum(tape.mul(weights, fake_scores)));
}

double critic_objective(std::span<const double> real_scores, std::span<const double> fake_scores,
                        const ImportanceWeights& w) {
  require_same_length(w.weights.size(), fake_scores.size(), "critic_objective");
  if (real_scores.empty()) throw std::invalid_argument("critic_objective: no real scores");
  double real_mean = 0.0;
  for (double s : real_scores) real_mean += s;
  real_mean /= static_cast<double>(real_scores.size());
  double fake = 0.0;
  for (std::size_t i = 0; i < fake_scores.size(); ++i) fake += w.weights[i] * fake_scores[i];
  return real_mean - fake;
}

Var wasserstein_objective(Tape& tape, Var real_scores, Var fake_scores) {
  return tape.sub(tape.mean(real_scores), tape.mean(fake_scores));
}

Var gradient_penalty(Tape& tape, const models::MlpSpec& critic_spec, Var critic_params,
                     const Matrix& points, double lambda, double smoothing) {
  Var x = tape.leaf(points);
  Var penalty = diffmath::input_gradient_penalty(
      tape, [&](Var in) { return models::mlp_forward(tape, critic_spec, critic_params, in); }, x,
      smoothing);
  return tape.scale(penalty, lambda);
}

double gradient_penalty(const models::ModelParams& critic, const models::MlpSpec& critic_spec,
                        const Matrix& points, double lambda, double smoothing) {
  Tape tape;
  Var p = tape.row_vector(critic.values, false);
  return gradient_penalty(tape, critic_spec, p, points, lambda, smoothing).scalar();
}

Var ratio_estimate(Tape& tape, Var c_new, Var c_old) {
  Var num = tape.mul(tape.add_scalar(tape.scale(c_new, -1.0), 1.0), c_old);
  Var den = tape.mul(tape.add_scalar(tape.scale(c_old, -1.0), 1.0), c_new);
  return tape.div(num, den);
}

RatioEstimate ratio_estimate(std::span<const double> c_new, std::span<const double> c_old) {
  require_same_length(c_new.size(), c_old.size(), "ratio_estimate");
  RatioEstimate r;
  r.method = RatioMethod::kClassifier;
  r.ratios.resize(c_new.size());
  for (std::size_t i = 0; i < c_new.size(); ++i) {
    r.ratios[i] = ((1.0 - c_new[i]) * c_old[i]) / ((1.0 - c_old[i]) * c_new[i]);
  }
  return r;
}

Var clipped_surrogate(Tape& tape, Var ratios, Var scores, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("clipped_surrogate: epsilon must lie in (0, 1)");
  }
  Var unclipped = tape.mul(ratios, scores);
  Var clipped = tape.mul(tape.clip(ratios, 1.0 - epsilon, 1.0 + epsilon), scores);
  return tape.mean(tape.min(unclipped, clipped));
}

double clipped_surrogate(const RatioEstimate& ratios, std::span<const double> scores,
                         double epsilon) {
  require_same_length(ratios.ratios.size(), scores.size(), "clipped_surrogate");
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("clipped_surrogate: epsilon must lie in (0, 1)");
  }
  Tape tape;
  Var r = tape.constant(column(ratios.ratios));
  Var f = tape.constant(column(scores));
  return clipped_surrogate(tape, r, f, epsilon).scalar();
}

Var classifier_bce(Tape& tape, Var real_logits, Var fake_logits) {
  // -log sigmoid(z) = softplus(-z); -log(1 - sigmoid(z)) = softplus(z)
  Var real_term = tape.sum(tape.softplus(tape.scale(real_logits, -1.0)));
  Var fake_term = tape.sum(tape.softplus(fake_logits));
  const double n = static_cast<double>(real_logits.rows() + fake_logits.rows());
  return tape.scale(tape.add(real_term, fake_term), 1.0 / n);
}

}  // namespace vgan::core

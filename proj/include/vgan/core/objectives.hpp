// Losses of the re-weighted critic and the ratio-clipped generator.
//
// Tape versions feed training; the plain-value overloads exist for probes
// and tests and compute the same quantities.

#pragma once

#include <span>
#include <vector>

#include "vgan/data/distributions.hpp"
#include "vgan/diffmath/tape.hpp"
#include "vgan/models/mlp.hpp"

namespace vgan::core {

using diffmath::Matrix;
using diffmath::Tape;
using diffmath::Var;

/// Self-normalized weights w_i = exp(alpha f_i) / sum_j exp(alpha f_j).
/// log_z_hat = logsumexp(alpha f) - log n, the Monte Carlo estimate of
/// log E_{p_theta}[exp(alpha f)].
struct ImportanceWeights {
  std::vector<double> weights;
  double log_z_hat = 0.0;

  double entropy() const;
};

ImportanceWeights importance_weights(std::span<const double> scores, double alpha);
ImportanceWeights uniform_weights(std::size_t n);

/// mean(real) - sum_i w_i fake_i, with w held constant.
Var critic_objective(Tape& tape, Var real_scores, Var fake_scores, const ImportanceWeights& w);
double critic_objective(std::span<const double> real_scores, std::span<const double> fake_scores,
                        const ImportanceWeights& w);

/// Plain Wasserstein critic objective mean(real) - mean(fake).
Var wasserstein_objective(Tape& tape, Var real_scores, Var fake_scores);

/// lambda * mean_i (||grad_x f(x_i)|| - 1)^2 at the interpolates `points`.
Var gradient_penalty(Tape& tape, const models::MlpSpec& critic_spec, Var critic_params,
                     const Matrix& points, double lambda, double smoothing = 1e-12);
double gradient_penalty(const models::ModelParams& critic, const models::MlpSpec& critic_spec,
                        const Matrix& points, double lambda, double smoothing = 1e-12);

enum class RatioMethod { kExact, kClassifier };

struct RatioEstimate {
  std::vector<double> ratios;
  RatioMethod method = RatioMethod::kClassifier;
};

/// ((1 - C) C_old) / ((1 - C_old) C) from clamped classifier outputs.
Var ratio_estimate(Tape& tape, Var c_new, Var c_old);
RatioEstimate ratio_estimate(std::span<const double> c_new, std::span<const double> c_old);

/// mean_i min(r_i f_i, clip(r_i, 1 - eps, 1 + eps) f_i).
Var clipped_surrogate(Tape& tape, Var ratios, Var scores, double epsilon);
double clipped_surrogate(const RatioEstimate& ratios, std::span<const double> scores,
                         double epsilon);

/// Binary cross-entropy of a logit-output classifier, labels real = 1,
/// fake = 0, averaged over all 2n samples.
Var classifier_bce(Tape& tape, Var real_logits, Var fake_logits);

}  // namespace vgan::core

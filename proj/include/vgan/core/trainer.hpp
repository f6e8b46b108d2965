// Training loop: n_critic re-weighted critic steps followed by n_gen
// ratio-clipped generator steps per outer iteration, each generator step
// followed by one classifier fine-tuning step.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vgan/core/objectives.hpp"
#include "vgan/core/training_record.hpp"
#include "vgan/data/distributions.hpp"
#include "vgan/data/rng.hpp"
#include "vgan/models/mlp.hpp"

namespace vgan::core {

struct TrainingConfig {
  double epsilon = 0.2;
  double alpha = 1.0;
  std::size_t n_critic = 5;
  std::size_t n_gen = 5;
  double lambda_gp = 10.0;
  double lr_gen = 5e-5;
  double lr_critic = 1e-4;
  double lr_classifier = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double adam_eps = 1e-8;
  bool anneal_lr = false;
  std::size_t batch_size = 256;
  std::size_t iterations = 3000;
  std::uint64_t seed = 1;
  bool reweighting = true;
  bool clipping = true;
  /// Reuse the latent batch drawn at snapshot time for every generator step
  /// of an outer iteration (samples stay tied to the old generator).
  bool sample_from_old = false;
  std::size_t noise_dim = 2;
  std::size_t hidden = 64;
  models::Activation activation = models::Activation::kLeakyRelu;
  double gp_smoothing = 1e-12;
  std::size_t eval_every = 500;
  std::size_t eval_samples = 4096;
  std::size_t eval_projections = 64;
  bool abort_on_collapse = false;
  std::size_t coverage_floor = 2;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  bool operator==(const TrainingConfig&) const = default;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;

  bool operator==(const AdamState&) const = default;
};

/// One Adam step that descends along `grad`.
void adam_step(std::vector<double>& params, std::span<const double> grad, AdamState& state,
               double lr, double beta1, double beta2, double eps);

/// Generator and classifier frozen at the start of the generator phase.
struct Snapshot {
  models::ModelParams generator;
  models::ModelParams classifier;

  bool operator==(const Snapshot&) const = default;
};

struct RngStreams {
  data::SplitMix64 data;
  data::SplitMix64 noise;
  data::SplitMix64 interp;
  data::SplitMix64 classifier;
  data::SplitMix64 eval;

  static RngStreams from_seed(std::uint64_t seed);
  bool operator==(const RngStreams&) const = default;
};

struct TrainerState {
  TrainingConfig config;
  data::DistSpec dist;
  models::MlpSpec generator_spec;
  models::MlpSpec critic_spec;
  models::MlpSpec classifier_spec;
  models::ModelParams generator;
  models::ModelParams critic;
  models::ModelParams classifier;
  AdamState generator_opt;
  AdamState critic_opt;
  AdamState classifier_opt;
  std::optional<Snapshot> snapshot;
  std::optional<data::Batch> snapshot_noise;
  std::size_t iteration = 0;
  double lr_scale = 1.0;
  RngStreams rng{RngStreams::from_seed(0)};

  bool operator==(const TrainerState&) const = default;
};

/// Thrown when a loss or gradient turns non-finite; the run is aborted.
struct TrainingAborted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

TrainerState make_state(const TrainingConfig& config, const data::DistSpec& dist);

/// Freezes the current generator and classifier.
void take_snapshot(TrainerState& state);

/// G_theta(noise) without gradients.
Matrix generate(const TrainerState& state, const Matrix& noise);

/// One step on phi maximizing the (re-weighted) critic objective minus the
/// gradient penalty. Draws interpolation coefficients from state.rng.interp.
StepLog discriminator_step(TrainerState& state, const data::Batch& real, const data::Batch& noise);

/// One step on theta maximizing the clipped surrogate (or the mean critic
/// score when clipping is off), then one classifier step.
StepLog generator_step(TrainerState& state, const data::Batch& noise);

/// One BCE step on the classifier, labels real = 1, fake = 0. Returns the
/// loss before the step.
double classifier_update(TrainerState& state, const data::Batch& real, const data::Batch& fake);

/// Probability ratios of the current vs. snapshot classifier at `points`.
RatioEstimate current_ratios(const TrainerState& state, const Matrix& points);

EvalSnapshot evaluate(TrainerState& state);

TrainingRecord train(const TrainingConfig& config, const data::DistSpec& dist);

/// Finite-space variant: categorical generator logits, tabular critic on
/// the integer lattice, exact expectations and exact ratios.
TrainingRecord train_exact(const TrainingConfig& config, const data::DistSpec& dist);

}  // namespace vgan::core

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "vgan/diffmath/tape.hpp"
#include "vgan/models/mlp.hpp"

namespace vgan::core {

enum class Phase { kCritic, kGenerator };

const char* phase_name(Phase phase);

/// One optimizer step. Fields that do not apply to the phase are empty.
struct StepLog {
  std::size_t iter = 0;
  Phase phase = Phase::kCritic;
  std::optional<double> critic_loss;
  std::optional<double> gen_loss;
  std::optional<double> gp;
  std::optional<double> weight_entropy;
  std::optional<double> grad_norm_phi;
  std::optional<double> grad_norm_theta;
  std::optional<double> ratio_mean;
  std::optional<double> ratio_clipped_frac;
};

struct EvalSnapshot {
  std::size_t iter = 0;
  std::size_t modes_covered = 0;
  std::size_t n_modes = 0;
  double high_quality_fraction = 0.0;
  /// Sliced W1 to fresh real samples (exact W1 on finite spaces).
  double sliced_w = 0.0;
  /// Total variation to the target (finite spaces only).
  std::optional<double> total_variation;
};

struct TrainingRecord {
  std::vector<StepLog> steps;
  std::vector<EvalSnapshot> evals;
  bool aborted = false;
  std::string abort_reason;
  std::size_t iterations_completed = 0;
  /// Final generated points, one per row.
  diffmath::Matrix final_samples;
  /// Generator parameters (categorical logits on finite spaces) at the end.
  models::ModelParams final_generator;

  std::vector<double> critic_losses() const;
  std::vector<double> generator_losses() const;
  const EvalSnapshot* final_eval() const { return evals.empty() ? nullptr : &evals.back(); }
};

}  // namespace vgan::core

// The four subcommands as library calls. Every artifact is a pure function
// of its inputs; nothing depends on wall-clock time or thread scheduling.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "vgan/cli/config.hpp"
#include "vgan/core/training_record.hpp"
#include "vgan/exact/finite_space.hpp"
#include "vgan/metrics/metrics.hpp"

namespace vgan::cli {

inline constexpr const char* kMetricsHeader = "# vgan metrics v1";
inline constexpr const char* kSweepHeader = "# vgan sweep v1";
inline constexpr const char* kComparisonHeader = "# vgan ablation v1";

// ---- artifacts -------------------------------------------------------------

std::string metrics_csv(const core::TrainingRecord& record);
std::string samples_csv(const diffmath::Matrix& samples);
metrics::CollapseCriteria collapse_criteria(const RunConfig& config);
nlohmann::json summary_json(const RunConfig& config, const core::TrainingRecord& record);
/// metrics.csv, summary.json, samples.csv and generator.ckpt under `dir`.
void write_run_artifacts(const std::filesystem::path& dir, const RunConfig& config,
                         const core::TrainingRecord& record);
void write_text(const std::filesystem::path& path, const std::string& text);

// ---- train -----------------------------------------------------------------

core::TrainingRecord run_train(const RunConfig& config, std::ostream& log);

// ---- sweep -----------------------------------------------------------------

enum class Variant { kBaseline, kReweighting, kClipping, kFull };

const char* variant_name(Variant v);
Variant parse_variant(const std::string& name);
/// Feature flags and step schedule of a variant applied to `base`.
core::TrainingConfig apply_variant(core::TrainingConfig base, Variant v);

struct SweepSpec {
  std::size_t trials = 200;
  double lr_min = 1e-5;
  double lr_max = 1e-3;
  std::vector<std::size_t> batch_sizes{64, 128, 256};
  std::vector<models::Activation> activations{models::Activation::kRelu,
                                              models::Activation::kLeakyRelu};
  std::vector<std::size_t> hidden_widths{32, 64};
  std::uint64_t master_seed = 0;
  std::vector<Variant> variants{Variant::kBaseline, Variant::kReweighting, Variant::kClipping,
                                Variant::kFull};
  /// Everything not randomized (iterations, distribution, ...).
  RunConfig base;

  void validate() const;
};

/// Same key = value format as run configs; sweep keys carry a "sweep."
/// prefix (trials, lr_min, lr_max, batch_sizes, activations, hidden_widths,
/// master_seed, variants), all other keys configure the base run.
SweepSpec parse_sweep(const std::string& text);
SweepSpec load_sweep(const std::filesystem::path& path);

struct TrialConfig {
  std::size_t trial = 0;
  Variant variant = Variant::kBaseline;
  RunConfig config;
};

/// Trial t draws its randomized fields from a stream seeded by
/// (master seed, t), shared by all variants so they see the same
/// hyper-parameters; the training seed is derived from (master seed, t,
/// variant).
std::vector<TrialConfig> sweep_trials(const SweepSpec& spec);

struct TrialResult {
  std::size_t trial = 0;
  Variant variant = Variant::kBaseline;
  double lr = 0.0;
  std::size_t batch_size = 0;
  models::Activation activation = models::Activation::kLeakyRelu;
  std::size_t hidden = 0;
  bool collapsed = false;
  std::string reason;
  std::size_t final_coverage = 0;
  double final_sliced_w = 0.0;
};

struct VariantSummary {
  Variant variant = Variant::kBaseline;
  std::size_t trials = 0;
  std::size_t collapsed = 0;
  double collapse_rate = 0.0;
  double mean_coverage = 0.0;
  double mean_sliced_w = 0.0;
};

struct SweepResult {
  /// Sorted by (trial, variant).
  std::vector<TrialResult> rows;
  std::vector<VariantSummary> summary;
};

/// Runs every trial on `jobs` threads. When `out_dir` is non-empty, writes
/// sweep.csv, sweep_summary.csv and one summary.json per trial.
SweepResult run_sweep(const SweepSpec& spec, std::size_t jobs,
                      const std::filesystem::path& out_dir, std::ostream& log);
std::string sweep_csv(const SweepResult& result);
std::string sweep_summary_csv(const SweepResult& result);

// ---- oracle ----------------------------------------------------------------

/// Closed-form q under test; defaults to exact::exact_q.
using QSolver = std::function<exact::QDist(const exact::FiniteSpace&, double)>;

struct OracleOptions {
  std::size_t instances = 1000;
  std::uint64_t seed = 0;
  std::size_t max_outcomes = 16;
  QSolver solver;
};

struct OracleReport {
  bool passed = true;
  std::size_t instances = 0;
  /// property -> [checked, failed]
  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> properties;
  /// First failures, each a replayable instance.
  std::vector<nlohmann::json> failures;

  nlohmann::json to_json() const;
};

OracleReport run_oracle(const OracleOptions& options);

// ---- ablate ----------------------------------------------------------------

struct AblationRun {
  Variant variant = Variant::kBaseline;
  std::size_t iterations = 0;
  std::size_t batches_per_iteration = 0;
  core::TrainingRecord record;
};

/// The four variants with iteration counts chosen so each consumes the
/// batch budget base.iterations * (base.n_critic + base.n_gen) to within one
/// outer iteration. Generator and critic batches count; classifier batches
/// do not.
std::vector<AblationRun> run_ablate(const RunConfig& base, const std::filesystem::path& out_dir,
                                    std::ostream& log);
std::string comparison_csv(const std::vector<AblationRun>& runs);

}  // namespace vgan::cli

// Desk-scale evaluation: mode coverage, Wasserstein estimates, loss
// stability and collapse detection.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vgan/core/training_record.hpp"
#include "vgan/data/rng.hpp"
#include "vgan/diffmath/tape.hpp"

namespace vgan::metrics {

using diffmath::Matrix;

struct CoverageReport {
  std::size_t modes_covered = 0;
  std::size_t n_modes = 0;
  /// Fraction of samples within `radius` of some center.
  double high_quality_fraction = 0.0;
};

CoverageReport mode_coverage(const Matrix& samples, const std::vector<std::vector<double>>& centers,
                             double radius, std::size_t min_count);

/// Exact W1 between two 1-D empirical distributions. Equal sizes use the
/// sorted coupling; unequal sizes integrate |F_a - F_b|.
double wasserstein_1d(std::span<const double> a, std::span<const double> b);

/// Mean of wasserstein_1d over n_proj random unit directions.
double sliced_wasserstein(const Matrix& a, const Matrix& b, std::size_t n_proj,
                          data::SplitMix64& rng);

/// Unbiased variance over each trailing window; empty if the series is
/// shorter than the window.
std::vector<double> rolling_variance(std::span<const double> series, std::size_t window);

double mean(std::span<const double> xs);

struct CollapseCriteria {
  std::size_t window = 2000;
  std::size_t coverage_floor = 2;
  /// Trailing-window mean |critic loss| above this counts as divergence.
  double loss_explosion = 1e6;
  /// Trailing-window critic-loss variance below this counts as frozen.
  double loss_freeze_variance = 1e-20;
};

struct CollapseVerdict {
  bool collapsed = false;
  bool aborted = false;
  bool below_coverage_floor = false;
  bool loss_degenerate = false;
  /// The sigmoid-loss rule (trailing mean < 1e-20 or > 1 - 1e-20), reported
  /// only; it is not meaningful for an unbounded critic.
  bool sigmoid_rule = false;
  std::string reason;
};

CollapseVerdict assess_collapse(const core::TrainingRecord& record,
                                const CollapseCriteria& criteria);
bool detect_collapse(const core::TrainingRecord& record, const CollapseCriteria& criteria);

}  // namespace vgan::metrics

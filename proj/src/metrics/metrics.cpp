#include "vgan/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vgan::metrics {

CoverageReport mode_coverage(const Matrix& samples, const std::vector<std::vector<double>>& centers,
                             double radius, std::size_t min_count) {
  if (samples.rows() == 0) throw std::invalid_argument("mode_coverage: empty batch");
  if (!(radius > 0.0)) throw std::invalid_argument("mode_coverage: radius must be > 0");
  if (min_count < 1) throw std::invalid_argument("mode_coverage: min_count must be >= 1");
  const double r2 = radius * radius;
  std::vector<std::size_t> counts(centers.size(), 0);
  std::size_t near_any = 0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    bool hit = false;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (centers[k].size() != static_cast<std::size_t>(samples.cols())) {
        throw std::invalid_argument("mode_coverage: center dimension mismatch");
      }
      double d2 = 0.0;
      for (Eigen::Index j = 0; j < samples.cols(); ++j) {
        const double d = samples(i, j) - centers[k][static_cast<std::size_t>(j)];
        d2 += d * d;
      }
      if (d2 <= r2) {
        ++counts[k];
        hit = true;
      }
    }
    if (hit) ++near_any;
  }
  CoverageReport report;
  report.n_modes = centers.size();
  report.modes_covered = static_cast<std::size_t>(
      std::count_if(counts.begin(), counts.end(), [&](std::size_t c) { return c >= min_count; }));
  report.high_quality_fraction =
      static_cast<double>(near_any) / static_cast<double>(samples.rows());
  return report;
}

double wasserstein_1d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein_1d: empty input");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  if (sa.size() == sb.size()) {
    double total = 0.0;
    for (std::size_t i = 0; i < sa.size(); ++i) total += std::abs(sa[i] - sb[i]);
    return total / static_cast<double>(sa.size());
  }
  // Integrate |F_a - F_b| between consecutive merged support points.
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t ia = 0;
  std::size_t ib = 0;
  double prev = std::min(sa.front(), sb.front());
  double total = 0.0;
  while (ia < sa.size() || ib < sb.size()) {
    double next;
    if (ib >= sb.size() || (ia < sa.size() && sa[ia] <= sb[ib])) {
      next = sa[ia];
    } else {
      next = sb[ib];
    }
    total += std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb) * (next - prev);
    while (ia < sa.size() && sa[ia] == next) ++ia;
    while (ib < sb.size() && sb[ib] == next) ++ib;
    prev = next;
  }
  return total;
}

double sliced_wasserstein(const Matrix& a, const Matrix& b, std::size_t n_proj,
                          data::SplitMix64& rng) {
  if (a.cols() != b.cols()) throw std::invalid_argument("sliced_wasserstein: dimension mismatch");
  if (n_proj < 1) throw std::invalid_argument("sliced_wasserstein: n_proj must be >= 1");
  const Eigen::Index d = a.cols();
  std::vector<double> pa(static_cast<std::size_t>(a.rows()));
  std::vector<double> pb(static_cast<std::size_t>(b.rows()));
  Eigen::VectorXd dir(d);
  double total = 0.0;
  for (std::size_t p = 0; p < n_proj; ++p) {
    double norm = 0.0;
    do {
      for (Eigen::Index j = 0; j < d; ++j) dir(j) = rng.normal();
      norm = dir.norm();
    } while (norm == 0.0);
    dir /= norm;
    for (Eigen::Index i = 0; i < a.rows(); ++i) pa[static_cast<std::size_t>(i)] = a.row(i).dot(dir);
    for (Eigen::Index i = 0; i < b.rows(); ++i) pb[static_cast<std::size_t>(i)] = b.row(i).dot(dir);
    total += wasserstein_1d(pa, pb);
  }
  return total / static_cast<double>(n_proj);
}

std::vector<double> rolling_variance(std::span<const double> series, std::size_t window) {
  if (window < 2) throw std::invalid_argument("rolling_variance: window must be >= 2");
  std::vector<double> out;
  if (series.size() < window) return out;
  out.reserve(series.size() - window + 1);
  for (std::size_t end = window; end <= series.size(); ++end) {
    const auto w = series.subspan(end - window, window);
    const double m = mean(w);
    double ss = 0.0;
    for (double x : w) ss += (x - m) * (x - m);
    out.push_back(ss / static_cast<double>(window - 1));
  }
  return out;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

CollapseVerdict assess_collapse(const core::TrainingRecord& record,
                                const CollapseCriteria& criteria) {
  if (criteria.window < 1) throw std::invalid_argument("collapse window must be >= 1");
  CollapseVerdict v;
  v.aborted = record.aborted;
  if (const auto* last = record.final_eval(); last != nullptr) {
    v.below_coverage_floor = last->modes_covered < criteria.coverage_floor;
  }
  const std::vector<double> losses = record.critic_losses();
  if (losses.size() >= criteria.window) {
    const auto tail = std::span<const double>(losses).last(criteria.window);
    const double m = mean(tail);
    double mean_abs = 0.0;
    double ss = 0.0;
    for (double x : tail) {
      mean_abs += std::abs(x);
      ss += (x - m) * (x - m);
    }
    mean_abs /= static_cast<double>(tail.size());
    const double var = tail.size() > 1 ? ss / static_cast<double>(tail.size() - 1) : 0.0;
    v.loss_degenerate = mean_abs > criteria.loss_explosion ||
                        (tail.size() > 1 && var < criteria.loss_freeze_variance);
    v.sigmoid_rule = m < 1e-20 || m > 1.0 - 1e-20;
  }
  v.collapsed = v.aborted || v.below_coverage_floor || v.loss_degenerate;
  if (v.aborted) {
    v.reason = "aborted: " + record.abort_reason;
  } else if (v.below_coverage_floor) {
    v.reason = "coverage below floor";
  } else if (v.loss_degenerate) {
    v.reason = "degenerate critic loss";
  }
  return v;
}

bool detect_collapse(const core::TrainingRecord& record, const CollapseCriteria& criteria) {
  return assess_collapse(record, criteria).collapsed;
}

}  // namespace vgan::metrics

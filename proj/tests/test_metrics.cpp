#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "vgan/data/distributions.hpp"
#include "vgan/metrics/metrics.hpp"

using namespace vgan;
using diffmath::Matrix;

namespace {

Matrix points(const std::vector<std::vector<double>>& rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

core::TrainingRecord record_with(std::vector<double> critic_losses, std::size_t covered) {
  core::TrainingRecord r;
  for (double l : critic_losses) {
    core::StepLog s;
    s.phase = core::Phase::kCritic;
    s.critic_loss = l;
    r.steps.push_back(s);
  }
  core::EvalSnapshot e;
  e.modes_covered = covered;
  e.n_modes = 8;
  r.evals.push_back(e);
  return r;
}

}  // namespace

TEST_CASE("mode_coverage: examples") {
  const auto centers = data::DistSpec::ring(8, 2.0, 0.05).centers();
  std::vector<std::vector<double>> one(100, centers[3]);
  auto r1 = metrics::mode_coverage(points(one), centers, 0.15, 10);
  CHECK(r1.modes_covered == 1);
  CHECK(r1.high_quality_fraction == 1.0);

  auto r2 = metrics::mode_coverage(points(centers), centers, 0.15, 1);
  CHECK(r2.modes_covered == 8);

  data::SplitMix64 rng(1);
  const Matrix far = testing::uniform_matrix(rng, 500, 2, 50.0, 60.0);
  auto r3 = metrics::mode_coverage(far, centers, 0.15, 1);
  CHECK(r3.modes_covered == 0);
  CHECK(r3.high_quality_fraction == 0.0);

  CHECK_THROWS_AS(metrics::mode_coverage(Matrix(0, 2), centers, 0.15, 1), std::invalid_argument);
}

TEST_CASE("property: mode_coverage is permutation invariant") {
  data::SplitMix64 rng(2);
  auto centers = data::DistSpec::ring(8, 2.0, 0.3).centers();
  const data::Batch b = data::sample_real(data::DistSpec::ring(8, 2.0, 0.3), 400, rng);
  const auto base = metrics::mode_coverage(b.points, centers, 0.5, 20);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix shuffled = b.points;
    for (Eigen::Index i = shuffled.rows() - 1; i > 0; --i) {
      const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
      shuffled.row(i).swap(shuffled.row(j));
    }
    std::vector<std::vector<double>> c = centers;
    std::reverse(c.begin(), c.end());
    const auto r = metrics::mode_coverage(shuffled, c, 0.5, 20);
    CHECK(r.modes_covered == base.modes_covered);
    CHECK(r.high_quality_fraction == base.high_quality_fraction);
  }
}

TEST_CASE("wasserstein_1d: examples") {
  const std::vector<double> a{0.0, 0.0};
  const std::vector<double> b{1.0, 1.0};
  CHECK(metrics::wasserstein_1d(a, b) == 1.0);
  const std::vector<double> c{0.0, 2.0};
  const std::vector<double> d{3.0, 1.0};
  CHECK(metrics::wasserstein_1d(c, d) == 1.0);
  CHECK(metrics::wasserstein_1d(c, c) == 0.0);
  // Unequal sizes integrate the CDF gap: {0} vs {0, 1} -> 0.5.
  const std::vector<double> e{0.0};
  const std::vector<double> f{0.0, 1.0};
  CHECK(metrics::wasserstein_1d(e, f) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(metrics::wasserstein_1d(std::vector<double>{}, f), std::invalid_argument);
}

TEST_CASE("property: wasserstein_1d is a metric on equal-size samples") {
  data::SplitMix64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(20);
    const auto x = testing::uniform_vector(rng, n, -5, 5);
    const auto y = testing::uniform_vector(rng, n, -5, 5);
    const auto z = testing::uniform_vector(rng, n, -5, 5);
    const double xy = metrics::wasserstein_1d(x, y);
    CHECK(xy == metrics::wasserstein_1d(y, x));
    CHECK(xy >= 0.0);
    CHECK(metrics::wasserstein_1d(x, x) == 0.0);
    CHECK(xy <= metrics::wasserstein_1d(x, z) + metrics::wasserstein_1d(z, y) + 1e-12);
    std::vector<double> xp = x;
    std::reverse(xp.begin(), xp.end());
    CHECK(metrics::wasserstein_1d(xp, y) == xy);
  }
}

TEST_CASE("sliced_wasserstein: examples") {
  data::SplitMix64 rng(4);
  const Matrix a = testing::uniform_matrix(rng, 300, 2, -1, 1);
  data::SplitMix64 p1(9);
  CHECK(metrics::sliced_wasserstein(a, a, 32, p1) == 0.0);

  Matrix b = a;
  b.col(0).array() += 0.6;
  b.col(1).array() -= 0.8;  // shift of norm 1
  data::SplitMix64 p2(9);
  const double d = metrics::sliced_wasserstein(a, b, 32, p2);
  CHECK(d > 0.0);
  CHECK(d <= 1.0 + 1e-12);

  data::SplitMix64 p3(9);
  data::SplitMix64 p4(9);
  CHECK(metrics::sliced_wasserstein(a, b, 16, p3) == metrics::sliced_wasserstein(b, a, 16, p4));
  data::SplitMix64 p5(1);
  CHECK_THROWS_AS(metrics::sliced_wasserstein(a, Matrix::Zero(3, 3), 4, p5),
                  std::invalid_argument);
}

TEST_CASE("rolling_variance: examples and properties") {
  const std::vector<double> constant(10, 3.0);
  for (double v : metrics::rolling_variance(constant, 4)) CHECK(v == 0.0);

  std::vector<double> alt;
  for (int i = 0; i < 10; ++i) alt.push_back(i % 2 == 0 ? 1.0 : -1.0);
  const auto rv = metrics::rolling_variance(alt, 2);
  CHECK(rv.size() == 9);
  for (double v : rv) CHECK(v == 2.0);

  CHECK(metrics::rolling_variance(alt, 11).empty());
  CHECK_THROWS_AS(metrics::rolling_variance(alt, 1), std::invalid_argument);

  data::SplitMix64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = testing::uniform_vector(rng, 40, -3, 3);
    const double c = rng.uniform(-4, 4);
    std::vector<double> scaled = s;
    for (double& x : scaled) x *= c;
    const auto a = metrics::rolling_variance(s, 7);
    const auto b = metrics::rolling_variance(scaled, 7);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i] >= 0.0);
      CHECK(b[i] == doctest::Approx(c * c * a[i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("detect_collapse: examples") {
  metrics::CollapseCriteria crit;
  crit.window = 10;
  data::SplitMix64 rng(6);
  const auto noisy = testing::uniform_vector(rng, 20, -1, 1);

  core::TrainingRecord aborted = record_with(noisy, 8);
  aborted.aborted = true;
  CHECK(metrics::detect_collapse(aborted, crit));

  CHECK_FALSE(metrics::detect_collapse(record_with(noisy, 8), crit));
  CHECK(metrics::detect_collapse(record_with(noisy, 1), crit));

  const auto frozen = record_with(std::vector<double>(20, -0.5), 8);
  const auto v = metrics::assess_collapse(frozen, crit);
  CHECK(v.loss_degenerate);
  CHECK(v.collapsed);

  const auto exploded = record_with(std::vector<double>(20, 1e7), 8);
  CHECK(metrics::assess_collapse(exploded, crit).loss_degenerate);
}

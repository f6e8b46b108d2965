#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "vgan/data/distributions.hpp"
#include "vgan/data/rng.hpp"

using namespace vgan;
using data::DistSpec;
using data::SplitMix64;

TEST_CASE("SplitMix64 test vector") {
  SplitMix64 rng(1234567);
  CHECK(rng.next() == 6457827717110365317ULL);
  CHECK(rng.next() == 3203168211198807973ULL);
  CHECK(rng.next() == 9817491932198370423ULL);
  CHECK(rng.next() == 4593380528125082431ULL);
  CHECK(rng.next() == 16408922859458223821ULL);
}

TEST_CASE("SplitMix64 uniform lies in [0, 1) and below() in range") {
  SplitMix64 rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(rng.below(7) < 7);
  }
}

TEST_CASE("derive_seed separates streams") {
  CHECK(data::derive_seed(1, 0) != data::derive_seed(1, 1));
  CHECK(data::derive_seed(1, 0, 1) != data::derive_seed(1, 1, 0));
  CHECK(data::derive_seed(2, 3, 4) == data::derive_seed(2, 3, 4));
}

TEST_CASE("sample_real: ring modes are balanced") {
  const DistSpec ring = DistSpec::ring(8, 2.0, 0.02);
  SplitMix64 rng(99);
  const data::Batch b = data::sample_real(ring, 8000, rng);
  const auto centers = ring.centers();
  std::vector<int> counts(8, 0);
  for (Eigen::Index i = 0; i < b.points.rows(); ++i) {
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const double dx = b.points(i, 0) - centers[k][0];
      const double dy = b.points(i, 1) - centers[k][1];
      if (dx * dx + dy * dy < best_d) {
        best_d = dx * dx + dy * dy;
        best = k;
      }
    }
    ++counts[best];
  }
  for (int c : counts) {
    CHECK(c >= 850);
    CHECK(c <= 1150);
  }
}

TEST_CASE("sample_real: determinism and degenerate categorical") {
  const DistSpec ring = DistSpec::ring(8, 2.0, 0.05);
  SplitMix64 a(7);
  SplitMix64 b(7);
  CHECK(data::sample_real(ring, 64, a).points == data::sample_real(ring, 64, b).points);

  const DistSpec cat = DistSpec::categorical({1.0, 0.0, 0.0});
  SplitMix64 rng(3);
  const data::Batch s = data::sample_real(cat, 100, rng);
  for (Eigen::Index i = 0; i < s.points.rows(); ++i) CHECK(s.points(i, 0) == 0.0);
}

TEST_CASE("density: exact values") {
  const DistSpec mix = DistSpec::mixture_1d({1.0}, {0.0}, {1.0});
  const std::vector<double> zero{0.0};
  CHECK(data::density(mix, zero) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
  CHECK(data::density(mix, zero) == doctest::Approx(0.3989422804).epsilon(1e-10));

  const DistSpec cat = DistSpec::categorical({0.25, 0.75});
  const std::vector<double> one{1.0};
  CHECK(data::density(cat, one) == 0.75);
}

TEST_CASE("property: density is nonnegative and integrates to one on 1-D mixtures") {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = 1 + rng.below(4);
    std::vector<double> w = testing::random_pmf(rng, k);
    std::vector<double> mu = testing::uniform_vector(rng, k, -3.0, 3.0);
    std::vector<double> sd = testing::uniform_vector(rng, k, 0.2, 1.0);
    const DistSpec mix = DistSpec::mixture_1d(w, mu, sd);
    // Trapezoid rule on [-12, 12].
    const int n = 24000;
    const double h = 24.0 / n;
    double total = 0.0;
    for (int i = 0; i <= n; ++i) {
      const std::vector<double> x{-12.0 + h * i};
      const double d = data::density(mix, x);
      CHECK(d >= 0.0);
      total += (i == 0 || i == n ? 0.5 : 1.0) * d;
    }
    CHECK(total * h == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("sample_noise: moments") {
  SplitMix64 rng(2024);
  const data::Batch b = data::sample_noise(1, 100000, rng);
  double m = 0.0;
  for (Eigen::Index i = 0; i < b.points.rows(); ++i) m += b.points(i, 0);
  m /= 100000.0;
  double v = 0.0;
  for (Eigen::Index i = 0; i < b.points.rows(); ++i) v += (b.points(i, 0) - m) * (b.points(i, 0) - m);
  v /= 99999.0;
  CHECK(std::abs(m) < 0.02);
  CHECK(std::abs(v - 1.0) < 0.03);
}

TEST_CASE("interpolate: endpoints and mismatch") {
  SplitMix64 rng(8);
  const DistSpec ring = DistSpec::ring(8, 2.0, 0.05);
  const data::Batch real = data::sample_real(ring, 5, rng);
  const data::Batch fake = data::sample_noise(2, 5, rng);
  const std::vector<double> zeros(5, 0.0);
  const std::vector<double> ones(5, 1.0);
  CHECK(data::interpolate_with(real, fake, zeros).points == fake.points);
  CHECK(data::interpolate_with(real, fake, ones).points == real.points);
  const data::Batch short_fake = data::sample_noise(2, 4, rng);
  CHECK_THROWS_AS(data::interpolate(real, short_fake, rng), std::invalid_argument);
  const data::Batch mixed = data::interpolate(real, fake, rng);
  CHECK(mixed.provenance == data::Provenance::kInterpolated);
}

TEST_CASE("DistSpec validation") {
  CHECK_THROWS_AS(DistSpec::categorical({0.5, 0.6}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(DistSpec::categorical({-0.5, 1.5}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(DistSpec::ring(0, 2.0, 0.05).validate(), std::invalid_argument);
  CHECK_THROWS_AS(DistSpec::mixture_1d({1.0}, {0.0}, {0.0}).validate(), std::invalid_argument);
  CHECK_NOTHROW(DistSpec::grid(5, 5, 1.0, 0.05).validate());
  CHECK(DistSpec::grid(5, 5, 1.0, 0.05).centers().size() == 25);
}

TEST_CASE("density: ring integrates to one on a fine grid") {
  for (double sigma : {0.05, 0.2}) {
    const DistSpec ring = DistSpec::ring(8, 2.0, sigma);
    // Midpoint rule on [-3, 3]^2.
    const int n = 1200;
    const double h = 6.0 / n;
    double total = 0.0;
    std::vector<double> x(2);
    for (int i = 0; i < n; ++i) {
      x[0] = -3.0 + h * (i + 0.5);
      for (int j = 0; j < n; ++j) {
        x[1] = -3.0 + h * (j + 0.5);
        total += data::density(ring, x);
      }
    }
    CHECK(std::abs(total * h * h - 1.0) <= 1e-3);
  }
}

#include <cmath>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "vgan/exact/finite_space.hpp"

using namespace vgan;
using exact::FiniteSpace;

namespace {

FiniteSpace random_space(data::SplitMix64& rng, std::size_t k) {
  return FiniteSpace{testing::random_pmf(rng, k), testing::random_pmf(rng, k),
                     testing::uniform_vector(rng, k, -5.0, 5.0)};
}

}  // namespace

TEST_CASE("exact_q: examples") {
  FiniteSpace s{{0.5, 0.5}, {0.5, 0.5}, {0.0, std::log(3.0)}};
  const auto q = exact::exact_q(s, 1.0);
  CHECK(q.q[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(q.q[1] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(std::exp(q.log_z) == doctest::Approx(2.0).epsilon(1e-15));

  FiniteSpace flat{{0.2, 0.8}, {0.3, 0.7}, {1.7, 1.7}};
  const auto qf = exact::exact_q(flat, 1.0);
  CHECK(qf.q[0] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(qf.q[1] == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("exact_q: normalization against a naive sum") {
  data::SplitMix64 rng(200);
  for (int trial = 0; trial < 200; ++trial) {
    const FiniteSpace s = random_space(rng, 5);
    const auto q = exact::exact_q(s, 1.0);
    double z = 0.0;
    for (std::size_t i = 0; i < 5; ++i) z += s.p_theta[i] * std::exp(s.f[i]);
    double total = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(q.q[i] == doctest::Approx(s.p_theta[i] * std::exp(s.f[i]) / z).epsilon(1e-12));
      CHECK(q.q[i] > 0.0);
      total += q.q[i];
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
    CHECK(q.log_z == doctest::Approx(std::log(z)).epsilon(1e-12));
  }
}

TEST_CASE("exact_q: large offsets stay finite") {
  FiniteSpace s{{0.5, 0.5}, {0.5, 0.5}, {800.0, 800.0 + std::log(3.0)}};
  const auto q = exact::exact_q(s, 1.0);
  CHECK(q.q[1] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(std::isfinite(q.log_z));
}

TEST_CASE("variational_objective: examples and maximality") {
  FiniteSpace s{{0.5, 0.5}, {0.5, 0.5}, {0.0, std::log(3.0)}};
  const auto q = exact::exact_q(s, 1.0);
  CHECK(exact::variational_objective(s, q.q) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(exact::variational_objective(s, s.p_theta) ==
        doctest::Approx(0.5 * std::log(3.0)).epsilon(1e-15));

  data::SplitMix64 rng(201);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = 2 + rng.below(15);
    const FiniteSpace r = random_space(rng, k);
    const double alpha = trial % 3 == 0 ? 0.5 : (trial % 3 == 1 ? 1.0 : 2.0);
    const auto qs = exact::exact_q(r, alpha);
    const double best = exact::variational_objective(r, qs.q, alpha);
    CHECK(std::abs(best - qs.log_z) <= 1e-12 * std::max(1.0, std::abs(qs.log_z)));
    const double mix = rng.uniform(0.0, 0.5);
    std::vector<double> qp(k);
    for (std::size_t i = 0; i < k; ++i) qp[i] = (1.0 - mix) * qs.q[i] + mix / static_cast<double>(k);
    CHECK(exact::variational_objective(r, qp, alpha) <= best + 1e-12);
  }
}

TEST_CASE("exact_kl: examples") {
  const std::vector<double> a{0.25, 0.75};
  const std::vector<double> b{0.5, 0.5};
  CHECK(exact::exact_kl(a, a) == 0.0);
  CHECK(exact::exact_kl(a, b) == doctest::Approx(0.130812).epsilon(1e-5));
  CHECK(exact::exact_kl(b, a) == doctest::Approx(0.143841).epsilon(1e-5));
  CHECK(exact::exact_kl(std::vector<double>{0.0, 1.0}, std::vector<double>{0.5, 0.5}) ==
        doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(exact::exact_kl(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0}),
                  std::domain_error);
}

TEST_CASE("reverse_kl_gap_bound: examples and randomized instances") {
  FiniteSpace flat{{0.5, 0.5}, {0.5, 0.5}, {1.0, 1.0}};
  const auto g0 = exact::reverse_kl_gap_bound(flat, 1.0);
  CHECK(g0.gap == 0.0);
  CHECK(g0.holds);

  FiniteSpace s{{0.5, 0.5}, {0.5, 0.5}, {0.0, std::log(3.0)}};
  const auto g = exact::reverse_kl_gap_bound(s, 1.0);
  CHECK(g.gap == doctest::Approx(0.013029).epsilon(1e-4));
  CHECK(g.bound == doctest::Approx(2.0 * std::log(3.0)).epsilon(1e-15));
  CHECK(g.holds);

  data::SplitMix64 rng(202);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 2 + rng.below(15);
    const double alpha = trial % 3 == 0 ? 0.5 : (trial % 3 == 1 ? 1.0 : 2.0);
    const auto r = exact::reverse_kl_gap_bound(random_space(rng, k), alpha);
    CHECK(r.holds);
    CHECK(r.gap >= 0.0);
  }
}

TEST_CASE("em_step: forward M-step sets p_theta to q bit-wise and is monotone") {
  data::SplitMix64 rng(203);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng.below(10);
    FiniteSpace s = random_space(rng, k);
    const auto q = exact::exact_q(s, 1.0);
    const auto em = exact::em_step(s, 1.0, exact::MStep::kForwardKl);
    CHECK(em.p_theta == q.q);

    double prev = exact::variational_objective(s, exact::exact_q(s, 1.0).q);
    for (int it = 0; it < 10; ++it) {
      s.p_theta = exact::em_step(s, 1.0, exact::MStep::kForwardKl).p_theta;
      const double now = exact::variational_objective(s, exact::exact_q(s, 1.0).q);
      CHECK(now >= prev - 1e-12);
      prev = now;
    }
  }
}

TEST_CASE("em_step: reverse M-step") {
  data::SplitMix64 rng(204);
  FiniteSpace s = random_space(rng, 6);
  const auto q = exact::exact_q(s, 1.0);
  // Starting at q the logits do not move.
  FiniteSpace at_q{s.p_r, q.q, std::vector<double>(6, 0.0)};
  std::vector<double> logits(6);
  for (std::size_t i = 0; i < 6; ++i) logits[i] = std::log(q.q[i]);
  const auto still = exact::em_step(at_q, 1.0, exact::MStep::kReverseKl, 0.5, 10, logits);
  for (std::size_t i = 0; i < 6; ++i) CHECK(still.logits[i] == doctest::Approx(logits[i]).epsilon(1e-12));

  // From elsewhere gradient descent reduces KL(p_theta || q).
  const auto moved = exact::em_step(s, 1.0, exact::MStep::kReverseKl, 1.0, 3000);
  CHECK(exact::exact_kl(moved.p_theta, q.q) < exact::exact_kl(s.p_theta, q.q));
  CHECK(exact::exact_kl(moved.p_theta, q.q) < 1e-4);
}

TEST_CASE("bayes_classifier: examples") {
  const auto half = exact::bayes_classifier(std::vector<double>{0.3, 0.7}, std::vector<double>{0.3, 0.7});
  CHECK(*half[0] == 0.5);
  CHECK(*half[1] == 0.5);
  const auto c = exact::bayes_classifier(std::vector<double>{1.0, 0.0}, std::vector<double>{0.5, 0.5});
  CHECK(*c[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(*c[1] == 0.0);
  const auto undefined =
      exact::bayes_classifier(std::vector<double>{1.0, 0.0}, std::vector<double>{1.0, 0.0});
  CHECK_FALSE(undefined[1].has_value());

  data::SplitMix64 rng(205);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p_r = testing::sparse_pmf(rng, 8);
    const auto p_t = testing::random_pmf(rng, 8);
    const auto cs = exact::bayes_classifier(p_r, p_t);
    for (std::size_t i = 0; i < 8; ++i) {
      if (p_r[i] > 0.0) {
        CHECK(((1.0 - *cs[i]) / *cs[i]) * p_r[i] == doctest::Approx(p_t[i]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("exact_ratio: examples") {
  const std::vector<double> p{0.75, 0.25};
  const std::vector<double> q{0.25, 0.75};
  const auto one = exact::exact_ratio(p, p);
  CHECK(one[0] == 1.0);
  CHECK(one[1] == 1.0);
  const auto r = exact::exact_ratio(p, q);
  CHECK(r[0] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(r[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(exact::exact_ratio(q, std::vector<double>{1.0, 0.0}), std::domain_error);
  CHECK(exact::exact_ratio(std::vector<double>{1.0, 0.0}, std::vector<double>{1.0, 0.0})[1] == 0.0);
}

TEST_CASE("FiniteSpace validation") {
  CHECK_THROWS_AS((FiniteSpace{{0.5, 0.5}, {1.0, 0.0}, {0.0, 0.0}}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((FiniteSpace{{0.5, 0.6}, {0.5, 0.5}, {0.0, 0.0}}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((FiniteSpace{{0.5, 0.5}, {0.5, 0.5}, {0.0}}).validate(), std::invalid_argument);
  const auto s = FiniteSpace::from_logits({0.5, 0.5}, std::vector<double>{0.0, std::log(3.0)}, {0, 0});
  CHECK(s.p_theta[1] == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("lattice distances") {
  const std::vector<double> a{1.0, 0.0, 0.0};
  const std::vector<double> b{0.0, 0.0, 1.0};
  CHECK(exact::lattice_w1(a, b) == 2.0);
  CHECK(exact::total_variation(a, b) == 1.0);
  CHECK(exact::lattice_w1(a, a) == 0.0);
}

#include "vgan/exact/finite_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "vgan/diffmath/tape.hpp"
#include "vgan/models/mlp.hpp"

namespace vgan::exact {

namespace {

void check_pmf(std::span<const double> p, const char* name) {
  if (p.empty()) throw std::invalid_argument(std::string(name) + ": empty pmf");
  if (p.size() > kMaxOutcomes) {
    throw std::invalid_argument(std::string(name) + ": more than " +
                                std::to_string(kMaxOutcomes) + " outcomes");
  }
  double total = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument(std::string(name) + ": entries must be finite and >= 0");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument(std::string(name) + ": does not sum to 1");
  }
}

void check_sizes(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
}

}  // namespace

FiniteSpace FiniteSpace::from_logits(std::vector<double> p_r, std::span<const double> logits,
                                     std::vector<double> f) {
  FiniteSpace s{std::move(p_r), models::categorical_probs(logits), std::move(f)};
  s.validate();
  return s;
}

void FiniteSpace::validate() const {
  check_pmf(p_r, "p_r");
  check_pmf(p_theta, "p_theta");
  check_sizes(p_r.size(), p_theta.size(), "FiniteSpace");
  check_sizes(f.size(), p_theta.size(), "FiniteSpace");
  for (double v : p_theta) {
    if (!(v > 0.0)) throw std::invalid_argument("p_theta: must be strictly positive");
  }
  for (double v : f) {
    if (!std::isfinite(v)) throw std::invalid_argument("f: non-finite score");
  }
}

QDist exact_q(const FiniteSpace& space, double alpha) {
  space.validate();
  const std::size_t k = space.size();
  std::vector<double> logit(k);
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    logit[i] = std::log(space.p_theta[i]) + alpha * space.f[i];
    m = std::max(m, logit[i]);
  }
  QDist out;
  out.q.resize(k);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    out.q[i] = std::exp(logit[i] - m);
    total += out.q[i];
  }
  for (double& v : out.q) v /= total;
  out.log_z = m + std::log(total);
  return out;
}

double variational_objective(const FiniteSpace& space, std::span<const double> q, double alpha) {
  space.validate();
  check_sizes(q.size(), space.size(), "variational_objective");
  double expected = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) expected += q[i] * space.f[i];
  return alpha * expected - exact_kl(q, space.p_theta);
}

double exact_kl(std::span<const double> p, std::span<const double> q) {
  check_sizes(p.size(), q.size(), "exact_kl");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (!(q[i] > 0.0)) {
      throw std::domain_error("exact_kl: p is not absolutely continuous w.r.t. q at index " +
                              std::to_string(i));
    }
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

KlGap reverse_kl_gap_bound(const FiniteSpace& space, double alpha) {
  const QDist q = exact_q(space, alpha);
  const auto [lo, hi] = std::minmax_element(space.f.begin(), space.f.end());
  const double a = std::max(0.0, -*lo);
  const double b = std::max(0.0, *hi);
  KlGap g;
  g.forward_kl = exact_kl(q.q, space.p_theta);
  g.reverse_kl = exact_kl(space.p_theta, q.q);
  g.signed_gap = g.forward_kl - g.reverse_kl;
  g.gap = std::abs(g.signed_gap);
  g.bound = 2.0 * std::abs(alpha) * (a + b);
  g.holds = g.signed_gap <= g.bound;
  g.symmetric_holds = g.gap <= g.bound;
  return g;
}

EmResult em_step(const FiniteSpace& space, double alpha, MStep m_step, double lr,
                 std::size_t steps, std::span<const double> logits) {
  const QDist q = exact_q(space, alpha);
  EmResult out;
  if (m_step == MStep::kForwardKl) {
    out.p_theta = q.q;
    out.logits.resize(q.q.size());
    for (std::size_t i = 0; i < q.q.size(); ++i) out.logits[i] = std::log(q.q[i]);
    return out;
  }

  if (logits.empty()) {
    out.logits.resize(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) out.logits[i] = std::log(space.p_theta[i]);
  } else {
    check_sizes(logits.size(), space.size(), "em_step");
    out.logits.assign(logits.begin(), logits.end());
  }
  std::vector<double> log_q(q.q.size());
  for (std::size_t i = 0; i < q.q.size(); ++i) log_q[i] = std::log(q.q[i]);

  for (std::size_t s = 0; s < steps; ++s) {
    diffmath::Tape tape;
    diffmath::Var z = tape.row_vector(out.logits, true);
    diffmath::Var p = models::categorical_probs(tape, z);
    diffmath::Var lq = tape.row_vector(log_q, false);
    // KL(p_theta || q) = sum p (log p - log q)
    diffmath::Var kl = tape.sum(tape.mul(p, tape.sub(tape.log(p), lq)));
    const diffmath::Matrix& g = tape.gradient(kl, z).value();
    for (std::size_t i = 0; i < out.logits.size(); ++i) {
      out.logits[i] -= lr * g.data()[i];
    }
  }
  out.p_theta = models::categorical_probs(out.logits);
  return out;
}

std::vector<std::optional<double>> bayes_classifier(std::span<const double> p_r,
                                                    std::span<const double> p_theta) {
  check_sizes(p_r.size(), p_theta.size(), "bayes_classifier");
  std::vector<std::optional<double>> c(p_r.size());
  for (std::size_t i = 0; i < p_r.size(); ++i) {
    const double denom = p_r[i] + p_theta[i];
    if (denom > 0.0) c[i] = p_r[i] / denom;
  }
  return c;
}

std::vector<double> exact_ratio(std::span<const double> p_new, std::span<const double> p_old) {
  check_sizes(p_new.size(), p_old.size(), "exact_ratio");
  std::vector<double> r(p_new.size(), 0.0);
  for (std::size_t i = 0; i < p_new.size(); ++i) {
    if (p_new[i] == 0.0) continue;
    if (!(p_old[i] > 0.0)) {
      throw std::domain_error("exact_ratio: p_old vanishes on the support of p_new at index " +
                              std::to_string(i));
    }
    r[i] = p_new[i] / p_old[i];
  }
  return r;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  check_sizes(p.size(), q.size(), "total_variation");
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

double lattice_w1(std::span<const double> p, std::span<const double> q) {
  check_sizes(p.size(), q.size(), "lattice_w1");
  double cp = 0.0;
  double cq = 0.0;
  double w = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    cp += p[i];
    cq += q[i];
    w += std::abs(cp - cq);
  }
  return w;
}

}  // namespace vgan::exact

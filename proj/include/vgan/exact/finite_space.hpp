// Brute-force quantities on finite sample spaces: closed-form auxiliary
// distribution q, the variational objective, exact KLs and the bound on the
// gap between forward and reverse KL, EM iterations, Bayes-optimal
// classifiers and exact probability ratios.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace vgan::exact {

inline constexpr std::size_t kMaxOutcomes = 4096;

struct FiniteSpace {
  std::vector<double> p_r;
  std::vector<double> p_theta;
  std::vector<double> f;

  /// p_theta = softmax(logits).
  static FiniteSpace from_logits(std::vector<double> p_r, std::span<const double> logits,
                                 std::vector<double> f);
  std::size_t size() const { return p_theta.size(); }
  /// Throws std::invalid_argument on a broken invariant.
  void validate() const;
};

struct QDist {
  std::vector<double> q;
  double log_z = 0.0;
};

/// q_k = p_theta_k exp(alpha f_k) / Z, normalized through log-sum-exp.
QDist exact_q(const FiniteSpace& space, double alpha = 1.0);

/// alpha E_q[f] - KL(q || p_theta); alpha = 1 is the plain objective. Its
/// maximum over q is log Z, attained at exact_q(space, alpha).
double variational_objective(const FiniteSpace& space, std::span<const double> q,
                             double alpha = 1.0);

/// sum p ln(p / q) with 0 ln 0 = 0. Throws if p is not absolutely
/// continuous w.r.t. q.
double exact_kl(std::span<const double> p, std::span<const double> q);

struct KlGap {
  double forward_kl = 0.0;  // KL(q || p_theta)
  double reverse_kl = 0.0;  // KL(p_theta || q)
  double signed_gap = 0.0;  // KL(q || p_theta) - KL(p_theta || q)
  double gap = 0.0;         // |signed_gap|
  double bound = 0.0;       // 2 alpha (a + b)
  /// signed_gap <= bound, the direction the derivation establishes.
  bool holds = false;
  /// gap <= bound.
  bool symmetric_holds = false;
};

/// a = max(0, -min f), b = max(0, max f).
KlGap reverse_kl_gap_bound(const FiniteSpace& space, double alpha = 1.0);

enum class MStep { kForwardKl, kReverseKl };

struct EmResult {
  std::vector<double> logits;
  std::vector<double> p_theta;
};

/// One EM iteration: E-step q = exact_q; forward-KL M-step sets p_theta = q
/// exactly; reverse-KL M-step runs `steps` gradient-descent steps of size
/// `lr` on the logits of KL(p_theta || q).
EmResult em_step(const FiniteSpace& space, double alpha, MStep m_step, double lr = 0.5,
                 std::size_t steps = 100, std::span<const double> logits = {});

/// C*_k = p_r_k / (p_r_k + p_theta_k); empty where both vanish.
std::vector<std::optional<double>> bayes_classifier(std::span<const double> p_r,
                                                    std::span<const double> p_theta);

/// p_new / p_old elementwise; 0 where p_new is 0. Throws where p_old
/// vanishes on the support of p_new.
std::vector<double> exact_ratio(std::span<const double> p_new, std::span<const double> p_old);

double total_variation(std::span<const double> p, std::span<const double> q);
/// W1 between pmfs on the integer lattice 0..K-1.
double lattice_w1(std::span<const double> p, std::span<const double> q);

}  // namespace vgan::exact

#include <cmath>
#include <map>

#include "vgan/cli/commands.hpp"
#include "vgan/core/objectives.hpp"
#include "vgan/diffmath/grad.hpp"
#include "vgan/models/mlp.hpp"

namespace vgan::cli {

namespace {

using nlohmann::json;

std::vector<double> random_pmf(data::SplitMix64& rng, std::size_t k, bool sparse) {
  std::vector<double> p(k);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    p[i] = 0.05 + rng.uniform();
    // Sparse pmfs keep outcome 0 so at least one is positive.
    if (sparse && i > 0 && rng.uniform() < 0.3) p[i] = 0.0;
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

struct Instance {
  std::size_t index = 0;
  double alpha = 1.0;
  double offset = 0.0;
  exact::FiniteSpace space;
  std::vector<double> p_old;

  json to_json() const {
    return json{{"index", index},         {"alpha", alpha},     {"offset", offset},
                {"p_r", space.p_r},       {"p_theta", space.p_theta},
                {"f", space.f},           {"p_old", p_old}};
  }
};

Instance draw_instance(data::SplitMix64& rng, std::size_t index, std::size_t max_k) {
  Instance in;
  in.index = index;
  const std::size_t k = 2 + rng.below(max_k - 1);
  const double alphas[] = {0.5, 1.0, 2.0};
  in.alpha = alphas[rng.below(3)];
  // Every fourth instance shifts the scores far enough that an unshifted
  // exponential overflows.
  in.offset = index % 4 == 3 ? 700.0 : 0.0;
  in.space.p_r = random_pmf(rng, k, rng.uniform() < 0.3);
  in.space.p_theta = random_pmf(rng, k, false);
  in.space.f.resize(k);
  for (double& v : in.space.f) v = in.offset + rng.uniform(-5.0, 5.0);
  in.p_old = random_pmf(rng, k, false);
  return in;
}

class Tally {
 public:
  Tally(OracleReport& report, const Instance& in) : report_(report), in_(in) {}

  void check(const std::string& property, bool ok, const std::string& detail = "") {
    auto& [checked, failed] = counts(property);
    ++checked;
    if (ok) return;
    ++failed;
    report_.passed = false;
    if (report_.failures.size() < 20) {
      json f = in_.to_json();
      f["property"] = property;
      f["detail"] = detail;
      report_.failures.push_back(f);
    }
  }

 private:
  std::pair<std::size_t, std::size_t>& counts(const std::string& property) {
    for (auto& [name, c] : report_.properties) {
      if (name == property) return c;
    }
    report_.properties.push_back({property, {0, 0}});
    return report_.properties.back().second;
  }

  OracleReport& report_;
  const Instance& in_;
};

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void check_instance(const Instance& in, const QSolver& solve, Tally& t) {
  const exact::FiniteSpace& s = in.space;
  const std::size_t k = s.size();
  const double alpha = in.alpha;

  // q normalization, positivity and agreement with a naive sum.
  const exact::QDist q = solve(s, alpha);
  double total = 0.0;
  bool positive = true;
  for (double v : q.q) {
    total += v;
    positive = positive && v > 0.0;
  }
  const bool q_ok = q.q.size() == k && all_finite(q.q) && std::isfinite(q.log_z);
  t.check("q_normalization", q_ok && positive && std::abs(total - 1.0) <= 1e-12,
          "sum " + format_double(total));
  if (!q_ok) return;
  if (in.offset == 0.0) {
    double z = 0.0;
    for (std::size_t i = 0; i < k; ++i) z += s.p_theta[i] * std::exp(alpha * s.f[i]);
    double worst = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double naive = s.p_theta[i] * std::exp(alpha * s.f[i]) / z;
      worst = std::max(worst, std::abs(q.q[i] - naive) / naive);
    }
    t.check("q_naive_sum", worst <= 1e-12, "max rel error " + format_double(worst));
  }

  // L(theta, q*) = log Z and maximality under mixture perturbations.
  const double best = exact::variational_objective(s, q.q, alpha);
  const double tol = 1e-12 * std::max(1.0, std::abs(q.log_z));
  t.check("objective_equals_log_z", std::abs(best - q.log_z) <= tol,
          "L " + format_double(best) + " log Z " + format_double(q.log_z));
  bool maximal = true;
  for (double mix : {0.01, 0.1, 0.5}) {
    std::vector<double> qp(k);
    for (std::size_t i = 0; i < k; ++i) {
      qp[i] = (1.0 - mix) * q.q[i] + mix * (i == in.index % k ? 1.0 : 0.0);
    }
    maximal = maximal && exact::variational_objective(s, qp, alpha) <= best + tol;
  }
  t.check("q_maximal", maximal);

  // Reverse-KL gap bound.
  const exact::KlGap gap = exact::reverse_kl_gap_bound(s, alpha);
  t.check("gap_bound", gap.holds,
          "gap " + format_double(gap.gap) + " bound " + format_double(gap.bound));

  // Forward-KL EM is monotone in L.
  exact::FiniteSpace em = s;
  double prev = exact::variational_objective(em, solve(em, alpha).q, alpha);
  bool monotone = true;
  for (int it = 0; it < 10; ++it) {
    em.p_theta = exact::em_step(em, alpha, exact::MStep::kForwardKl).p_theta;
    const double now = exact::variational_objective(em, solve(em, alpha).q, alpha);
    monotone = monotone && now >= prev - 1e-12 * std::max(1.0, std::abs(prev));
    prev = now;
  }
  t.check("em_monotone", monotone);

  // Ratios from Bayes-optimal classifiers equal the exact ratios.
  const auto c_new = exact::bayes_classifier(s.p_r, s.p_theta);
  const auto c_old = exact::bayes_classifier(s.p_r, in.p_old);
  const auto truth = exact::exact_ratio(s.p_theta, in.p_old);
  double worst_ratio = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (s.p_r[i] <= 0.0) continue;
    const std::vector<double> cn{*c_new[i]};
    const std::vector<double> co{*c_old[i]};
    const double est = core::ratio_estimate(cn, co).ratios[0];
    worst_ratio = std::max(worst_ratio, std::abs(est - truth[i]) / std::max(1.0, truth[i]));
  }
  t.check("classifier_ratio", worst_ratio <= 1e-9, "max error " + format_double(worst_ratio));

  // Tape gradients of the reverse-KL M-step loss and of the clipped
  // surrogate on the categorical generator against central differences.
  if (in.index % 10 == 0) {
    std::vector<double> logits(k);
    for (std::size_t i = 0; i < k; ++i) logits[i] = std::log(s.p_theta[i]);
    const std::vector<double> target = q.q;
    auto kl = [&](diffmath::Tape& tape, diffmath::Var z) {
      diffmath::Var p = models::categorical_probs(tape, z);
      diffmath::Matrix lq(1, static_cast<Eigen::Index>(k));
      for (std::size_t i = 0; i < k; ++i) lq(0, static_cast<Eigen::Index>(i)) = std::log(target[i]);
      return tape.sum(tape.mul(p, tape.sub(tape.log(p), tape.constant(lq))));
    };
    const auto r1 = diffmath::finite_diff_check(kl, logits, 1e-6);
    t.check("fd_reverse_kl", r1.max_rel_error <= 1e-4,
            "max rel error " + format_double(r1.max_rel_error));

    std::vector<double> f_local(s.f.begin(), s.f.end());
    for (double& v : f_local) v -= in.offset;
    const std::vector<double> p_old = s.p_theta;
    auto surrogate = [&](diffmath::Tape& tape, diffmath::Var z) {
      diffmath::Var p = models::categorical_probs(tape, z);
      diffmath::Var r = tape.div(p, tape.row_vector(p_old, false));
      diffmath::Var f = tape.row_vector(f_local, false);
      diffmath::Var term = tape.min(tape.mul(r, f), tape.mul(tape.clip(r, 0.8, 1.2), f));
      return tape.sum(tape.mul(tape.row_vector(p_old, false), term));
    };
    // At z = log p_old every ratio is 1, inside the trust region.
    const auto r2 = diffmath::finite_diff_check(surrogate, logits, 1e-6);
    t.check("fd_clipped_surrogate", r2.max_rel_error <= 1e-4,
            "max rel error " + format_double(r2.max_rel_error));
  }
}

}  // namespace

json OracleReport::to_json() const {
  json props = json::object();
  for (const auto& [name, c] : properties) {
    props[name] = json{{"checked", c.first}, {"failed", c.second}};
  }
  return json{{"passed", passed},
              {"instances", instances},
              {"properties", props},
              {"failures", failures}};
}

OracleReport run_oracle(const OracleOptions& options) {
  if (options.max_outcomes < 2 || options.max_outcomes > exact::kMaxOutcomes) {
    throw std::invalid_argument("oracle: max_outcomes must lie in [2, 4096]");
  }
  const QSolver solve = options.solver ? options.solver : QSolver([](const exact::FiniteSpace& s, double a) {
    return exact::exact_q(s, a);
  });
  OracleReport report;
  data::SplitMix64 rng(data::derive_seed(options.seed, 0x6f7261636c65));
  for (std::size_t i = 0; i < options.instances; ++i) {
    const Instance in = draw_instance(rng, i, options.max_outcomes);
    Tally tally(report, in);
    try {
      check_instance(in, solve, tally);
    } catch (const std::exception& e) {
      tally.check("no_exception", false, e.what());
    }
    ++report.instances;
  }
  return report;
}

}  // namespace vgan::cli

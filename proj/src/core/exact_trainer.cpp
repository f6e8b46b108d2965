// Finite-space trainer. Expectations are exact sums over the K outcomes, the
// critic is a table f on the integer lattice 0..K-1 and ratios are exact.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vgan/core/trainer.hpp"
#include "vgan/diffmath/grad.hpp"
#include "vgan/exact/finite_space.hpp"

namespace vgan::core {

namespace {

using diffmath::Grad;

double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

void check_finite(const std::vector<double>& v, const char* which) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw diffmath::NonFiniteError(std::string("non-finite ") + which + " after step");
    }
  }
}

struct ExactState {
  std::vector<double> logits;
  std::vector<double> f;
  std::vector<double> p_old;
  AdamState logits_opt;
  AdamState f_opt;
};

// Gradient penalty on the lattice. An interpolate between x ~ p_r and
// y ~ p_theta crosses edge (i, i+1) with probability
// F_r(i)(1 - F_theta(i)) + F_theta(i)(1 - F_r(i)); edges are weighted by that
// so the penalty is the interpolate expectation of the continuous case. The
// penalty is one-sided: a two-sided |df| = 1 target is met by every zigzag
// table and the critic gets stuck in whichever sign pattern it lands in.
Var lattice_penalty(Tape& tape, Var f, const std::vector<double>& p_r,
                    const std::vector<double>& p_theta, double lambda, double smoothing) {
  const std::size_t k = p_r.size();
  if (k < 2) return tape.constant_scalar(0.0);
  Matrix w(1, static_cast<Eigen::Index>(k - 1));
  double cr = 0.0;
  double ct = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    cr += p_r[i];
    ct += p_theta[i];
    const double crossing = cr * (1.0 - ct) + ct * (1.0 - cr);
    w(0, static_cast<Eigen::Index>(i)) = std::max(crossing, 0.0);
    total += w(0, static_cast<Eigen::Index>(i));
  }
  if (total <= 0.0) return tape.constant_scalar(0.0);
  w /= total;
  Var right = tape.slice(f, 1, 1, k - 1);
  Var left = tape.slice(f, 0, 1, k - 1);
  Var slope = tape.sqrt(tape.add_scalar(tape.square(tape.sub(right, left)), smoothing));
  Var dev = tape.square(tape.leaky_relu(tape.add_scalar(slope, -1.0), 0.0));
  return tape.scale(tape.sum(tape.mul(tape.constant(w), dev)), lambda);
}

StepLog exact_critic_step(ExactState& s, const TrainingConfig& cfg, const data::DistSpec& dist,
                          std::size_t iter, double lr_scale) {
  const std::vector<double> p = models::categorical_probs(s.logits);
  std::vector<double> target = p;
  if (cfg.reweighting) {
    target = exact::exact_q(exact::FiniteSpace{dist.probs, p, s.f}, cfg.alpha).q;
  }

  Tape tape;
  Var f = tape.row_vector(s.f, true);
  Var real_term = tape.sum(tape.mul(tape.row_vector(dist.probs, false), f));
  Var fake_term = tape.sum(tape.mul(tape.row_vector(target, false), f));
  Var objective = tape.sub(real_term, fake_term);
  Var gp = lattice_penalty(tape, f, dist.probs, p, cfg.lambda_gp, cfg.gp_smoothing);
  Var loss = tape.sub(gp, objective);
  const Grad grad = Grad::from_row(tape.gradient(loss, f).value());
  adam_step(s.f, grad.values(), s.f_opt, cfg.lr_critic * lr_scale, cfg.beta1, cfg.beta2,
            cfg.adam_eps);
  check_finite(s.f, "critic table");

  StepLog log;
  log.iter = iter;
  log.phase = Phase::kCritic;
  log.critic_loss = loss.scalar();
  log.gp = gp.scalar();
  log.weight_entropy = entropy(target);
  log.grad_norm_phi = grad.norm();
  return log;
}

StepLog exact_generator_step(ExactState& s, const TrainingConfig& cfg, std::size_t iter,
                             double lr_scale) {
  Tape tape;
  Var z = tape.row_vector(s.logits, true);
  Var p = models::categorical_probs(tape, z);
  Var f = tape.row_vector(s.f, false);

  StepLog log;
  log.iter = iter;
  log.phase = Phase::kGenerator;

  Var objective;
  if (cfg.clipping) {
    // E_{p_old}[min(r f, clip(r) f)] with r = p / p_old; the outer weights
    // are p_old when samples stay tied to the old generator, else the
    // current p held constant.
    Var old = tape.row_vector(s.p_old, false);
    Var r = tape.div(p, old);
    Var outer = cfg.sample_from_old ? old : tape.stop_gradient(p);
    Var term = tape.min(tape.mul(r, f), tape.mul(tape.clip(r, 1.0 - cfg.epsilon, 1.0 + cfg.epsilon), f));
    objective = tape.sum(tape.mul(outer, term));
    const Matrix& rv = r.value();
    const Matrix& wv = outer.value();
    double mean = 0.0;
    double outside = 0.0;
    for (Eigen::Index i = 0; i < rv.size(); ++i) {
      mean += wv.data()[i] * rv.data()[i];
      const double v = rv.data()[i];
      if (v < 1.0 - cfg.epsilon || v > 1.0 + cfg.epsilon) outside += wv.data()[i];
    }
    log.ratio_mean = mean;
    log.ratio_clipped_frac = outside;
  } else {
    objective = tape.sum(tape.mul(p, f));
  }
  Var loss = tape.scale(objective, -1.0);
  const Grad grad = Grad::from_row(tape.gradient(loss, z).value());
  adam_step(s.logits, grad.values(), s.logits_opt, cfg.lr_gen * lr_scale, cfg.beta1, cfg.beta2,
            cfg.adam_eps);
  check_finite(s.logits, "generator logits");
  log.gen_loss = loss.scalar();
  log.grad_norm_theta = grad.norm();
  return log;
}

EvalSnapshot exact_evaluate(const ExactState& s, const data::DistSpec& dist, std::size_t iter) {
  const std::vector<double> p = models::categorical_probs(s.logits);
  EvalSnapshot snap;
  snap.iter = iter;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (dist.probs[i] > 0.0) {
      ++snap.n_modes;
      snap.high_quality_fraction += p[i];
      if (p[i] >= 0.2 * dist.probs[i]) ++snap.modes_covered;
    }
  }
  snap.sliced_w = exact::lattice_w1(p, dist.probs);
  snap.total_variation = exact::total_variation(p, dist.probs);
  return snap;
}

Matrix draw_categorical(const std::vector<double>& p, std::size_t n, data::SplitMix64& rng) {
  Matrix out(static_cast<Eigen::Index>(n), 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t k = p.size() - 1;
    for (std::size_t j = 0; j < p.size(); ++j) {
      acc += p[j];
      if (u < acc) {
        k = j;
        break;
      }
    }
    out(static_cast<Eigen::Index>(i), 0) = static_cast<double>(k);
  }
  return out;
}

}  // namespace

TrainingRecord train_exact(const TrainingConfig& config, const data::DistSpec& spec) {
  config.validate();
  spec.validate();
  // Renormalize so the pmf sums to 1 at the exact-engine tolerance.
  data::DistSpec dist = spec;
  double mass = 0.0;
  for (double v : dist.probs) mass += v;
  for (double& v : dist.probs) v /= mass;
  if (dist.kind != data::DistKind::kCategorical) {
    throw std::invalid_argument("train_exact: categorical target required");
  }
  const std::size_t k = dist.probs.size();
  if (k < 2 || k > exact::kMaxOutcomes) {
    throw std::invalid_argument("train_exact: outcome count must lie in [2, 4096]");
  }

  ExactState s;
  data::SplitMix64 init(data::derive_seed(config.seed, 6));
  s.logits.resize(k);
  for (double& v : s.logits) v = init.uniform(-0.5, 0.5);
  s.f.assign(k, 0.0);
  RngStreams rng = RngStreams::from_seed(config.seed);

  TrainingRecord record;
  const std::size_t total = config.iterations;
  try {
    record.evals.push_back(exact_evaluate(s, dist, 0));
    for (std::size_t t = 0; t < total; ++t) {
      const double lr_scale =
          config.anneal_lr ? 1.0 - static_cast<double>(t) / static_cast<double>(total) : 1.0;
      for (std::size_t c = 0; c < config.n_critic; ++c) {
        record.steps.push_back(exact_critic_step(s, config, dist, t, lr_scale));
      }
      s.p_old = models::categorical_probs(s.logits);
      for (std::size_t g = 0; g < config.n_gen; ++g) {
        record.steps.push_back(exact_generator_step(s, config, t, lr_scale));
      }
      record.iterations_completed = t + 1;
      if ((t + 1) % config.eval_every == 0 || t + 1 == total) {
        record.evals.push_back(exact_evaluate(s, dist, t + 1));
        if (config.abort_on_collapse && record.evals.back().modes_covered < config.coverage_floor) {
          record.aborted = true;
          record.abort_reason = "mode coverage fell below the floor";
          break;
        }
      }
    }
  } catch (const diffmath::NonFiniteError& e) {
    record.aborted = true;
    record.abort_reason = e.what();
  }
  record.final_generator = models::ModelParams{s.logits, {}};
  const std::vector<double> p = models::categorical_probs(s.logits);
  if (std::all_of(p.begin(), p.end(), [](double v) { return std::isfinite(v); })) {
    record.final_samples = draw_categorical(p, config.eval_samples, rng.eval);
  } else {
    record.final_samples.resize(0, 1);
  }
  return record;
}

}  // namespace vgan::core

#include "vgan/core/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "vgan/diffmath/grad.hpp"
#include "vgan/metrics/metrics.hpp"

namespace vgan::core {

using diffmath::Grad;

const char* phase_name(Phase phase) {
  return phase == Phase::kCritic ? "critic" : "gen";
}

std::vector<double> TrainingRecord::critic_losses() const {
  std::vector<double> out;
  for (const auto& s : steps) {
    if (s.phase == Phase::kCritic && s.critic_loss) out.push_back(*s.critic_loss);
  }
  return out;
}

std::vector<double> TrainingRecord::generator_losses() const {
  std::vector<double> out;
  for (const auto& s : steps) {
    if (s.phase == Phase::kGenerator && s.gen_loss) out.push_back(*s.gen_loss);
  }
  return out;
}

void TrainingConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (!(epsilon > 0.0 && epsilon < 1.0)) fail("epsilon must lie in (0, 1)");
  if (!std::isfinite(alpha)) fail("alpha must be finite");
  if (n_critic < 1) fail("n_critic must be >= 1");
  if (n_gen < 1) fail("n_gen must be >= 1");
  if (!(lambda_gp >= 0.0)) fail("lambda_gp must be >= 0");
  if (!(lr_gen > 0.0) || !(lr_critic > 0.0) || !(lr_classifier > 0.0)) {
    fail("learning rates must be > 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    fail("adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) fail("adam_eps must be > 0");
  if (batch_size < 2) fail("batch_size must be >= 2");
  if (noise_dim < 1) fail("noise_dim must be >= 1");
  if (hidden < 1) fail("hidden must be >= 1");
  if (!(gp_smoothing >= 0.0)) fail("gp_smoothing must be >= 0");
  if (eval_every < 1) fail("eval_every must be >= 1");
  if (eval_samples < 1) fail("eval_samples must be >= 1");
  if (eval_projections < 1) fail("eval_projections must be >= 1");
}

void adam_step(std::vector<double>& params, std::span<const double> grad, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
  if (grad.size() != params.size()) throw std::invalid_argument("adam_step: size mismatch");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

RngStreams RngStreams::from_seed(std::uint64_t seed) {
  return RngStreams{data::SplitMix64(data::derive_seed(seed, 1)),
                    data::SplitMix64(data::derive_seed(seed, 2)),
                    data::SplitMix64(data::derive_seed(seed, 3)),
                    data::SplitMix64(data::derive_seed(seed, 4)),
                    data::SplitMix64(data::derive_seed(seed, 5))};
}

TrainerState make_state(const TrainingConfig& config, const data::DistSpec& dist) {
  config.validate();
  dist.validate();
  TrainerState s;
  s.config = config;
  s.dist = dist;
  const std::size_t dim = dist.dim();
  s.generator_spec = models::MlpSpec::generator(config.noise_dim, config.hidden, dim,
                                                config.activation);
  s.critic_spec = models::MlpSpec::critic(dim, config.hidden, config.activation);
  s.classifier_spec = models::MlpSpec::classifier(dim, config.hidden, config.activation);
  data::SplitMix64 init(data::derive_seed(config.seed, 6));
  s.generator = models::init_params(s.generator_spec, init);
  s.critic = models::init_params(s.critic_spec, init);
  s.classifier = models::init_params(s.classifier_spec, init);
  s.rng = RngStreams::from_seed(config.seed);
  return s;
}

void take_snapshot(TrainerState& state) {
  state.snapshot = Snapshot{state.generator, state.classifier};
}

Matrix generate(const TrainerState& state, const Matrix& noise) {
  return models::mlp_apply(state.generator, state.generator_spec, noise);
}

namespace {

void check_finite_params(const std::vector<double>& p, const char* which) {
  for (double v : p) {
    if (!std::isfinite(v)) {
      throw diffmath::NonFiniteError(std::string("non-finite ") + which + " parameter after step");
    }
  }
}

std::vector<double> column_values(const Matrix& m) {
  return std::vector<double>(m.data(), m.data() + m.size());
}

}  // namespace

StepLog discriminator_step(TrainerState& state, const data::Batch& real, const data::Batch& noise) {
  const TrainingConfig& cfg = state.config;
  if (real.size() != noise.size()) {
    throw std::invalid_argument("discriminator_step: real and noise batches differ in size");
  }
  const data::Batch fake{generate(state, noise.points), data::Provenance::kFake};

  Tape tape;
  Var phi = tape.row_vector(state.critic.values, true);
  Var real_scores = models::mlp_forward(tape, state.critic_spec, phi, tape.constant(real.points));
  Var fake_scores = models::mlp_forward(tape, state.critic_spec, phi, tape.constant(fake.points));

  Var objective;
  double entropy = 0.0;
  if (cfg.reweighting) {
    const ImportanceWeights w = importance_weights(column_values(fake_scores.value()), cfg.alpha);
    objective = critic_objective(tape, real_scores, fake_scores, w);
    entropy = w.entropy();
  } else {
    objective = wasserstein_objective(tape, real_scores, fake_scores);
    entropy = std::log(static_cast<double>(fake.size()));
  }

  const data::Batch mixed = data::interpolate(real, fake, state.rng.interp);
  Var gp = gradient_penalty(tape, state.critic_spec, phi, mixed.points, cfg.lambda_gp,
                            cfg.gp_smoothing);
  Var loss = tape.sub(gp, objective);
  const Grad grad = Grad::from_row(tape.gradient(loss, phi).value());

  adam_step(state.critic.values, grad.values(), state.critic_opt, cfg.lr_critic * state.lr_scale,
            cfg.beta1, cfg.beta2, cfg.adam_eps);
  check_finite_params(state.critic.values, "critic");

  StepLog log;
  log.iter = state.iteration;
  log.phase = Phase::kCritic;
  log.critic_loss = loss.scalar();
  log.gp = gp.scalar();
  log.weight_entropy = entropy;
  log.grad_norm_phi = grad.norm();
  return log;
}

double classifier_update(TrainerState& state, const data::Batch& real, const data::Batch& fake) {
  if (real.size() != fake.size()) {
    throw std::invalid_argument("classifier_update: real and fake batches must be balanced");
  }
  const TrainingConfig& cfg = state.config;
  Tape tape;
  Var c = tape.row_vector(state.classifier.values, true);
  Var real_logits = models::mlp_forward(tape, state.classifier_spec, c, tape.constant(real.points));
  Var fake_logits = models::mlp_forward(tape, state.classifier_spec, c, tape.constant(fake.points));
  Var loss = classifier_bce(tape, real_logits, fake_logits);
  const Grad grad = Grad::from_row(tape.gradient(loss, c).value());
  adam_step(state.classifier.values, grad.values(), state.classifier_opt,
            cfg.lr_classifier * state.lr_scale, cfg.beta1, cfg.beta2, cfg.adam_eps);
  check_finite_params(state.classifier.values, "classifier");
  return loss.scalar();
}

RatioEstimate current_ratios(const TrainerState& state, const Matrix& points) {
  if (!state.snapshot) throw std::logic_error("current_ratios: no snapshot taken");
  const Matrix c_new = models::mlp_apply(state.classifier, state.classifier_spec, points);
  const Matrix c_old = models::mlp_apply(state.snapshot->classifier, state.classifier_spec, points);
  return ratio_estimate(column_values(c_new), column_values(c_old));
}

StepLog generator_step(TrainerState& state, const data::Batch& noise) {
  const TrainingConfig& cfg = state.config;
  if (cfg.clipping && !state.snapshot) {
    throw std::logic_error("generator_step: take_snapshot() must precede generator steps");
  }
  Tape tape;
  Var theta = tape.row_vector(state.generator.values, true);
  Var fake = models::mlp_forward(tape, state.generator_spec, theta, tape.constant(noise.points));
  Var phi = tape.row_vector(state.critic.values, false);
  Var scores = models::mlp_forward(tape, state.critic_spec, phi, fake);

  StepLog log;
  log.iter = state.iteration;
  log.phase = Phase::kGenerator;

  Var objective;
  if (cfg.clipping) {
    Var c_now = tape.row_vector(state.classifier.values, false);
    Var c_then = tape.row_vector(state.snapshot->classifier.values, false);
    Var p_now = models::classifier_prob(tape, state.classifier_spec, c_now, fake);
    Var p_then = models::classifier_prob(tape, state.classifier_spec, c_then, fake);
    Var ratios = ratio_estimate(tape, p_now, p_then);
    objective = clipped_surrogate(tape, ratios, scores, cfg.epsilon);
    const Matrix& r = ratios.value();
    std::size_t outside = 0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const double v = r.data()[i];
      if (v < 1.0 - cfg.epsilon || v > 1.0 + cfg.epsilon) ++outside;
    }
    log.ratio_mean = r.mean();
    log.ratio_clipped_frac = static_cast<double>(outside) / static_cast<double>(r.size());
  } else {
    objective = tape.mean(scores);
  }
  Var loss = tape.scale(objective, -1.0);
  const Grad grad = Grad::from_row(tape.gradient(loss, theta).value());
  adam_step(state.generator.values, grad.values(), state.generator_opt,
            cfg.lr_gen * state.lr_scale, cfg.beta1, cfg.beta2, cfg.adam_eps);
  check_finite_params(state.generator.values, "generator");
  log.gen_loss = loss.scalar();
  log.grad_norm_theta = grad.norm();

  if (cfg.clipping) {
    const data::Batch real = data::sample_real(state.dist, noise.size(), state.rng.classifier);
    const data::Batch fresh{generate(state, noise.points), data::Provenance::kFake};
    classifier_update(state, real, fresh);
  }
  return log;
}

EvalSnapshot evaluate(TrainerState& state) {
  const TrainingConfig& cfg = state.config;
  const data::Batch noise = data::sample_noise(cfg.noise_dim, cfg.eval_samples, state.rng.eval);
  const Matrix samples = generate(state, noise.points);
  const data::Batch real = data::sample_real(state.dist, cfg.eval_samples, state.rng.eval);
  const auto centers = state.dist.centers();
  const double radius = 3.0 * state.dist.component_sigma();
  const auto min_count = std::max<std::size_t>(
      1, static_cast<std::size_t>(0.2 * static_cast<double>(cfg.eval_samples) /
                                  static_cast<double>(centers.size())));
  const metrics::CoverageReport cov = metrics::mode_coverage(samples, centers, radius, min_count);
  EvalSnapshot snap;
  snap.iter = state.iteration;
  snap.modes_covered = cov.modes_covered;
  snap.n_modes = cov.n_modes;
  snap.high_quality_fraction = cov.high_quality_fraction;
  snap.sliced_w =
      metrics::sliced_wasserstein(samples, real.points, cfg.eval_projections, state.rng.eval);
  return snap;
}

TrainingRecord train(const TrainingConfig& config, const data::DistSpec& dist) {
  if (dist.kind == data::DistKind::kCategorical) return train_exact(config, dist);
  TrainingRecord record;
  TrainerState state = make_state(config, dist);
  const std::size_t total = config.iterations;
  try {
    record.evals.push_back(evaluate(state));
    for (std::size_t t = 0; t < total; ++t) {
      state.iteration = t;
      state.lr_scale = config.anneal_lr
                           ? 1.0 - static_cast<double>(t) / static_cast<double>(total)
                           : 1.0;
      for (std::size_t k = 0; k < config.n_critic; ++k) {
        const data::Batch real = data::sample_real(dist, config.batch_size, state.rng.data);
        const data::Batch noise =
            data::sample_noise(config.noise_dim, config.batch_size, state.rng.noise);
        record.steps.push_back(discriminator_step(state, real, noise));
      }
      take_snapshot(state);
      if (config.sample_from_old) {
        state.snapshot_noise =
            data::sample_noise(config.noise_dim, config.batch_size, state.rng.noise);
      }
      for (std::size_t k = 0; k < config.n_gen; ++k) {
        const data::Batch noise =
            config.sample_from_old
                ? *state.snapshot_noise
                : data::sample_noise(config.noise_dim, config.batch_size, state.rng.noise);
        record.steps.push_back(generator_step(state, noise));
      }
      record.iterations_completed = t + 1;
      state.iteration = t + 1;
      if ((t + 1) % config.eval_every == 0 || t + 1 == total) {
        record.evals.push_back(evaluate(state));
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
  record.final_generator = state.generator;
  try {
    const data::Batch noise =
        data::sample_noise(config.noise_dim, config.eval_samples, state.rng.eval);
    record.final_samples = generate(state, noise.points);
  } catch (const diffmath::NonFiniteError&) {
    record.final_samples.resize(0, static_cast<Eigen::Index>(dist.dim()));
  }
  return record;
}

}  // namespace vgan::core

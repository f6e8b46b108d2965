#include "vgan/core/wgan_gp_reference.hpp"

#include <cmath>

namespace vgan::core {

WganGpReference::WganGpReference(const TrainingConfig& config, const data::DistSpec& dist)
    : config_(config), dist_(dist), rng_(RngStreams::from_seed(config.seed)) {
  const std::size_t dim = dist.dim();
  generator_spec_ =
      models::MlpSpec::generator(config.noise_dim, config.hidden, dim, config.activation);
  critic_spec_ = models::MlpSpec::critic(dim, config.hidden, config.activation);
  data::SplitMix64 init(data::derive_seed(config.seed, 6));
  generator_ = models::init_params(generator_spec_, init);
  critic_ = models::init_params(critic_spec_, init);
}

void WganGpReference::critic_step() {
  const data::Batch real = data::sample_real(dist_, config_.batch_size, rng_.data);
  const data::Batch noise = data::sample_noise(config_.noise_dim, config_.batch_size, rng_.noise);
  const Matrix fake = models::mlp_apply(generator_, generator_spec_, noise.points);

  Tape tape;
  Var phi = tape.row_vector(critic_.values, true);
  Var d_real = models::mlp_forward(tape, critic_spec_, phi, tape.constant(real.points));
  Var d_fake = models::mlp_forward(tape, critic_spec_, phi, tape.constant(fake));
  Var wasserstein = tape.sub(tape.mean(d_real), tape.mean(d_fake));

  // Penalty at random points on real-fake segments.
  std::vector<double> u(real.size());
  for (double& v : u) v = rng_.interp.uniform();
  Matrix mixed(real.points.rows(), real.points.cols());
  for (Eigen::Index i = 0; i < mixed.rows(); ++i) {
    const double w = u[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < mixed.cols(); ++j) {
      mixed(i, j) = w * real.points(i, j) + (1.0 - w) * fake(i, j);
    }
  }
  Var x = tape.leaf(mixed);
  Var d_mixed = models::mlp_forward(tape, critic_spec_, phi, x);
  Var dx = tape.gradient(tape.sum(d_mixed), x);
  Var sq = tape.add_scalar(tape.sum_to(tape.square(dx), dx.rows(), 1), config_.gp_smoothing);
  Var slope = tape.sqrt(sq);
  Var gp = tape.scale(tape.mean(tape.square(tape.add_scalar(slope, -1.0))), config_.lambda_gp);

  Var d_cost = tape.sub(gp, wasserstein);
  const Matrix& g = tape.gradient(d_cost, phi).value();
  adam_step(critic_.values, std::span<const double>(g.data(), static_cast<std::size_t>(g.size())),
            critic_opt_, config_.lr_critic, config_.beta1, config_.beta2, config_.adam_eps);
}

void WganGpReference::generator_step() {
  const data::Batch noise = data::sample_noise(config_.noise_dim, config_.batch_size, rng_.noise);
  Tape tape;
  Var theta = tape.row_vector(generator_.values, true);
  Var fake = models::mlp_forward(tape, generator_spec_, theta, tape.constant(noise.points));
  Var phi = tape.row_vector(critic_.values, false);
  Var g_cost = tape.scale(tape.mean(models::mlp_forward(tape, critic_spec_, phi, fake)), -1.0);
  const Matrix& g = tape.gradient(g_cost, theta).value();
  adam_step(generator_.values,
            std::span<const double>(g.data(), static_cast<std::size_t>(g.size())), generator_opt_,
            config_.lr_gen, config_.beta1, config_.beta2, config_.adam_eps);
}

void WganGpReference::iteration() {
  for (std::size_t k = 0; k < config_.n_critic; ++k) critic_step();
  for (std::size_t k = 0; k < config_.n_gen; ++k) generator_step();
}

}  // namespace vgan::core

// Plain WGAN-GP trainer kept as a reference point: the
// re-weighted/clipped trainer with both features switched off must take
// exactly the same steps.

#pragma once

#include "vgan/core/trainer.hpp"

namespace vgan::core {

class WganGpReference {
 public:
  WganGpReference(const TrainingConfig& config, const data::DistSpec& dist);

  void critic_step();
  void generator_step();
  /// n_critic critic steps then n_gen generator steps.
  void iteration();

  const models::ModelParams& generator() const { return generator_; }
  const models::ModelParams& critic() const { return critic_; }

 private:
  TrainingConfig config_;
  data::DistSpec dist_;
  models::MlpSpec generator_spec_;
  models::MlpSpec critic_spec_;
  models::ModelParams generator_;
  models::ModelParams critic_;
  AdamState generator_opt_;
  AdamState critic_opt_;
  RngStreams rng_;
};

}  // namespace vgan::core

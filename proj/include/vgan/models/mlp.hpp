// Multi-layer perceptrons (generator, critic, real/fake classifier) and the
// explicit categorical generator used on finite sample spaces.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vgan/data/rng.hpp"
#include "vgan/diffmath/tape.hpp"

namespace vgan::models {

using diffmath::Matrix;
using diffmath::Tape;
using diffmath::Var;

enum class Activation { kLeakyRelu, kRelu, kTanh };
enum class OutputActivation { kNone, kSigmoid };

const char* activation_name(Activation a);
Activation parse_activation(const std::string& name);

/// Probability clamp applied to classifier outputs before they enter ratios.
inline constexpr double kProbClamp = 1e-7;

struct MlpSpec {
  /// input dim, hidden widths..., output dim
  std::vector<std::size_t> widths;
  Activation activation = Activation::kLeakyRelu;
  double leaky_slope = 0.2;
  OutputActivation output = OutputActivation::kNone;

  static MlpSpec generator(std::size_t noise_dim, std::size_t hidden, std::size_t data_dim,
                           Activation act = Activation::kLeakyRelu);
  static MlpSpec critic(std::size_t data_dim, std::size_t hidden,
                        Activation act = Activation::kLeakyRelu);
  /// Critic architecture with a sigmoid output.
  static MlpSpec classifier(std::size_t data_dim, std::size_t hidden,
                            Activation act = Activation::kLeakyRelu);

  void validate() const;
  std::size_t input_dim() const { return widths.front(); }
  std::size_t output_dim() const { return widths.back(); }
  std::size_t layer_count() const { return widths.size() - 1; }
  /// Sum over layers of (fan_in + 1) * fan_out.
  std::size_t param_count() const;

  bool operator==(const MlpSpec&) const = default;
};

/// Flat parameter vector. Per layer: weights as a fan_in x fan_out row-major
/// block followed by fan_out biases. Categorical logits carry no widths.
struct ModelParams {
  std::vector<double> values;
  std::vector<std::size_t> widths;

  std::size_t size() const { return values.size(); }
  bool operator==(const ModelParams&) const = default;
};

ModelParams init_params(const MlpSpec& spec, data::SplitMix64& rng);

/// Records the network on `tape`. `params` is a 1 x P row, `x` is n x d.
/// Returns the pre-output-activation values (n x out).
Var mlp_forward(Tape& tape, const MlpSpec& spec, Var params, Var x);

/// Sigmoid probabilities clamped to [kProbClamp, 1 - kProbClamp].
Var classifier_prob(Tape& tape, const MlpSpec& spec, Var params, Var x);

/// Forward evaluation without gradients; applies the output activation
/// (classifier outputs are clamped).
Matrix mlp_apply(const ModelParams& params, const MlpSpec& spec, const Matrix& x);

/// Softmax with max-shift.
std::vector<double> categorical_probs(std::span<const double> logits);
/// Softmax of a 1 x K logit row on the tape (max-shifted).
Var categorical_probs(Tape& tape, Var logits);

/// FNV-1a over the little-endian bytes of every value.
std::uint64_t params_digest(std::span<const double> values);

}  // namespace vgan::models

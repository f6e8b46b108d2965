#include "vgan/models/mlp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace vgan::models {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kLeakyRelu: return "leaky-relu";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
  }
  return "unknown";
}

Activation parse_activation(const std::string& name) {
  if (name == "leaky-relu") return Activation::kLeakyRelu;
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

MlpSpec MlpSpec::generator(std::size_t noise_dim, std::size_t hidden, std::size_t data_dim,
                           Activation act) {
  return MlpSpec{{noise_dim, hidden, hidden, data_dim}, act, 0.2, OutputActivation::kNone};
}

MlpSpec MlpSpec::critic(std::size_t data_dim, std::size_t hidden, Activation act) {
  return MlpSpec{{data_dim, hidden, hidden, 1}, act, 0.2, OutputActivation::kNone};
}

MlpSpec MlpSpec::classifier(std::size_t data_dim, std::size_t hidden, Activation act) {
  return MlpSpec{{data_dim, hidden, hidden, 1}, act, 0.2, OutputActivation::kSigmoid};
}

void MlpSpec::validate() const {
  if (widths.size() < 3) throw std::invalid_argument("MlpSpec needs at least one hidden layer");
  for (std::size_t w : widths) {
    if (w < 1) throw std::invalid_argument("MlpSpec widths must be >= 1");
  }
  if (output == OutputActivation::kSigmoid && widths.back() != 1) {
    throw std::invalid_argument("sigmoid classifier must have output dim 1");
  }
}

std::size_t MlpSpec::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) n += (widths[l] + 1) * widths[l + 1];
  return n;
}

ModelParams init_params(const MlpSpec& spec, data::SplitMix64& rng) {
  spec.validate();
  ModelParams p;
  p.widths = spec.widths;
  p.values.reserve(spec.param_count());
  for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    const std::size_t fan_in = spec.widths[l];
    const std::size_t fan_out = spec.widths[l + 1];
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < fan_in * fan_out; ++i) p.values.push_back(rng.uniform(-s, s));
    for (std::size_t i = 0; i < fan_out; ++i) p.values.push_back(0.0);
  }
  return p;
}

namespace {

Var activate(Tape& tape, const MlpSpec& spec, Var h) {
  switch (spec.activation) {
    case Activation::kLeakyRelu: return tape.leaky_relu(h, spec.leaky_slope);
    case Activation::kRelu: return tape.leaky_relu(h, 0.0);
    case Activation::kTanh: return tape.tanh(h);
  }
  return h;
}

}  // namespace

Var mlp_forward(Tape& tape, const MlpSpec& spec, Var params, Var x) {
  if (params.rows() != 1 || params.cols() != spec.param_count()) {
    throw diffmath::ShapeError("mlp_forward: parameter row has " + std::to_string(params.cols()) +
                               " entries, spec needs " + std::to_string(spec.param_count()));
  }
  if (x.cols() != spec.input_dim()) {
    throw diffmath::ShapeError("mlp_forward: input dim " + std::to_string(x.cols()) +
                               " != spec input dim " + std::to_string(spec.input_dim()));
  }
  Var h = x;
  std::size_t offset = 0;
  const std::size_t layers = spec.layer_count();
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t fan_in = spec.widths[l];
    const std::size_t fan_out = spec.widths[l + 1];
    Var w = tape.slice(params, offset, fan_in, fan_out);
    offset += fan_in * fan_out;
    Var b = tape.slice(params, offset, 1, fan_out);
    offset += fan_out;
    h = tape.add(tape.matmul(h, w), b);
    if (l + 1 < layers) h = activate(tape, spec, h);
  }
  return h;
}

Var classifier_prob(Tape& tape, const MlpSpec& spec, Var params, Var x) {
  return tape.clip(tape.sigmoid(mlp_forward(tape, spec, params, x)), kProbClamp,
                   1.0 - kProbClamp);
}

Matrix mlp_apply(const ModelParams& params, const MlpSpec& spec, const Matrix& x) {
  Tape tape;
  Var p = tape.row_vector(params.values, false);
  Var in = tape.constant(x);
  if (spec.output == OutputActivation::kSigmoid) return classifier_prob(tape, spec, p, in).value();
  return mlp_forward(tape, spec, p, in).value();
}

std::vector<double> categorical_probs(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("categorical_probs: no logits");
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

Var categorical_probs(Tape& tape, Var logits) {
  const double m = logits.value().maxCoeff();
  Var e = tape.exp(tape.add_scalar(logits, -m));
  return tape.div(e, tape.sum(e));
}

std::uint64_t params_digest(std::span<const double> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int k = 0; k < 8; ++k) {
      h ^= (bits >> (8 * k)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace vgan::models

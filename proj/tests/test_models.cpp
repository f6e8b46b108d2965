#include <cmath>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "vgan/models/checkpoint.hpp"
#include "vgan/models/mlp.hpp"

using namespace vgan;
using diffmath::Matrix;
using models::MlpSpec;

TEST_CASE("init_params: deterministic, zero biases, bounded weights") {
  const MlpSpec spec = MlpSpec::critic(2, 64, models::Activation::kLeakyRelu);
  data::SplitMix64 a(7);
  data::SplitMix64 b(7);
  const models::ModelParams pa = models::init_params(spec, a);
  const models::ModelParams pb = models::init_params(spec, b);
  CHECK(pa == pb);
  CHECK(pa.size() == spec.param_count());
  CHECK(pa.size() == (2 + 1) * 64 + (64 + 1) * 64 + (64 + 1) * 1);

  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    const std::size_t in = spec.widths[l];
    const std::size_t out = spec.widths[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    for (std::size_t i = 0; i < in * out; ++i) CHECK(std::abs(pa.values[offset + i]) <= bound);
    offset += in * out;
    for (std::size_t i = 0; i < out; ++i) CHECK(pa.values[offset + i] == 0.0);
    offset += out;
  }
}

TEST_CASE("mlp_apply: zero parameters") {
  const MlpSpec critic = MlpSpec::critic(2, 8, models::Activation::kLeakyRelu);
  const MlpSpec clf = MlpSpec::classifier(2, 8, models::Activation::kLeakyRelu);
  const Matrix x = Matrix::Constant(3, 2, 1.5);
  models::ModelParams zc{std::vector<double>(critic.param_count(), 0.0), critic.widths};
  models::ModelParams zk{std::vector<double>(clf.param_count(), 0.0), clf.widths};
  const Matrix yc = models::mlp_apply(zc, critic, x);
  const Matrix yk = models::mlp_apply(zk, clf, x);
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(yc(i, 0) == 0.0);
    CHECK(yk(i, 0) == 0.5);
  }
}

TEST_CASE("mlp_apply: linear network reduces to a matrix product") {
  // Slope 1 makes the leaky activation the identity.
  MlpSpec spec{{2, 2, 2}, models::Activation::kLeakyRelu, 1.0, models::OutputActivation::kNone};
  // W1 = [[1,2],[3,4]], b1 = [0.5,-0.5], W2 = I, b2 = 0
  models::ModelParams p{{1, 2, 3, 4, 0.5, -0.5, 1, 0, 0, 1, 0, 0}, spec.widths};
  Matrix x(1, 2);
  x << 1.0, -1.0;
  const Matrix y = models::mlp_apply(p, spec, x);
  CHECK(y(0, 0) == -2.0 + 0.5);
  CHECK(y(0, 1) == -2.0 - 0.5);
}

TEST_CASE("mlp_apply: shape mismatch is an error") {
  const MlpSpec critic = MlpSpec::critic(2, 8, models::Activation::kLeakyRelu);
  data::SplitMix64 rng(1);
  const models::ModelParams p = models::init_params(critic, rng);
  CHECK_THROWS(models::mlp_apply(p, critic, Matrix::Zero(4, 3)));
}

TEST_CASE("property: random networks stay finite on [-10, 10]^2") {
  data::SplitMix64 rng(3);
  Matrix grid(41 * 41, 2);
  for (int i = 0; i <= 40; ++i) {
    for (int j = 0; j <= 40; ++j) {
      grid(i * 41 + j, 0) = -10.0 + 0.5 * i;
      grid(i * 41 + j, 1) = -10.0 + 0.5 * j;
    }
  }
  for (auto act : {models::Activation::kLeakyRelu, models::Activation::kRelu,
                   models::Activation::kTanh}) {
    for (int trial = 0; trial < 5; ++trial) {
      const MlpSpec g = MlpSpec::generator(2, 64, 2, act);
      const models::ModelParams p = models::init_params(g, rng);
      CHECK(diffmath::all_finite(models::mlp_apply(p, g, grid)));
    }
  }
}

TEST_CASE("categorical_probs: examples and invariants") {
  const auto u = models::categorical_probs(std::vector<double>{0, 0, 0, 0});
  for (double v : u) CHECK(v == 0.25);
  const auto p = models::categorical_probs(std::vector<double>{0.0, std::log(3.0)});
  CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-15));
  const auto big = models::categorical_probs(std::vector<double>{1000.0, 1000.0});
  CHECK(big[0] == 0.5);
  CHECK(big[1] == 0.5);

  data::SplitMix64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.below(30);
    const auto logits = testing::uniform_vector(rng, k, -20.0, 20.0);
    const auto q = models::categorical_probs(logits);
    double total = 0.0;
    for (double v : q) {
      CHECK(v > 0.0);
      total += v;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("classifier_prob: clamp") {
  // One hidden unit with identity activation carrying the input through.
  MlpSpec spec{{1, 1, 1}, models::Activation::kLeakyRelu, 1.0, models::OutputActivation::kSigmoid};
  models::ModelParams p{{1, 0, 1, 0}, spec.widths};
  Matrix x(3, 1);
  x << 40.0, -40.0, 0.0;
  const Matrix y = models::mlp_apply(p, spec, x);
  CHECK(y(0, 0) == 1.0 - 1e-7);
  CHECK(y(1, 0) == 1e-7);
  CHECK(y(2, 0) == 0.5);

  data::SplitMix64 rng(9);
  const MlpSpec clf = MlpSpec::classifier(2, 16, models::Activation::kLeakyRelu);
  for (int trial = 0; trial < 20; ++trial) {
    models::ModelParams q = models::init_params(clf, rng);
    for (double& v : q.values) v *= 50.0;
    const Matrix out = models::mlp_apply(q, clf, testing::uniform_matrix(rng, 64, 2, -10, 10));
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      CHECK(out.data()[i] > 0.0);
      CHECK(out.data()[i] < 1.0);
    }
  }
}

TEST_CASE("MlpSpec validation") {
  MlpSpec no_hidden{{2, 1}, models::Activation::kLeakyRelu, 0.2, models::OutputActivation::kNone};
  CHECK_THROWS_AS(no_hidden.validate(), std::invalid_argument);
  MlpSpec zero{{2, 0, 1}, models::Activation::kLeakyRelu, 0.2, models::OutputActivation::kNone};
  CHECK_THROWS_AS(zero.validate(), std::invalid_argument);
}

TEST_CASE("checkpoint: round trip and corruption") {
  data::SplitMix64 rng(12);
  const MlpSpec spec = MlpSpec::generator(2, 16, 2, models::Activation::kLeakyRelu);
  models::Checkpoint ck{models::init_params(spec, rng), 42};
  const std::string bytes = models::encode_checkpoint(ck);
  CHECK(bytes.substr(0, 8) == "VGANCKPT");
  CHECK(bytes.size() == 8 + 4 + 4 + 8 * spec.widths.size() + 8 + 8 + 8 * ck.params.size());
  const models::Checkpoint back = models::decode_checkpoint(bytes);
  CHECK(back.seed == 42);
  CHECK(back.params == ck.params);

  CHECK_THROWS(models::decode_checkpoint(bytes.substr(0, bytes.size() - 1)));
  CHECK_THROWS(models::decode_checkpoint(bytes + "x"));
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS(models::decode_checkpoint(bad));

  const auto path = std::filesystem::temp_directory_path() / "vgan_ckpt_test.ckpt";
  models::write_checkpoint(path, ck);
  CHECK(models::read_checkpoint(path).params == ck.params);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint: categorical logits have no widths") {
  models::Checkpoint ck{{{0.1, -0.2, 0.3}, {}}, 5};
  CHECK(models::decode_checkpoint(models::encode_checkpoint(ck)).params == ck.params);
}

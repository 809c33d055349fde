#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "support/oracles.hpp"
#include "uocad/error.hpp"
#include "uocad/nn/bilstm.hpp"
#include "uocad/nn/model_io.hpp"
#include "uocad/rng.hpp"

using namespace uocad;
using namespace uocad::nn;

namespace {

Matrix random_window(Rng& rng, Eigen::Index n) {
  Matrix w(n, kInputs);
  for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = rng.uniform();
  return w;
}

HyperConfig tiny(Activation a = Activation::sigmoid, double dropout = 0.0) {
  return {2, a, 1e-3, OptimizerKind::adam, 2, dropout};
}

/// Max relative error between backward() and central differences.
double gradient_check(const HyperConfig& cfg, std::uint64_t seed, Eigen::Index n, std::size_t batch,
                      bool train_mode) {
  Rng rng(seed);
  const ModelParams params = init_params(cfg, seed);
  std::vector<Matrix> windows;
  for (std::size_t b = 0; b < batch; ++b) windows.push_back(random_window(rng, n));
  Matrix targets(kOutputs, static_cast<Eigen::Index>(batch));
  for (Eigen::Index k = 0; k < targets.size(); ++k) targets.data()[k] = rng.uniform();

  const std::uint64_t mask_seed = seed + 17;
  const auto fwd = forward(params, cfg, windows, train_mode, mask_seed);
  const auto analytic = flatten(backward(params, cfg, fwd.cache, targets));

  ModelParams probe = params;
  auto loss = [&](const std::vector<double>& theta) {
    oracle::unflatten(theta, probe);
    return batch_mse(forward(probe, cfg, windows, train_mode, mask_seed).predictions, targets);
  };
  const auto numeric = oracle::central_differences(flatten(params), loss);
  return oracle::max_relative_error(analytic, numeric);
}

}  // namespace

TEST_CASE("init_params is deterministic and seed-sensitive") {
  const HyperConfig cfg{8, Activation::relu, 1e-3, OptimizerKind::adam, 3, 0.2};
  const auto a = flatten(init_params(cfg, 42));
  const auto b = flatten(init_params(cfg, 42));
  const auto c = flatten(init_params(cfg, 43));
  REQUIRE(a.size() == b.size());
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
  CHECK(a != c);

  const double bound = 1.0 / std::sqrt(8.0);
  const auto p = init_params(cfg, 1);
  CHECK(p.layers[0].forward.input_weights.cwiseAbs().maxCoeff() <= bound);
  CHECK(p.layers[0].forward.bias.segment(8, 8).isOnes());
  CHECK(p.layers[0].forward.bias.head(8).isZero());
  CHECK(p.layers[0].forward.bias.tail(16).isZero());
}

TEST_CASE("stacked layers take the concatenated 2*units input") {
  const ModelParams p = init_params(kReferenceTunedConfig, 0);
  REQUIRE(p.layers.size() == 2);
  CHECK(p.layers[0].forward.input_weights.cols() == 9);
  CHECK(p.layers[1].forward.input_weights.cols() == 320);
  CHECK(p.layers[1].backward.input_weights.cols() == 320);
  CHECK(p.head_weights.cols() == 320);
  CHECK(p.head_weights.rows() == 9);
}

TEST_CASE("invalid configs are rejected") {
  HyperConfig cfg;
  cfg.units = 0;
  CHECK_THROWS_AS(init_params(cfg, 0), ConfigError);
  cfg = HyperConfig{};
  cfg.dropout = 1.0;
  CHECK_THROWS_AS(init_params(cfg, 0), ConfigError);
}

TEST_CASE("zero parameters with a relu head predict zero") {
  const HyperConfig cfg{4, Activation::relu, 1e-3, OptimizerKind::adam, 2, 0.0};
  Rng rng(3);
  const Vector pred = predict(ModelParams::zeros(cfg), cfg, random_window(rng, 6));
  CHECK(pred.isZero(0.0));
}

TEST_CASE("inference is deterministic and independent of the seed") {
  const HyperConfig cfg{4, Activation::sigmoid, 1e-3, OptimizerKind::adam, 3, 0.5};
  const auto params = init_params(cfg, 9);
  Rng rng(5);
  const Matrix w = random_window(rng, 5);
  const Matrix a = forward(params, cfg, w, false, 1).predictions;
  const Matrix b = forward(params, cfg, w, false, 999).predictions;
  CHECK(a == b);
  // Dropout active in train mode changes the output for most seeds.
  const Matrix t1 = forward(params, cfg, w, true, 1).predictions;
  const Matrix t2 = forward(params, cfg, w, true, 1).predictions;
  CHECK(t1 == t2);
  CHECK(t1 != a);
}

TEST_CASE("backward direction equals forward direction on the reversed input") {
  HyperConfig cfg{3, Activation::sigmoid, 1e-3, OptimizerKind::adam, 1, 0.0};
  ModelParams params = init_params(cfg, 11);
  params.layers[0].backward = params.layers[0].forward;
  Rng rng(2);
  const Eigen::Index n = 5;
  const Matrix x = random_window(rng, n);
  const Matrix reversed = x.colwise().reverse();

  const auto on_x = forward(params, cfg, x, false, 0).cache.layers[0];
  const auto on_rev = forward(params, cfg, reversed, false, 0).cache.layers[0];
  for (Eigen::Index t = 0; t < n; ++t) {
    const Vector fwd_rev = on_rev.forward.hidden.col(t);
    const Vector bwd_x = on_x.backward.hidden.col(n - 1 - t);
    CHECK((fwd_rev - bwd_x).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("mse_loss examples") {
  Vector target = Vector::Zero(9);
  CHECK(mse_loss(target, target) == 0.0);
  CHECK(mse_loss(Vector::Ones(9), target) == doctest::Approx(1.0).epsilon(1e-15));
  Vector e0 = Vector::Zero(9);
  e0(0) = 1.0;
  CHECK(mse_loss(e0, target) == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
  CHECK_THROWS_AS(mse_loss(Vector::Zero(3), target), StructuralError);
}

TEST_CASE("gradients match central differences") {
  for (auto act : {Activation::sigmoid, Activation::softmax, Activation::leaky_relu, Activation::relu}) {
    CAPTURE(to_string(act));
    CHECK(gradient_check(tiny(act), 101, 3, 1, false) < 1e-4);
  }
  SUBCASE("batched with dropout masks held fixed") {
    CHECK(gradient_check(tiny(Activation::sigmoid, 0.3), 7, 4, 3, true) < 1e-4);
  }
  SUBCASE("three layers, wider cells") {
    const HyperConfig cfg{4, Activation::sigmoid, 1e-3, OptimizerKind::adam, 3, 0.0};
    CHECK(gradient_check(cfg, 5, 4, 2, false) < 1e-4);
  }
}

TEST_CASE("gradient is linear in the loss scale and vanishes at zero loss") {
  const HyperConfig cfg = tiny(Activation::sigmoid);
  const auto params = init_params(cfg, 4);
  Rng rng(8);
  const Matrix w = random_window(rng, 4);
  const auto fwd = forward(params, cfg, w, false, 0);
  Matrix target(kOutputs, 1);
  target.setConstant(0.3);
  const auto g1 = flatten(backward(params, cfg, fwd.cache, target, 1.0));
  const auto g2 = flatten(backward(params, cfg, fwd.cache, target, 2.0));
  for (std::size_t k = 0; k < g1.size(); ++k) CHECK(g2[k] == doctest::Approx(2.0 * g1[k]).epsilon(1e-12));

  const auto g0 = flatten(backward(params, cfg, fwd.cache, fwd.predictions));
  for (double v : g0) CHECK(v == 0.0);
}

TEST_CASE("forward rejects malformed windows") {
  const HyperConfig cfg = tiny();
  const auto params = init_params(cfg, 0);
  CHECK_THROWS_AS(forward(params, cfg, Matrix::Zero(1, 9), false, 0), StructuralError);
  CHECK_THROWS_AS(forward(params, cfg, Matrix::Zero(4, 8), false, 0), StructuralError);
  HyperConfig other = cfg;
  other.units = 3;
  CHECK_THROWS_AS(forward(params, other, Matrix::Zero(4, 9), false, 0), StructuralError);
}

TEST_CASE("model files reproduce predictions bit-exactly") {
  const HyperConfig cfg{5, Activation::leaky_relu, 1e-2, OptimizerKind::rmsprop, 2, 0.3};
  const auto params = init_params(cfg, 77);
  const auto stored = parse_model(serialize_model(cfg, params));
  CHECK(stored.config == cfg);
  const auto a = flatten(params);
  const auto b = flatten(stored.params);
  REQUIRE(a.size() == b.size());
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);

  Rng rng(1);
  const Matrix w = random_window(rng, 6);
  CHECK(predict(params, cfg, w) == predict(stored.params, stored.config, w));

  CHECK_THROWS_AS(parse_model("garbage\n"), SchemaError);
  auto text = serialize_model(cfg, params);
  text.resize(text.size() / 2);
  CHECK_THROWS_AS(parse_model(text), SchemaError);
}

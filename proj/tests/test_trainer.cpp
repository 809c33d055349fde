#include <cstring>
#include <vector>

#include "doctest.h"
#include "uocad/error.hpp"
#include "uocad/nn/trainer.hpp"
#include "uocad/rng.hpp"

using namespace uocad;
using namespace uocad::nn;

namespace {

MultivariateSeries constant_series(std::size_t rows) {
  MultivariateSeries s;
  for (std::size_t i = 0; i < rows; ++i) {
    s.push_back({static_cast<std::int64_t>(i) * 150, {22, 58, 974, 1750, 190, 20, 98, 101, 50}});
  }
  return s;
}

MultivariateSeries noisy_sine(std::size_t rows, std::uint64_t seed) {
  Rng rng(seed);
  MultivariateSeries s;
  for (std::size_t i = 0; i < rows; ++i) {
    Instance inst{static_cast<std::int64_t>(i) * 150, {}};
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      inst.values[f] = 10.0 + static_cast<double>(f) + std::sin(0.2 * static_cast<double>(i) + f) +
                       0.05 * rng.normal();
    }
    s.push_back(inst);
  }
  return s;
}

}  // namespace

TEST_CASE("samples are normalized against their own window") {
  const auto series = noisy_sine(30, 1);
  const auto samples = make_samples(series, 6);
  REQUIRE(samples.size() == 24);
  for (const auto& s : samples) {
    CHECK(s.window.rows() == 6);
    CHECK(s.window.minCoeff() >= 0.0);
    CHECK(s.window.maxCoeff() <= 1.0);
  }
  CHECK(make_samples(series, 6, 0, 6).empty());
  CHECK(make_samples(series, 6, 10, 20).size() == 4);
}

TEST_CASE("constant series trains to near-zero validation loss") {
  const auto samples = make_samples(constant_series(80), 6);
  const std::span<const Sample> all(samples);
  const HyperConfig cfg{8, Activation::relu, 1e-2, OptimizerKind::adam, 2, 0.1};
  const auto result = train(cfg, all.first(60), all.subspan(60), {50, 16, 5, 1e-6, 3});
  CHECK(result.report.final_val_loss < 1e-3);
  CHECK(result.report.epochs_run <= 50);
  CHECK(result.report.train_loss_per_epoch.size() == static_cast<std::size_t>(result.report.epochs_run));
  CHECK(result.report.val_loss_per_epoch.size() == static_cast<std::size_t>(result.report.epochs_run));
}

TEST_CASE("patience 0 runs every requested epoch") {
  const auto samples = make_samples(noisy_sine(60, 2), 6);
  const std::span<const Sample> all(samples);
  const HyperConfig cfg{4, Activation::sigmoid, 1e-3, OptimizerKind::rmsprop, 2, 0.0};
  const auto result = train(cfg, all.first(40), all.subspan(40), {7, 10, 0, 1e-6, 1});
  CHECK(result.report.epochs_run == 7);
  CHECK_FALSE(result.report.stopped_early);
}

TEST_CASE("early stopping returns the best validation epoch") {
  const auto samples = make_samples(noisy_sine(60, 2), 6);
  const std::span<const Sample> all(samples);
  // A huge learning rate makes validation loss bounce around.
  const HyperConfig cfg{4, Activation::sigmoid, 1e-2, OptimizerKind::adagrad, 2, 0.0};
  const auto result = train(cfg, all.first(40), all.subspan(40), {40, 10, 2, 1e-6, 5});
  const auto& val = result.report.val_loss_per_epoch;
  double best = val.front();
  for (double v : val) best = std::min(best, v);
  CHECK(result.report.final_val_loss <= best + 1e-6);
  CHECK(evaluate(cfg, result.params, all.subspan(40)) == doctest::Approx(result.report.final_val_loss).epsilon(1e-12));
}

TEST_CASE("training is deterministic in its seed") {
  const auto samples = make_samples(noisy_sine(50, 4), 6);
  const std::span<const Sample> all(samples);
  const HyperConfig cfg{4, Activation::leaky_relu, 1e-3, OptimizerKind::adam, 2, 0.3};
  const TrainOptions opts{5, 8, 5, 1e-6, 11};
  const auto a = train(cfg, all.first(30), all.subspan(30), opts);
  const auto b = train(cfg, all.first(30), all.subspan(30), opts);
  CHECK(a.report == b.report);
  const auto fa = flatten(a.params);
  const auto fb = flatten(b.params);
  CHECK(std::memcmp(fa.data(), fb.data(), fa.size() * sizeof(double)) == 0);
  CHECK(a.optimizer == b.optimizer);
}

TEST_CASE("empty and invalid training inputs are rejected") {
  const auto samples = make_samples(noisy_sine(20, 4), 6);
  const HyperConfig cfg{2, Activation::relu, 1e-3, OptimizerKind::adam, 2, 0.0};
  CHECK_THROWS_AS(train(cfg, {}, samples, {}), EmptyInputError);
  CHECK_THROWS_AS(train(cfg, samples, {}, {}), EmptyInputError);
  CHECK_THROWS_AS(train(cfg, samples, samples, {0, 10, 5, 1e-6, 0}), ConfigError);
}

TEST_CASE("divergence is reported with its epoch") {
  auto samples = make_samples(noisy_sine(20, 4), 6);
  samples[0].target(0) = std::numeric_limits<double>::infinity();
  const HyperConfig cfg{2, Activation::relu, 1e-3, OptimizerKind::adam, 2, 0.0};
  try {
    train(cfg, samples, samples, {3, 100, 5, 1e-6, 0});
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.where() == 1);
  }
}

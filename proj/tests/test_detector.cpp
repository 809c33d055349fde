#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "doctest.h"
#include "support/oracles.hpp"
#include "uocad/datagen.hpp"
#include "uocad/detector.hpp"
#include "uocad/error.hpp"
#include "uocad/nn/bilstm.hpp"
#include "uocad/rng.hpp"
#include "uocad/text.hpp"

using namespace uocad;
using namespace uocad::detector;

namespace {

const nn::HyperConfig kTiny{6, nn::Activation::relu, 1e-3, nn::OptimizerKind::adam, 1, 0.0};

OnlineModel fresh_model(std::uint64_t seed = 1) {
  return {kTiny, nn::init_params(kTiny, seed), nn::OptimizerState(kTiny.optimizer)};
}

// Smooth daily-ish waves with no noise, every feature well away from zero.
MultivariateSeries smooth_series(std::size_t rows) {
  MultivariateSeries s;
  for (std::size_t i = 0; i < rows; ++i) {
    Instance inst{static_cast<std::int64_t>(i) * 150, {}};
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      inst.values[f] = 100.0 + 10.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / 96.0 +
                                               static_cast<double>(f));
    }
    s.push_back(inst);
  }
  return s;
}

FeatureFlags flags_with(std::size_t count) {
  FeatureFlags f{};
  for (std::size_t i = 0; i < count; ++i) f[i] = true;
  return f;
}

}  // namespace

TEST_CASE("vote fusion") {
  CHECK_FALSE(combine_votes(flags_with(0), Criterion::individual));
  CHECK(combine_votes(flags_with(1), Criterion::individual));
  CHECK_FALSE(combine_votes(flags_with(4), Criterion::majority));
  CHECK(combine_votes(flags_with(5), Criterion::majority));
  CHECK(combine_votes(flags_with(9), Criterion::majority));
  CHECK(parse_criterion("majority") == Criterion::majority);
  CHECK_THROWS_AS(parse_criterion("some"), ConfigError);
}

TEST_CASE("AARE examples") {
  const std::vector<ErrorPair> buf{{1, 2}, {2, 1}, {4, 2}};
  CHECK(compute_aare(buf, 1e-3) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  std::vector<ErrorPair> scaled;
  for (const auto& p : buf) scaled.push_back({10 * p.actual, 10 * p.predicted});
  CHECK(compute_aare(scaled, 1e-3) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  const std::vector<ErrorPair> exact{{3, 3}, {-1, -1}};
  CHECK(compute_aare(exact, 1e-3) == 0.0);
  // a zero actual divides by the guard
  const std::vector<ErrorPair> zero{{0.0, 0.5}};
  CHECK(compute_aare(zero, 1e-3) == doctest::Approx(500.0));
  CHECK_THROWS_AS(compute_aare({}, 1e-3), EmptyInputError);
}

TEST_CASE("AARE matches the oracle on random buffers") {
  Rng rng(42);
  for (int c = 0; c < 200; ++c) {
    const auto n = 1 + rng.index(30);
    std::vector<ErrorPair> buf;
    std::vector<double> y, yh;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = rng.uniform(-5, 5), p = rng.uniform(-5, 5);
      buf.push_back({a, p});
      y.push_back(a);
      yh.push_back(p);
    }
    CHECK(std::abs(compute_aare(buf, 1e-3) - oracle::aare(y, yh, 1e-3)) <=
          1e-12 * std::max(1.0, oracle::aare(y, yh, 1e-3)));
  }
}

TEST_CASE("threshold examples") {
  const std::vector<double> flat{0.2, 0.2, 0.2};
  CHECK(threshold_from_history(flat)->thd == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(threshold_from_history(flat)->sigma == doctest::Approx(0.0));

  const std::vector<double> h{0.1, 0.2, 0.3};
  const auto t = threshold_from_history(h);
  REQUIRE(t);
  CHECK(t->mu == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(t->sigma == doctest::Approx(std::sqrt(0.02 / 3.0)).epsilon(1e-14));
  CHECK(t->thd == doctest::Approx(0.44494897427831783).epsilon(1e-14));

  const std::vector<double> shifted{0.6, 0.7, 0.8};
  CHECK(threshold_from_history(shifted)->thd == doctest::Approx(t->thd + 0.5).epsilon(1e-14));
  CHECK_FALSE(threshold_from_history(std::vector<double>{0.3}).has_value());
  CHECK_FALSE(threshold_from_history({}).has_value());
}

TEST_CASE("threshold state evicts the oldest value") {
  ThresholdState s(3);
  CHECK_FALSE(s.accept(1.0));
  CHECK(s.accept(2.0));
  s.accept(3.0);
  s.accept(10.0);
  CHECK(s.history() == std::vector<double>{2.0, 3.0, 10.0});
  const auto ref = oracle::threshold(s.history());
  CHECK(s.stats()->thd == doctest::Approx(ref.thd).epsilon(1e-14));
  CHECK(s.stats()->thd - s.stats()->mu == doctest::Approx(3.0 * s.stats()->sigma).epsilon(1e-14));
  CHECK_THROWS_AS(ThresholdState(1), ConfigError);
}

TEST_CASE("detector config validation") {
  DetectorConfig c;
  CHECK_NOTHROW(c.validate());
  c.warmup_steps = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.history_capacity = 2;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.division_guard = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.window = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("stream length, warmup and boundary") {
  DetectorConfig cfg;
  cfg.window = 8;
  const auto s = smooth_series(40);
  const auto v = run_stream(s, cfg, fresh_model(), 3);
  REQUIRE(v.size() == 32);
  CHECK(v.front().t == 8);
  for (std::size_t k = 0; k < v.size(); ++k) {
    CHECK(v[k].in_warmup == (k < cfg.warmup_steps));
    if (v[k].in_warmup) {
      CHECK_FALSE(v[k].anomalous_individual);
      CHECK_FALSE(v[k].anomalous_majority);
    }
  }
  const auto single = run_stream(smooth_series(9), cfg, fresh_model(), 3);
  REQUIRE(single.size() == 1);
  CHECK(single[0].in_warmup);
  CHECK_THROWS_AS(run_stream(smooth_series(8), cfg, fresh_model(), 3), EmptyInputError);
}

TEST_CASE("steady stream raises no flags after warmup") {
  MultivariateSeries s;
  for (std::int64_t i = 0; i < 120; ++i) {
    Instance inst{i, {}};
    for (std::size_t f = 0; f < kFeatureCount; ++f) inst.values[f] = 10.0 + static_cast<double>(f);
    s.push_back(inst);
  }
  DetectorConfig cfg;
  cfg.window = 6;
  const auto model = train_initial_model(s, 6, kTiny, {60, 0.2, 5, 16, 5, 1});
  for (const auto& v : run_stream(s, cfg, model, 1)) CHECK_FALSE(v.anomalous_individual);
}

TEST_CASE("a level shift is flagged") {
  auto s = smooth_series(400);
  for (std::size_t i = 300; i < 330; ++i) {
    auto v = s[i].values;
    v[kTemp] += 60.0;
    s.set_values(i, v);
  }
  DetectorConfig cfg;
  cfg.window = 12;
  cfg.warmup_steps = 50;
  const auto model = train_initial_model(s, 12, kTiny, {250, 0.2, 20, 32, 5, 2});
  const auto v = run_stream(s, cfg, model, 2);
  bool hit = false;
  for (const auto& x : v) {
    if (x.t >= 300 && x.t < 330 && x.feature_flags[kTemp]) hit = true;
  }
  CHECK(hit);
}

TEST_CASE("quarantine leaves thresholds and the model untouched") {
  const auto b = datagen::make_benchmark(datagen::BenchmarkKind::d2a1, 4);
  DetectorConfig cfg;
  cfg.window = 12;
  const auto all = b.series.instances();
  Detector det(cfg, fresh_model(5), all.first(12), 12, 9);
  std::size_t anomalous = 0, normal = 0;
  for (std::size_t t = 12; t < 400; ++t) {
    const auto params_before = nn::flatten(det.model().params);
    const auto optimizer_before = det.model().optimizer;
    const auto thresholds_before = det.thresholds();
    const auto v = det.step(all[t]);
    if (v.anomalous(cfg.criterion)) {
      ++anomalous;
      REQUIRE(nn::flatten(det.model().params) == params_before);
      REQUIRE(det.model().optimizer == optimizer_before);
      REQUIRE(det.thresholds() == thresholds_before);
    } else {
      ++normal;
      REQUIRE(det.thresholds()[kTemp].history().size() ==
              std::min(thresholds_before[kTemp].history().size() + 1, cfg.history_capacity));
      REQUIRE(nn::flatten(det.model().params) != params_before);
    }
  }
  CHECK(anomalous > 0);
  CHECK(normal > 0);
}

TEST_CASE("streams are deterministic and majority implies individual") {
  const auto b = datagen::make_benchmark(datagen::BenchmarkKind::d2a1, 2);
  DetectorConfig cfg;
  cfg.window = 6;
  cfg.criterion = Criterion::majority;
  const auto a = run_stream(b.series, cfg, fresh_model(), 11);
  const auto c = run_stream(b.series, cfg, fresh_model(), 11);
  CHECK(format_trace_csv(a) == format_trace_csv(c));
  CHECK(format_verdict_log(a) == format_verdict_log(c));
  for (const auto& v : a) {
    if (v.anomalous_majority) REQUIRE(v.anomalous_individual);
  }
}

TEST_CASE("non-finite predictions report the stream index") {
  auto model = fresh_model();
  model.params.head_bias(0) = std::numeric_limits<double>::quiet_NaN();
  DetectorConfig cfg;
  cfg.window = 5;
  try {
    run_stream(smooth_series(20), cfg, model, 1);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.where() == 5);
  }
}

TEST_CASE("verdict log and trace formats") {
  DetectorConfig cfg;
  cfg.window = 4;
  const auto s = smooth_series(8);
  const auto v = run_stream(s, cfg, fresh_model(), 1);
  const auto log = format_verdict_log(v);
  const auto lines = text::split(log, '\n');
  CHECK(lines[0] ==
        "t,timestamp,flag_temp,flag_humidity,flag_pressure,flag_co2,flag_voc,flag_light,flag_pm1,flag_pm25,"
        "flag_sound,individual,majority,in_warmup");
  CHECK(lines[1] == "4,1970-01-01T00:10:00Z,0,0,0,0,0,0,0,0,0,0,0,1");
  const auto trace_csv = format_trace_csv(v);
  const auto trace = text::split(trace_csv, '\n');
  CHECK(trace[0] == "t,feature,aare,threshold,flag");
  // the first step has no threshold yet
  CHECK(trace[1].ends_with(",,0"));
  CHECK(trace.size() == 1 + 4 * kFeatureCount + 1);
}

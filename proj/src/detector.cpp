#include "uocad/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "uocad/error.hpp"
#include "uocad/nn/trainer.hpp"
#include "uocad/rng.hpp"
#include "uocad/text.hpp"

namespace uocad::detector {

std::string_view to_string(Criterion c) { return c == Criterion::individual ? "individual" : "majority"; }

Criterion parse_criterion(std::string_view s) {
  s = text::trim(s);
  if (s == "individual" || s == "ind") return Criterion::individual;
  if (s == "majority" || s == "maj") return Criterion::majority;
  throw ConfigError("unknown criterion '" + std::string(s) + "' (expected individual or majority)");
}

bool combine_votes(const FeatureFlags& flags, Criterion criterion) {
  const auto votes = static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
  return criterion == Criterion::individual ? votes >= 1 : votes >= kMajorityVotes;
}

double compute_aare(std::span<const ErrorPair> buffer, double division_guard) {
  if (buffer.empty()) throw EmptyInputError("AARE needs at least one (actual, predicted) pair");
  double sum = 0.0;
  for (const auto& p : buffer) {
    sum += std::abs(p.actual - p.predicted) / std::max(std::abs(p.actual), division_guard);
  }
  return sum / static_cast<double>(buffer.size());
}

std::optional<ThresholdStats> threshold_from_history(std::span<const double> history) {
  if (history.size() < 2) return std::nullopt;
  const auto n = static_cast<double>(history.size());
  double sum = 0.0;
  for (double v : history) sum += v;
  const double mu = sum / n;
  double sq = 0.0;
  for (double v : history) sq += (v - mu) * (v - mu);
  const double sigma = std::sqrt(sq / n);
  return ThresholdStats{mu, sigma, mu + 3.0 * sigma};
}

ThresholdState::ThresholdState(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ < 2) throw ConfigError("threshold history capacity must be at least 2");
  history_.reserve(capacity_);
}

bool ThresholdState::accept(double aare) {
  if (history_.size() == capacity_) history_.erase(history_.begin());
  history_.push_back(aare);
  stats_ = threshold_from_history(history_);
  return ready();
}

void AareBuffer::push(ErrorPair pair) {
  if (pairs_.size() == capacity_) pairs_.erase(pairs_.begin());
  pairs_.push_back(pair);
}

void DetectorConfig::validate() const {
  WindowConfig{window}.validate();
  if (warmup_steps < 2) throw ConfigError("warmup must be at least 2 steps");
  if (history_capacity < warmup_steps) throw ConfigError("history capacity must be at least the warmup");
  if (!(division_guard > 0.0)) throw ConfigError("division guard must be positive");
  if (fine_tune_epochs < 0) throw ConfigError("fine_tune_epochs must be non-negative");
}

OnlineModel train_initial_model(const MultivariateSeries& series, std::size_t window,
                                const nn::HyperConfig& cfg, const InitialTraining& options) {
  const std::size_t rows = std::min(options.rows, series.size());
  const auto samples = nn::make_samples(series, window, 0, rows);
  if (samples.size() < 2) {
    throw EmptyInputError("initial training span of " + std::to_string(rows) +
                          " rows yields fewer than 2 samples for window " + std::to_string(window));
  }
  auto n_val = static_cast<std::size_t>(std::ceil(options.val_fraction * static_cast<double>(samples.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, samples.size() - 1);
  const std::span<const nn::Sample> all(samples);
  auto result = nn::train(cfg, all.first(samples.size() - n_val), all.last(n_val),
                          {options.epochs, options.batch_size, options.patience, 1e-6, options.seed});
  return {cfg, std::move(result.params), std::move(result.optimizer)};
}

Detector::Detector(DetectorConfig cfg, OnlineModel model, std::span<const Instance> initial_window,
                   std::size_t first_index, std::uint64_t seed)
    : cfg_(cfg),
      model_(std::move(model)),
      window_(initial_window.begin(), initial_window.end()),
      next_index_(first_index),
      seed_(seed) {
  cfg_.validate();
  nn::check_shapes(model_.params, model_.config);
  if (window_.size() != cfg_.window) {
    throw StructuralError("initial window has " + std::to_string(window_.size()) + " instances, expected " +
                          std::to_string(cfg_.window));
  }
  thresholds_.fill(ThresholdState(cfg_.history_capacity));
  buffers_.fill(AareBuffer(cfg_.window));
}

Verdict Detector::step(const Instance& next) {
  const std::size_t t = next_index_;
  const nn::Sample sample = nn::make_sample(window_, next);
  const nn::Vector pred = nn::predict(model_.params, model_.config, sample.window);

  FeatureVector normalized{};
  std::copy(pred.data(), pred.data() + kFeatureCount, normalized.begin());
  const FeatureVector y_hat = denormalize(normalized, sample.stats);
  if (!all_finite(y_hat)) {
    throw DivergenceError("non-finite prediction at index " + std::to_string(t), t);
  }

  Verdict v;
  v.t = t;
  v.timestamp = next.timestamp;
  v.in_warmup = steps_ < cfg_.warmup_steps;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    buffers_[f].push({next.values[f], y_hat[f]});
    v.aare[f] = buffers_[f].aare(cfg_.division_guard);
    const auto& stats = thresholds_[f].stats();
    v.threshold[f] = stats ? stats->thd : std::numeric_limits<double>::quiet_NaN();
    v.feature_flags[f] = !v.in_warmup && stats && v.aare[f] > stats->thd;
  }
  v.anomalous_individual = combine_votes(v.feature_flags, Criterion::individual);
  v.anomalous_majority = combine_votes(v.feature_flags, Criterion::majority);

  if (!v.anomalous(cfg_.criterion)) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) thresholds_[f].accept(v.aare[f]);
    for (int e = 0; e < cfg_.fine_tune_epochs; ++e) {
      nn::train_step(model_.config, model_.params, model_.optimizer, std::span<const nn::Sample>(&sample, 1),
                     derive_seed(seed_, t, static_cast<std::uint64_t>(e)));
    }
  }

  window_.erase(window_.begin());
  window_.push_back(next);
  ++next_index_;
  ++steps_;
  return v;
}

std::vector<Verdict> run_stream(const MultivariateSeries& series, const DetectorConfig& cfg,
                                const OnlineModel& model, std::uint64_t seed) {
  cfg.validate();
  if (series.size() < cfg.window + 1) {
    throw EmptyInputError("series of " + std::to_string(series.size()) + " instances is too short for window " +
                          std::to_string(cfg.window));
  }
  const auto all = series.instances();
  Detector det(cfg, model, all.first(cfg.window), cfg.window, seed);
  std::vector<Verdict> verdicts;
  verdicts.reserve(series.size() - cfg.window);
  for (std::size_t t = cfg.window; t < series.size(); ++t) verdicts.push_back(det.step(all[t]));
  return verdicts;
}

std::string format_verdict_log(std::span<const Verdict> verdicts) {
  std::ostringstream out;
  out << "t,timestamp";
  for (auto name : kFeatureNames) out << ",flag_" << name;
  out << ",individual,majority,in_warmup\n";
  for (const auto& v : verdicts) {
    out << v.t << ',' << text::format_iso8601(v.timestamp);
    for (bool f : v.feature_flags) out << ',' << (f ? 1 : 0);
    out << ',' << (v.anomalous_individual ? 1 : 0) << ',' << (v.anomalous_majority ? 1 : 0) << ','
        << (v.in_warmup ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string format_trace_csv(std::span<const Verdict> verdicts) {
  std::ostringstream out;
  out << "t,feature,aare,threshold,flag\n";
  for (const auto& v : verdicts) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      out << v.t << ',' << kFeatureNames[f] << ',' << text::format_double(v.aare[f]) << ','
          << (std::isnan(v.threshold[f]) ? std::string() : text::format_double(v.threshold[f])) << ','
          << (v.feature_flags[f] ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

}  // namespace uocad::detector

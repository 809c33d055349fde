#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uocad/nn/bilstm.hpp"
#include "uocad/nn/hyper_config.hpp"
#include "uocad/nn/optimizer.hpp"
#include "uocad/series.hpp"

namespace uocad::detector {

enum class Criterion { individual, majority };
std::string_view to_string(Criterion c);
Criterion parse_criterion(std::string_view s);

/// Feature votes needed under the majority criterion (five of nine).
inline constexpr std::size_t kMajorityVotes = 5;

using FeatureFlags = std::array<bool, kFeatureCount>;

/// individual: any flag set. majority: at least kMajorityVotes flags set.
bool combine_votes(const FeatureFlags& flags, Criterion criterion);

struct ErrorPair {
  double actual = 0.0;
  double predicted = 0.0;

  bool operator==(const ErrorPair&) const = default;
};

/// Mean of |y - y_hat| / max(|y|, division_guard) over the buffer.
/// Throws EmptyInputError on an empty buffer.
double compute_aare(std::span<const ErrorPair> buffer, double division_guard);

struct ThresholdStats {
  double mu = 0.0;
  double sigma = 0.0;  ///< population standard deviation
  double thd = 0.0;    ///< mu + 3 sigma

  bool operator==(const ThresholdStats&) const = default;
};

/// Mean, population std and mu + 3 sigma of `history`; nullopt (not ready)
/// when fewer than two values are available.
std::optional<ThresholdStats> threshold_from_history(std::span<const double> history);

/// Bounded history of accepted AARE values for one feature and the
/// threshold derived from it.
class ThresholdState {
 public:
  explicit ThresholdState(std::size_t capacity = 288);

  /// Appends one accepted AARE value, evicting the oldest beyond capacity,
  /// and recomputes the threshold. Returns whether the threshold is ready.
  bool accept(double aare);

  bool ready() const noexcept { return stats_.has_value(); }
  const std::optional<ThresholdStats>& stats() const noexcept { return stats_; }
  const std::vector<double>& history() const noexcept { return history_; }
  std::size_t capacity() const noexcept { return capacity_; }

  bool operator==(const ThresholdState&) const = default;

 private:
  std::size_t capacity_;
  std::vector<double> history_;
  std::optional<ThresholdStats> stats_;
};

/// Last N (actual, predicted) pairs of one feature, oldest first.
class AareBuffer {
 public:
  explicit AareBuffer(std::size_t capacity = 24) : capacity_(capacity) {}

  void push(ErrorPair pair);
  std::span<const ErrorPair> pairs() const noexcept { return pairs_; }
  double aare(double division_guard) const { return compute_aare(pairs_, division_guard); }

  bool operator==(const AareBuffer&) const = default;

 private:
  std::size_t capacity_;
  std::vector<ErrorPair> pairs_;
};

struct DetectorConfig {
  std::size_t window = 24;  ///< model input length, also the AARE length
  Criterion criterion = Criterion::individual;
  std::size_t warmup_steps = 3;
  double division_guard = 1e-3;
  std::size_t history_capacity = 288;
  int fine_tune_epochs = 1;

  /// window >= 2, warmup >= 2, capacity >= warmup, guard > 0, epochs >= 0.
  void validate() const;
};

struct Verdict {
  std::size_t t = 0;
  std::int64_t timestamp = 0;
  FeatureFlags feature_flags{};
  bool anomalous_individual = false;
  bool anomalous_majority = false;
  bool in_warmup = false;
  FeatureVector aare{};       ///< AARE after this step's pair was added
  FeatureVector threshold{};  ///< threshold the AARE was compared to; NaN if not ready

  /// The fused decision under `criterion`.
  bool anomalous(Criterion criterion) const {
    return criterion == Criterion::individual ? anomalous_individual : anomalous_majority;
  }
};

/// Model weights plus the optimizer state used for online fine-tuning.
struct OnlineModel {
  nn::HyperConfig config;
  nn::ModelParams params;
  nn::OptimizerState optimizer;
};

struct InitialTraining {
  std::size_t rows = 288;  ///< leading rows used to fit the initial model
  double val_fraction = 0.2;
  int epochs = 50;
  int batch_size = 100;
  int patience = 5;
  std::uint64_t seed = 0;
};

/// Fits a model on the first `options.rows` instances (chronological
/// train/validation split).
OnlineModel train_initial_model(const MultivariateSeries& series, std::size_t window,
                                const nn::HyperConfig& cfg, const InitialTraining& options);

/// Streaming decision engine. Each step predicts the incoming instance from
/// the current window, updates the per-feature AARE, compares it with the
/// feature's threshold, and fuses the flags. Normal (and warmup) steps feed
/// the threshold history and fine-tune the model; anomalous steps leave both
/// untouched. The window always slides to include the new instance.
class Detector {
 public:
  Detector(DetectorConfig cfg, OnlineModel model, std::span<const Instance> initial_window,
           std::size_t first_index, std::uint64_t seed);

  /// Throws DivergenceError (carrying the index) on a non-finite prediction.
  Verdict step(const Instance& next);

  const DetectorConfig& config() const noexcept { return cfg_; }
  const OnlineModel& model() const noexcept { return model_; }
  const std::array<ThresholdState, kFeatureCount>& thresholds() const noexcept { return thresholds_; }
  const std::array<AareBuffer, kFeatureCount>& buffers() const noexcept { return buffers_; }
  std::size_t next_index() const noexcept { return next_index_; }

 private:
  DetectorConfig cfg_;
  OnlineModel model_;
  std::vector<Instance> window_;
  std::size_t next_index_;
  std::size_t steps_ = 0;
  std::uint64_t seed_;
  std::array<ThresholdState, kFeatureCount> thresholds_;
  std::array<AareBuffer, kFeatureCount> buffers_;
};

/// Runs a Detector over `series` starting from the window [0, n); returns
/// size() - n verdicts. Throws EmptyInputError when size() < n + 1.
std::vector<Verdict> run_stream(const MultivariateSeries& series, const DetectorConfig& cfg,
                                const OnlineModel& model, std::uint64_t seed);

/// `t,timestamp,flag_temp,...,flag_sound,individual,majority,in_warmup`
std::string format_verdict_log(std::span<const Verdict> verdicts);

/// Long-form per-step traces: `t,feature,aare,threshold,flag`.
std::string format_trace_csv(std::span<const Verdict> verdicts);

}  // namespace uocad::detector

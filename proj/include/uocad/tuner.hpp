#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uocad/nn/hyper_config.hpp"
#include "uocad/nn/trainer.hpp"
#include "uocad/series.hpp"

namespace uocad::tuner {

/// Per-dimension choices; the grid is their cartesian product.
struct SearchSpace {
  std::vector<int> units = {32, 64, 96, 128, 160, 192};
  std::vector<nn::Activation> activations = {nn::Activation::relu, nn::Activation::leaky_relu,
                                             nn::Activation::sigmoid, nn::Activation::softmax};
  std::vector<double> learning_rates = {1e-2, 1e-3, 1e-4};
  std::vector<nn::OptimizerKind> optimizers = {nn::OptimizerKind::rmsprop, nn::OptimizerKind::adam,
                                               nn::OptimizerKind::adadelta, nn::OptimizerKind::adagrad};
  std::vector<int> num_layers = {2, 3, 4, 5};
  std::vector<double> dropouts = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};

  /// Throws ConfigError on an empty dimension or an invalid choice.
  void validate() const;
  std::size_t cardinality() const;
  bool contains(const nn::HyperConfig& cfg) const;
  /// Mixed-radix decoding of `index` in [0, cardinality()).
  nn::HyperConfig config_at(std::size_t index) const;
};

/// Reads `key=v1,v2,...` lines using the config keys; omitted keys keep the
/// full default range.
SearchSpace parse_search_space(std::string_view content);

/// Uniform draw over the grid, deterministic per (seed, draw_index).
nn::HyperConfig sample_config(const SearchSpace& space, std::uint64_t seed, std::uint64_t draw_index);

struct Rung {
  std::size_t n_configs = 0;
  int epochs = 0;

  bool operator==(const Rung&) const = default;
};

struct BracketPlan {
  int s = 0;
  std::vector<Rung> rungs;

  bool operator==(const BracketPlan&) const = default;
};

/// Brackets s = s_max..0 with s_max = floor(log_eta R). Throws ConfigError
/// when R < 1 or eta < 2.
std::vector<BracketPlan> hyperband_schedule(int max_epochs, int eta);

/// Total number of trials the schedule runs.
std::size_t total_trials(std::span<const BracketPlan> plan);

enum class TrialStatus { completed, retried, failed };

struct TrialResult {
  std::size_t trial_id = 0;
  int bracket = 0;
  int rung = 0;
  nn::HyperConfig config;
  int epochs_granted = 0;
  std::optional<double> val_loss;  ///< empty for failed trials
  TrialStatus status = TrialStatus::completed;
  int retries = 0;  ///< divergence retries used, at most kMaxRetries

  /// `completed`, `retried(k)` or `failed`.
  std::string status_string() const;
};

inline constexpr int kMaxRetries = 2;
inline constexpr int kTrialBatchSize = 100;
inline constexpr int kTrialPatience = 5;

using TrainFn = std::function<nn::TrainResult(const nn::HyperConfig&, std::span<const nn::Sample>,
                                              std::span<const nn::Sample>, const nn::TrainOptions&)>;

/// Trains `cfg` for up to `epochs` epochs (batch 100, early stopping). A
/// DivergenceError triggers a retry with a fresh seed, at most kMaxRetries
/// times; the trial is then marked failed. `train_fn` defaults to nn::train.
TrialResult run_trial(const nn::HyperConfig& cfg, std::span<const nn::Sample> train_set,
                      std::span<const nn::Sample> val_set, int epochs, std::uint64_t seed,
                      const TrainFn& train_fn = {});

struct TuneOptions {
  int max_epochs = 50;
  int eta = 3;
  std::size_t window = 24;
  double val_fraction = 0.2;  ///< trailing share of samples used for validation
  std::uint64_t seed = 0;
  TrainFn train_fn;  ///< empty means nn::train
};

struct TuneResult {
  nn::HyperConfig best;
  double best_val_loss = 0.0;
  std::size_t best_trial = 0;    ///< position of the winning trial in `log`
  std::vector<TrialResult> log;  ///< execution order
};

/// Indices into `trials` of the floor(size/eta) lowest val_loss completed
/// trials (ties keep the earlier trial), in promotion order.
std::vector<std::size_t> promote(std::span<const TrialResult> trials, int eta);

/// Runs every bracket of the schedule on `samples` split chronologically.
/// Promoted configs are retrained from scratch with the larger budget.
/// Best: lowest val_loss, then fewer epochs, then config order. Throws
/// TuningFailedError when no trial completes.
TuneResult tune(const SearchSpace& space, std::span<const nn::Sample> samples, const TuneOptions& options);
TuneResult tune(const SearchSpace& space, const MultivariateSeries& series, const TuneOptions& options);

/// `trial_id,bracket,rung,units,activation,lr,optimizer,layers,dropout,epochs,val_loss,status`
std::string format_trial_log(std::span<const TrialResult> log);

}  // namespace uocad::tuner

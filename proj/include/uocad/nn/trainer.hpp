#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "uocad/nn/bilstm.hpp"
#include "uocad/nn/optimizer.hpp"
#include "uocad/series.hpp"

namespace uocad::nn {

/// A (window, next) pair normalized with the window's own min/max.
struct Sample {
  Matrix window;  ///< n x 9
  Vector target;  ///< 9, next instance in window-normalized units
  NormalizationStats stats;
};

Matrix normalized_window(std::span<const Instance> window, const NormalizationStats& stats);
Sample make_sample(std::span<const Instance> window, const Instance& next);

/// Samples for every window whose `next` index lies in [begin + n, end).
std::vector<Sample> make_samples(const MultivariateSeries& series, std::size_t n,
                                 std::size_t begin, std::size_t end);
std::vector<Sample> make_samples(const MultivariateSeries& series, std::size_t n);

struct TrainOptions {
  int epochs = 50;
  int batch_size = 100;
  int patience = 5;  ///< 0 disables early stopping
  double min_delta = 1e-6;
  std::uint64_t seed = 0;
};

struct TrainingReport {
  int epochs_run = 0;
  std::vector<double> train_loss_per_epoch;
  std::vector<double> val_loss_per_epoch;
  bool stopped_early = false;
  double final_val_loss = 0.0;

  bool operator==(const TrainingReport&) const = default;
};

struct TrainResult {
  ModelParams params;  ///< from the best validation epoch
  OptimizerState optimizer;
  TrainingReport report;
};

/// Mini-batch training from freshly initialized parameters. Batches follow
/// a seeded permutation per epoch. Throws EmptyInputError on empty sets and
/// DivergenceError (carrying the 1-based epoch) on a non-finite loss.
TrainResult train(const HyperConfig& cfg, std::span<const Sample> train_set,
                  std::span<const Sample> val_set, const TrainOptions& options);

/// One gradient step on `batch` in train mode; returns the batch loss
/// measured before the update.
double train_step(const HyperConfig& cfg, ModelParams& params, OptimizerState& optimizer,
                  std::span<const Sample> batch, std::uint64_t seed);

/// Inference-mode mean MSE over `samples`.
double evaluate(const HyperConfig& cfg, const ModelParams& params, std::span<const Sample> samples);

}  // namespace uocad::nn

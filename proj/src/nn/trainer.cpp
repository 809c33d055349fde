#include "uocad/nn/trainer.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>
#include <string>

#include "uocad/error.hpp"
#include "uocad/rng.hpp"

namespace uocad::nn {

namespace {

constexpr std::size_t kEvalChunk = 256;

struct Batch {
  std::vector<Matrix> windows;
  Matrix targets;
};

template <typename Indices>
Batch gather(std::span<const Sample> samples, const Indices& indices) {
  Batch batch;
  batch.windows.reserve(indices.size());
  batch.targets.resize(kOutputs, static_cast<Eigen::Index>(indices.size()));
  Eigen::Index col = 0;
  for (const std::size_t i : indices) {
    batch.windows.push_back(samples[i].window);
    batch.targets.col(col++) = samples[i].target;
  }
  return batch;
}

}  // namespace

Matrix normalized_window(std::span<const Instance> window, const NormalizationStats& stats) {
  Matrix m(static_cast<Eigen::Index>(window.size()), kInputs);
  for (std::size_t t = 0; t < window.size(); ++t) {
    const auto z = normalize(window[t].values, stats);
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      m(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(f)) = z[f];
    }
  }
  return m;
}

Sample make_sample(std::span<const Instance> window, const Instance& next) {
  Sample s;
  s.stats = fit_normalizer(window);
  s.window = normalized_window(window, s.stats);
  const auto z = normalize(next.values, s.stats);
  s.target = Eigen::Map<const Vector>(z.data(), kOutputs);
  return s;
}

std::vector<Sample> make_samples(const MultivariateSeries& series, std::size_t n,
                                 std::size_t begin, std::size_t end) {
  WindowConfig{n}.validate();
  end = std::min(end, series.size());
  std::vector<Sample> out;
  if (end < begin + n + 1) return out;
  out.reserve(end - begin - n);
  const auto all = series.instances();
  for (std::size_t next = begin + n; next < end; ++next) {
    out.push_back(make_sample(all.subspan(next - n, n), all[next]));
  }
  return out;
}

std::vector<Sample> make_samples(const MultivariateSeries& series, std::size_t n) {
  return make_samples(series, n, 0, series.size());
}

double train_step(const HyperConfig& cfg, ModelParams& params, OptimizerState& optimizer,
                  std::span<const Sample> batch, std::uint64_t seed) {
  std::vector<std::size_t> idx(batch.size());
  std::iota(idx.begin(), idx.end(), 0);
  const Batch b = gather(batch, idx);
  const auto fwd = forward(params, cfg, b.windows, true, seed);
  const double loss = batch_mse(fwd.predictions, b.targets);
  const Gradients grads = backward(params, cfg, fwd.cache, b.targets);
  optimizer_step(optimizer, params, grads, cfg.optimizer, cfg.learning_rate);
  return loss;
}

double evaluate(const HyperConfig& cfg, const ModelParams& params, std::span<const Sample> samples) {
  if (samples.empty()) throw EmptyInputError("cannot evaluate on an empty set");
  double total = 0.0;
  for (std::size_t start = 0; start < samples.size(); start += kEvalChunk) {
    const std::size_t stop = std::min(samples.size(), start + kEvalChunk);
    std::vector<std::size_t> idx(stop - start);
    std::iota(idx.begin(), idx.end(), start);
    const Batch b = gather(samples, idx);
    const auto fwd = forward(params, cfg, b.windows, false, 0);
    total += batch_mse(fwd.predictions, b.targets) * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(samples.size());
}

TrainResult train(const HyperConfig& cfg, std::span<const Sample> train_set,
                  std::span<const Sample> val_set, const TrainOptions& options) {
  cfg.validate();
  if (train_set.empty() || val_set.empty()) {
    throw EmptyInputError("training needs nonempty train and validation sets");
  }
  if (options.epochs < 1 || options.batch_size < 1 || options.patience < 0) {
    throw ConfigError("epochs and batch_size must be positive, patience non-negative");
  }

  TrainResult result{init_params(cfg, derive_seed(options.seed, 0)), OptimizerState(cfg.optimizer), {}};
  ModelParams params = result.params;
  double best_val = std::numeric_limits<double>::infinity();
  int stale_epochs = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch_size = static_cast<std::size_t>(options.batch_size);

  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    Rng rng(derive_seed(options.seed, 1, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(std::span<std::size_t>(order));

    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size, ++batch_index) {
      const std::size_t stop = std::min(order.size(), start + batch_size);
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      const Batch b = gather(train_set, idx);
      const auto fwd = forward(params, cfg, b.windows, true,
                               derive_seed(options.seed, 2, static_cast<std::uint64_t>(epoch), batch_index));
      const double loss = batch_mse(fwd.predictions, b.targets);
      if (!std::isfinite(loss)) {
        throw DivergenceError("training loss became non-finite in epoch " + std::to_string(epoch),
                              static_cast<std::size_t>(epoch));
      }
      epoch_loss += loss * static_cast<double>(idx.size());
      const Gradients grads = backward(params, cfg, fwd.cache, b.targets);
      optimizer_step(result.optimizer, params, grads, cfg.optimizer, cfg.learning_rate);
    }
    epoch_loss /= static_cast<double>(order.size());

    const double val_loss = evaluate(cfg, params, val_set);
    if (!std::isfinite(val_loss)) {
      throw DivergenceError("validation loss became non-finite in epoch " + std::to_string(epoch),
                            static_cast<std::size_t>(epoch));
    }
    result.report.train_loss_per_epoch.push_back(epoch_loss);
    result.report.val_loss_per_epoch.push_back(val_loss);
    result.report.epochs_run = epoch;

    if (val_loss < best_val - options.min_delta) {
      best_val = val_loss;
      result.params = params;
      stale_epochs = 0;
    } else if (++stale_epochs >= options.patience && options.patience > 0) {
      result.report.stopped_early = epoch < options.epochs;
      break;
    }
  }
  result.report.final_val_loss = best_val;
  return result;
}

}  // namespace uocad::nn

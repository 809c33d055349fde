#include "uocad/series.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uocad/error.hpp"

namespace uocad {

bool all_finite(const FeatureVector& values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

MultivariateSeries::MultivariateSeries(std::vector<Instance> instances) {
  instances_.reserve(instances.size());
  for (const auto& inst : instances) push_back(inst);
}

void MultivariateSeries::push_back(const Instance& instance) {
  if (!all_finite(instance.values)) {
    throw SchemaError("instance " + std::to_string(instances_.size()) +
                      " contains a non-finite value");
  }
  if (!instances_.empty() && instance.timestamp <= instances_.back().timestamp) {
    throw SchemaError("timestamp at instance " + std::to_string(instances_.size()) +
                      " does not increase");
  }
  instances_.push_back(instance);
}

void MultivariateSeries::set_values(std::size_t i, const FeatureVector& values) {
  if (i >= instances_.size()) throw BoundsError("row " + std::to_string(i) + " out of range");
  if (!all_finite(values)) {
    throw SchemaError("instance " + std::to_string(i) + " contains a non-finite value");
  }
  instances_[i].values = values;
}

void WindowConfig::validate() const {
  if (n < 2) throw ConfigError("window size must be at least 2, got " + std::to_string(n));
}

std::vector<WindowPair> slide(const MultivariateSeries& series, const WindowConfig& cfg) {
  cfg.validate();
  if (series.size() < cfg.n + 1) {
    throw EmptyInputError("series of " + std::to_string(series.size()) +
                          " instances is too short for window " + std::to_string(cfg.n));
  }
  const auto all = series.instances();
  std::vector<WindowPair> pairs;
  pairs.reserve(series.size() - cfg.n);
  for (std::size_t k = 0; k + cfg.n < series.size(); ++k) {
    pairs.push_back({all.subspan(k, cfg.n), &all[k + cfg.n], k + cfg.n});
  }
  return pairs;
}

NormalizationStats fit_normalizer(std::span<const Instance> window) {
  if (window.empty()) throw EmptyInputError("cannot fit normalizer on an empty window");
  NormalizationStats stats{window.front().values, window.front().values};
  for (const auto& inst : window.subspan(1)) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      stats.min[f] = std::min(stats.min[f], inst.values[f]);
      stats.max[f] = std::max(stats.max[f], inst.values[f]);
    }
  }
  return stats;
}

FeatureVector normalize(const FeatureVector& x, const NormalizationStats& stats) {
  FeatureVector z{};
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    z[f] = (x[f] - stats.min[f]) / (stats.max[f] - stats.min[f] + kNormalizeEpsilon);
  }
  return z;
}

FeatureVector denormalize(const FeatureVector& z, const NormalizationStats& stats) {
  FeatureVector x{};
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    x[f] = z[f] * (stats.max[f] - stats.min[f] + kNormalizeEpsilon) + stats.min[f];
  }
  return x;
}

}  // namespace uocad

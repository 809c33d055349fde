#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace uocad {

inline constexpr std::size_t kFeatureCount = 9;

/// Feature order used everywhere: CSV columns, model outputs and vote flags.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "temp", "humidity", "pressure", "co2", "voc", "light", "pm1", "pm25", "sound"};

enum Feature : std::size_t {
  kTemp = 0,
  kHumidity,
  kPressure,
  kCo2,
  kVoc,
  kLight,
  kPm1,
  kPm25,
  kSound,
};

using FeatureVector = std::array<double, kFeatureCount>;

struct Instance {
  std::int64_t timestamp = 0;  ///< seconds since epoch, UTC
  FeatureVector values{};

  bool operator==(const Instance&) const = default;
};

/// Ordered multivariate sensor series. Every instance is finite and
/// timestamps strictly increase; both are checked on insertion.
class MultivariateSeries {
 public:
  MultivariateSeries() = default;
  explicit MultivariateSeries(std::vector<Instance> instances);

  void push_back(const Instance& instance);

  std::size_t size() const noexcept { return instances_.size(); }
  bool empty() const noexcept { return instances_.empty(); }
  const Instance& operator[](std::size_t i) const { return instances_[i]; }
  std::span<const Instance> instances() const noexcept { return instances_; }

  /// Replaces the feature values of row i; the timestamp is kept.
  void set_values(std::size_t i, const FeatureVector& values);

  static constexpr const std::array<std::string_view, kFeatureCount>& feature_names() {
    return kFeatureNames;
  }

  bool operator==(const MultivariateSeries&) const = default;

 private:
  std::vector<Instance> instances_;
};

struct WindowConfig {
  std::size_t n = 24;  ///< instances per window
  static constexpr std::size_t m_total = kFeatureCount;

  void validate() const;
};

/// One sliding-window training/detection pair: `window` covers
/// [next_index - n, next_index) and `next` is the instance at next_index.
struct WindowPair {
  std::span<const Instance> window;
  const Instance* next = nullptr;
  std::size_t next_index = 0;
};

/// All stride-1 windows of `series`; yields size() - n pairs.
/// Throws EmptyInputError if the series has fewer than n + 1 instances.
std::vector<WindowPair> slide(const MultivariateSeries& series, const WindowConfig& cfg);

inline constexpr double kNormalizeEpsilon = 1e-8;

struct NormalizationStats {
  FeatureVector min{};
  FeatureVector max{};
};

/// Per-feature min/max over a nonempty window.
NormalizationStats fit_normalizer(std::span<const Instance> window);

/// (x - min) / (max - min + eps) per feature.
FeatureVector normalize(const FeatureVector& x, const NormalizationStats& stats);
FeatureVector denormalize(const FeatureVector& z, const NormalizationStats& stats);

bool all_finite(const FeatureVector& values);

}  // namespace uocad

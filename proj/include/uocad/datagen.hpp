#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uocad/series.hpp"

namespace uocad::datagen {

struct FeatureSummary {
  double min = 0.0;
  double max = 0.0;
  double avg = 0.0;
  double std = 0.0;
};

/// Per-feature summary statistics in raw units, in kFeatureNames order.
struct FeatureStats {
  std::array<FeatureSummary, kFeatureCount> features{};

  /// Throws ConfigError unless min <= avg <= max and std >= 0 everywhere.
  void validate() const;
};

/// Summary tables of the three smart-home air quality recordings.
FeatureStats stats_2d1a();
FeatureStats stats_10d2a();
FeatureStats stats_5m();

/// Inclusive index range of one labeled anomaly.
struct LabeledRange {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start + 1; }
  bool contains(std::size_t i) const { return i >= start && i <= end; }
  bool operator==(const LabeledRange&) const = default;
};

/// Sorted, non-overlapping labeled ranges.
class LabelSet {
 public:
  /// Inserts keeping order; throws ConflictError on overlap.
  void add(LabeledRange range);

  const std::vector<LabeledRange>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }
  bool contains(std::size_t index) const;
  /// Position of the event containing `index`, or size() if none.
  std::size_t event_of(std::size_t index) const;

  /// Throws BoundsError if any range reaches past `length`.
  void check_within(std::size_t length) const;

  bool operator==(const LabelSet&) const = default;

 private:
  std::vector<LabeledRange> events_;
};

enum class ProfileKind { cooking, heating };
std::string_view to_string(ProfileKind kind);
ProfileKind parse_profile(std::string_view s);

/// Signed offset per feature in multiples of that feature's std; 0 leaves
/// the feature untouched.
struct AnomalyProfile {
  ProfileKind kind = ProfileKind::cooking;
  std::array<double, kFeatureCount> offsets{};
  std::size_t duration = 0;
};

inline constexpr double kDefaultMagnitude = 4.0;

/// Unintended cooking: CO2 drops; temp, humidity, VOC, PM1 and PM2.5 rise.
AnomalyProfile cooking_profile(std::size_t duration, double magnitude = kDefaultMagnitude);
/// Heating malfunction: CO2 rises; temp, humidity, VOC, PM1, PM2.5 and
/// pressure drop.
AnomalyProfile heating_profile(std::size_t duration, double magnitude = kDefaultMagnitude);

inline constexpr std::int64_t kDefaultSamplingInterval = 150;
/// 2024-01-01T00:00:00Z
inline constexpr std::int64_t kDefaultStartTimestamp = 1704067200;

/// Diurnal sinusoid (24 h period, amplitude 0.5 std) around the mean, plus
/// Gaussian noise (0.5 std) and a slow mean-reverting random walk, clamped
/// to [min, max]. Deterministic in `seed`.
MultivariateSeries generate_baseline(const FeatureStats& stats, std::size_t n_rows,
                                     std::int64_t sampling_interval_s, std::uint64_t seed,
                                     std::int64_t start_timestamp = kDefaultStartTimestamp);

/// Ramps the profile's offsets in over the first 3 instances of the event,
/// holds them with extra noise, and ramps out over the last 3. Values stay
/// clamped to the stats' [min, max]. Rows outside the event are untouched.
/// Throws BoundsError if the event does not fit, ConflictError if it
/// overlaps an existing label, EmptyInputError for a zero duration.
std::pair<MultivariateSeries, LabelSet> inject_anomaly(const MultivariateSeries& series,
                                                        const LabelSet& labels,
                                                        const FeatureStats& stats,
                                                        const AnomalyProfile& profile,
                                                        std::size_t start_index, std::uint64_t seed);

enum class BenchmarkKind { d2a1, d10a2, m5 };
std::string_view to_string(BenchmarkKind kind);
/// Accepts "2d1a", "10d2a" and "5m".
BenchmarkKind parse_benchmark_kind(std::string_view s);

struct Benchmark {
  MultivariateSeries series;
  LabelSet labels;
  FeatureStats stats;
};

inline constexpr std::size_t kRows2d1a = 1151;
inline constexpr std::size_t kRows10d2a = 6336;
inline constexpr std::size_t kRows5m = 91738;
inline constexpr std::size_t kCookingStart2d1a = 600;
inline constexpr std::size_t kHeatingStart10d2a = 2400;
inline constexpr std::size_t kCookingStart10d2a = 3800;

/// 2d1a: 1151 rows with one 28-instance cooking event. 10d2a: 6336 rows with
/// a 24-instance heating event and, more than two simulated days later, a
/// 24-instance cooking event. 5m: 91738 unlabeled rows for tuning.
Benchmark make_benchmark(BenchmarkKind kind, std::uint64_t seed);

inline constexpr std::string_view kGeneratorVersion = "uocad-datagen 1";

// CSV ingestion and emission.
inline constexpr std::string_view kSeriesHeader =
    "timestamp,temp,humidity,pressure,co2,voc,light,pm1,pm25,sound";
inline constexpr std::string_view kLabelsHeader = "start,end";

std::string format_series_csv(const MultivariateSeries& series);
MultivariateSeries parse_series_csv(std::string_view content);
MultivariateSeries read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const MultivariateSeries& series);

std::string format_labels_csv(const LabelSet& labels);
LabelSet parse_labels_csv(std::string_view content);
LabelSet read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const LabelSet& labels);

}  // namespace uocad::datagen

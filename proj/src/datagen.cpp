#include "uocad/datagen.hpp"

#include <algorithm>
#include <iterator>
#include <cmath>
#include <numbers>
#include <optional>

#include "uocad/error.hpp"
#include "uocad/rng.hpp"
#include "uocad/text.hpp"

namespace uocad::datagen {

namespace {

constexpr double kSecondsPerDay = 86400.0;
constexpr double kDiurnalAmplitude = 0.5;  // in std units
constexpr double kNoiseScale = 0.5;
constexpr double kWalkPersistence = 0.995;
constexpr double kWalkStep = 0.02;
constexpr std::size_t kRampLength = 3;
constexpr double kHoldNoise = 0.25;

FeatureStats from_table(const std::array<FeatureSummary, kFeatureCount>& rows) {
  FeatureStats s{rows};
  s.validate();
  return s;
}

}  // namespace

void FeatureStats::validate() const {
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const auto& s = features[f];
    if (!(s.min <= s.avg && s.avg <= s.max) || !(s.std >= 0.0)) {
      throw ConfigError("inconsistent summary statistics for " + std::string(kFeatureNames[f]));
    }
  }
}

FeatureStats stats_2d1a() {
  return from_table({{{18.79, 27.89, 22.0, 1.97},
                      {44.62, 95.76, 58.53, 9.51},
                      {968.0, 981.0, 974.5, 4.32},
                      {635, 2518, 1757.5, 434.54},
                      {46, 721, 188.30, 121.65},
                      {0, 74, 21.39, 25.01},
                      {1, 659, 97.95, 100.81},
                      {1, 852, 101.19, 106.32},
                      {37, 94, 50.80, 12.13}}});
}

FeatureStats stats_10d2a() {
  return from_table({{{8.99, 33.11, 21.75, 2.83},
                      {23.22, 95.79, 51.36, 9.50},
                      {983, 1010, 993.48, 6.2},
                      {400, 2402, 1439.9, 357.61},
                      {0, 4851, 133.17, 290.83},
                      {0, 44, 11.68, 13.24},
                      {0, 697, 83.06, 116.71},
                      {0, 1000, 97.48, 159.71},
                      {37, 84, 50.76, 11.93}}});
}

FeatureStats stats_5m() {
  return from_table({{{0, 58.2, 24.49, 2.86},
                      {0, 122.08, 42.86, 9.01},
                      {946.8, 2008, 991.61, 11.28},
                      {0, 2679, 1010.92, 417.37},
                      {46, 4851, 198.46, 207.81},
                      {0, 76, 17.05, 15.77},
                      {0, 706, 42.89, 84.08},
                      {0, 1000, 48.25, 106.88},
                      {0, 133, 53.18, 11.34}}});
}

void LabelSet::add(LabeledRange range) {
  if (range.end < range.start) throw BoundsError("label range ends before it starts");
  const auto pos = std::lower_bound(events_.begin(), events_.end(), range,
                                    [](const LabeledRange& a, const LabeledRange& b) { return a.start < b.start; });
  const bool overlaps_next = pos != events_.end() && pos->start <= range.end;
  const bool overlaps_prev = pos != events_.begin() && std::prev(pos)->end >= range.start;
  if (overlaps_next || overlaps_prev) {
    throw ConflictError("label [" + std::to_string(range.start) + ", " + std::to_string(range.end) +
                        "] overlaps an existing event");
  }
  events_.insert(pos, range);
}

std::size_t LabelSet::event_of(std::size_t index) const {
  const auto pos = std::upper_bound(events_.begin(), events_.end(), index,
                                    [](std::size_t i, const LabeledRange& r) { return i < r.start; });
  if (pos == events_.begin()) return events_.size();
  const auto candidate = std::prev(pos);
  return candidate->contains(index) ? static_cast<std::size_t>(candidate - events_.begin()) : events_.size();
}

bool LabelSet::contains(std::size_t index) const { return event_of(index) < events_.size(); }

void LabelSet::check_within(std::size_t length) const {
  for (const auto& e : events_) {
    if (e.end >= length) {
      throw BoundsError("label [" + std::to_string(e.start) + ", " + std::to_string(e.end) +
                        "] exceeds series length " + std::to_string(length));
    }
  }
}

std::string_view to_string(ProfileKind kind) {
  return kind == ProfileKind::cooking ? "cooking" : "heating";
}

ProfileKind parse_profile(std::string_view s) {
  s = text::trim(s);
  if (s == "cooking") return ProfileKind::cooking;
  if (s == "heating") return ProfileKind::heating;
  throw ConfigError("unknown anomaly profile '" + std::string(s) + "'");
}

AnomalyProfile cooking_profile(std::size_t duration, double magnitude) {
  AnomalyProfile p{ProfileKind::cooking, {}, duration};
  p.offsets[kCo2] = -magnitude;
  for (auto f : {kTemp, kHumidity, kVoc, kPm1, kPm25}) p.offsets[f] = magnitude;
  return p;
}

AnomalyProfile heating_profile(std::size_t duration, double magnitude) {
  AnomalyProfile p{ProfileKind::heating, {}, duration};
  p.offsets[kCo2] = magnitude;
  for (auto f : {kTemp, kHumidity, kVoc, kPm1, kPm25, kPressure}) p.offsets[f] = -magnitude;
  return p;
}

MultivariateSeries generate_baseline(const FeatureStats& stats, std::size_t n_rows,
                                     std::int64_t sampling_interval_s, std::uint64_t seed,
                                     std::int64_t start_timestamp) {
  stats.validate();
  if (n_rows < 1) throw EmptyInputError("n_rows must be at least 1");
  if (sampling_interval_s < 1) throw ConfigError("sampling interval must be positive");

  Rng rng(seed);
  std::array<double, kFeatureCount> phase{};
  for (double& p : phase) p = rng.uniform(0.0, 2.0 * std::numbers::pi);
  std::array<double, kFeatureCount> walk{};

  std::vector<Instance> rows;
  rows.reserve(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) {
    const std::int64_t ts = start_timestamp + static_cast<std::int64_t>(i) * sampling_interval_s;
    const double day_angle =
        2.0 * std::numbers::pi * static_cast<double>(ts - start_timestamp) / kSecondsPerDay;
    Instance inst{ts, {}};
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      const auto& s = stats.features[f];
      walk[f] = kWalkPersistence * walk[f] + kWalkStep * s.std * rng.normal();
      const double v = s.avg + kDiurnalAmplitude * s.std * std::sin(day_angle + phase[f]) +
                       kNoiseScale * s.std * rng.normal() + walk[f];
      inst.values[f] = std::clamp(v, s.min, s.max);
    }
    rows.push_back(inst);
  }
  return MultivariateSeries(std::move(rows));
}

std::pair<MultivariateSeries, LabelSet> inject_anomaly(const MultivariateSeries& series,
                                                        const LabelSet& labels,
                                                        const FeatureStats& stats,
                                                        const AnomalyProfile& profile,
                                                        std::size_t start_index, std::uint64_t seed) {
  if (profile.duration == 0) throw EmptyInputError("anomaly duration is zero (empty range)");
  if (start_index + profile.duration > series.size()) {
    throw BoundsError("anomaly [" + std::to_string(start_index) + ", " +
                      std::to_string(start_index + profile.duration - 1) + "] exceeds series length " +
                      std::to_string(series.size()));
  }
  LabelSet out_labels = labels;
  out_labels.add({start_index, start_index + profile.duration - 1});

  MultivariateSeries out = series;
  Rng rng(seed);
  const std::size_t d = profile.duration;
  for (std::size_t j = 0; j < d; ++j) {
    const double ramp_in = static_cast<double>(j + 1) / kRampLength;
    const double ramp_out = static_cast<double>(d - j) / kRampLength;
    const double weight = std::min({1.0, ramp_in, ramp_out});
    FeatureVector v = series[start_index + j].values;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      if (profile.offsets[f] == 0.0) continue;
      const auto& s = stats.features[f];
      const double offset = weight * profile.offsets[f] * s.std + kHoldNoise * s.std * rng.normal();
      v[f] = std::clamp(v[f] + offset, s.min, s.max);
    }
    out.set_values(start_index + j, v);
  }
  return {std::move(out), std::move(out_labels)};
}

std::string_view to_string(BenchmarkKind kind) {
  switch (kind) {
    case BenchmarkKind::d2a1: return "2d1a";
    case BenchmarkKind::d10a2: return "10d2a";
    case BenchmarkKind::m5: return "5m";
  }
  return "?";
}

BenchmarkKind parse_benchmark_kind(std::string_view s) {
  s = text::trim(s);
  if (s == "2d1a") return BenchmarkKind::d2a1;
  if (s == "10d2a") return BenchmarkKind::d10a2;
  if (s == "5m" || s == "5M") return BenchmarkKind::m5;
  throw ConfigError("unknown benchmark kind '" + std::string(s) + "' (expected 2d1a, 10d2a or 5m)");
}

Benchmark make_benchmark(BenchmarkKind kind, std::uint64_t seed) {
  Benchmark b;
  switch (kind) {
    case BenchmarkKind::d2a1: {
      b.stats = stats_2d1a();
      b.series = generate_baseline(b.stats, kRows2d1a, kDefaultSamplingInterval, derive_seed(seed, 0));
      auto [s, l] = inject_anomaly(b.series, b.labels, b.stats, cooking_profile(28), kCookingStart2d1a,
                                   derive_seed(seed, 1));
      b.series = std::move(s);
      b.labels = std::move(l);
      break;
    }
    case BenchmarkKind::d10a2: {
      b.stats = stats_10d2a();
      b.series = generate_baseline(b.stats, kRows10d2a, kDefaultSamplingInterval, derive_seed(seed, 0));
      auto [s1, l1] = inject_anomaly(b.series, b.labels, b.stats, heating_profile(24), kHeatingStart10d2a,
                                     derive_seed(seed, 1));
      auto [s2, l2] = inject_anomaly(s1, l1, b.stats, cooking_profile(24), kCookingStart10d2a,
                                     derive_seed(seed, 2));
      b.series = std::move(s2);
      b.labels = std::move(l2);
      break;
    }
    case BenchmarkKind::m5:
      b.stats = stats_5m();
      b.series = generate_baseline(b.stats, kRows5m, kDefaultSamplingInterval, derive_seed(seed, 0));
      break;
  }
  return b;
}

std::string format_series_csv(const MultivariateSeries& series) {
  std::string out(kSeriesHeader);
  out += '\n';
  for (const auto& inst : series.instances()) {
    out += text::format_iso8601(inst.timestamp);
    for (double v : inst.values) {
      out += ',';
      out += text::format_double(v);
    }
    out += '\n';
  }
  return out;
}

MultivariateSeries parse_series_csv(std::string_view content) {
  auto lines = text::split(content, '\n');
  if (lines.empty() || text::trim(lines.front()).empty()) throw SchemaError("CSV has no header row");

  const auto header = text::split(text::trim(lines.front()), ',');
  const auto expected = text::split(kSeriesHeader, ',');
  std::array<std::size_t, kFeatureCount + 1> column{};
  for (std::size_t k = 0; k < expected.size(); ++k) {
    std::optional<std::size_t> found;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (text::trim(header[c]) == expected[k]) found = c;
    }
    if (!found) throw SchemaError("CSV header is missing column '" + std::string(expected[k]) + "'");
    column[k] = *found;
  }
  if (header.size() != expected.size()) {
    throw SchemaError("CSV header has " + std::to_string(header.size()) + " columns, expected " +
                      std::to_string(expected.size()));
  }

  MultivariateSeries series;
  std::size_t row = 0;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto line = text::trim(lines[li]);
    if (line.empty()) continue;
    ++row;
    const auto fields = text::split(line, ',');
    const std::string where = "row " + std::to_string(row) + " (line " + std::to_string(li + 1) + ")";
    if (fields.size() != header.size()) {
      throw SchemaError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    }
    Instance inst;
    try {
      inst.timestamp = text::parse_iso8601(fields[column[0]]);
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        inst.values[f] = text::parse_double(fields[column[f + 1]]);
      }
    } catch (const SchemaError& e) {
      throw SchemaError(where + ": " + e.what());
    }
    if (!all_finite(inst.values)) throw SchemaError(where + ": non-finite value");
    if (!series.empty() && inst.timestamp <= series[series.size() - 1].timestamp) {
      throw SchemaError(where + ": timestamp does not increase");
    }
    series.push_back(inst);
  }
  return series;
}

MultivariateSeries read_csv(const std::filesystem::path& path) {
  return parse_series_csv(text::read_file(path));
}

void write_csv(const std::filesystem::path& path, const MultivariateSeries& series) {
  text::write_file(path, format_series_csv(series));
}

std::string format_labels_csv(const LabelSet& labels) {
  std::string out(kLabelsHeader);
  out += '\n';
  for (const auto& e : labels.events()) out += std::to_string(e.start) + ',' + std::to_string(e.end) + '\n';
  return out;
}

LabelSet parse_labels_csv(std::string_view content) {
  const auto lines = text::split(content, '\n');
  if (lines.empty() || text::trim(lines.front()) != kLabelsHeader) {
    throw SchemaError("labels CSV must start with '" + std::string(kLabelsHeader) + "'");
  }
  LabelSet labels;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto line = text::trim(lines[li]);
    if (line.empty()) continue;
    const auto fields = text::split(line, ',');
    if (fields.size() != 2) throw SchemaError("labels line " + std::to_string(li + 1) + ": expected start,end");
    const auto start = text::parse_int(fields[0]);
    const auto end = text::parse_int(fields[1]);
    if (start < 0 || end < start) {
      throw SchemaError("labels line " + std::to_string(li + 1) + ": invalid range");
    }
    labels.add({static_cast<std::size_t>(start), static_cast<std::size_t>(end)});
  }
  return labels;
}

LabelSet read_labels(const std::filesystem::path& path) { return parse_labels_csv(text::read_file(path)); }

void write_labels(const std::filesystem::path& path, const LabelSet& labels) {
  text::write_file(path, format_labels_csv(labels));
}

}  // namespace uocad::datagen

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uocad/datagen.hpp"
#include "uocad/detector.hpp"
#include "uocad/nn/hyper_config.hpp"

namespace uocad::eval {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  bool operator==(const ConfusionCounts&) const = default;
};

/// Sequence credit: an event with any flagged member contributes its full
/// length to tp, otherwise its full length to fn. Each distinct flagged
/// index outside every event adds one fp. Throws BoundsError for indices or
/// labels at or beyond total_len.
ConfusionCounts score(std::span<const std::size_t> flagged, const datagen::LabelSet& labels,
                      std::size_t total_len);

/// Scores a single event; indices inside the other events count neither
/// as tp nor as fp.
ConfusionCounts score_event(std::span<const std::size_t> flagged, const datagen::LabelSet& labels,
                            std::size_t event_index, std::size_t total_len);

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// P = tp/(tp+fp), R = tp/(tp+fn), F1 = 2PR/(P+R); every 0/0 is 0.
Metrics metrics(const ConfusionCounts& counts);

/// One results row: a `Ind-n`/`Maj-n` combination scored on all events
/// ("all") or on one event ("1", "2", ...).
struct MetricRow {
  std::string combination;
  std::string event;
  Metrics values;
  ConfusionCounts counts;
};

std::string combination_label(detector::Criterion criterion, std::size_t window);

/// Indices of non-warmup verdicts that are anomalous under `criterion`.
std::vector<std::size_t> flagged_indices(std::span<const detector::Verdict> verdicts,
                                         detector::Criterion criterion);

inline const std::vector<std::size_t> kSweepWindows = {6, 12, 24, 48, 72, 96, 120, 144};

struct SweepOptions {
  std::vector<std::size_t> windows = kSweepWindows;
  std::vector<detector::Criterion> criteria = {detector::Criterion::individual,
                                               detector::Criterion::majority};
  detector::DetectorConfig detector;  ///< window and criterion are overridden per cell
  detector::InitialTraining training;
  std::uint64_t seed = 0;
};

struct SweepCell {
  std::size_t window = 0;
  detector::Criterion criterion = detector::Criterion::individual;
  std::vector<detector::Verdict> verdicts;
};

struct SweepResult {
  std::vector<MetricRow> rows;  ///< criterion-major, then window ascending
  std::vector<SweepCell> cells;
};

/// Seeds of one sweep cell: the initial model for window n and its stream.
std::uint64_t training_seed(std::uint64_t seed, std::size_t window);
std::uint64_t stream_seed(std::uint64_t seed, std::size_t window);

/// For every (window, criterion): trains an initial model on the leading
/// rows, streams the detector over the series and scores the flags. The
/// initial model for a window is shared by both criteria. Multi-event label
/// sets also get one row per event.
SweepResult sweep(const MultivariateSeries& series, const datagen::LabelSet& labels,
                  const nn::HyperConfig& config, const SweepOptions& options);

/// `combination,event,precision,recall,f1`
std::string format_results_csv(std::span<const MetricRow> rows);

}  // namespace uocad::eval

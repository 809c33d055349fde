#include "uocad/eval.hpp"

#include <algorithm>
#include <sstream>

#include "uocad/error.hpp"
#include "uocad/rng.hpp"
#include "uocad/text.hpp"

namespace uocad::eval {

namespace {

std::vector<std::size_t> distinct_in_range(std::span<const std::size_t> flagged, std::size_t total_len) {
  std::vector<std::size_t> sorted(flagged.begin(), flagged.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (!sorted.empty() && sorted.back() >= total_len) {
    throw BoundsError("flagged index " + std::to_string(sorted.back()) + " is outside [0, " +
                      std::to_string(total_len) + ")");
  }
  return sorted;
}

}  // namespace

ConfusionCounts score(std::span<const std::size_t> flagged, const datagen::LabelSet& labels,
                      std::size_t total_len) {
  labels.check_within(total_len);
  const auto flags = distinct_in_range(flagged, total_len);
  std::vector<bool> detected(labels.size(), false);
  ConfusionCounts c;
  for (const std::size_t i : flags) {
    const std::size_t e = labels.event_of(i);
    if (e < labels.size()) {
      detected[e] = true;
    } else {
      ++c.fp;
    }
  }
  for (std::size_t e = 0; e < labels.size(); ++e) {
    (detected[e] ? c.tp : c.fn) += labels.events()[e].length();
  }
  return c;
}

ConfusionCounts score_event(std::span<const std::size_t> flagged, const datagen::LabelSet& labels,
                            std::size_t event_index, std::size_t total_len) {
  if (event_index >= labels.size()) throw BoundsError("no event " + std::to_string(event_index));
  const auto all = score(flagged, labels, total_len);
  const auto& event = labels.events()[event_index];
  const bool hit = std::any_of(flagged.begin(), flagged.end(), [&](std::size_t i) { return event.contains(i); });
  ConfusionCounts c;
  c.fp = all.fp;
  (hit ? c.tp : c.fn) = event.length();
  return c;
}

Metrics metrics(const ConfusionCounts& counts) {
  Metrics m;
  const auto tp = static_cast<double>(counts.tp);
  if (counts.tp + counts.fp > 0) m.precision = tp / static_cast<double>(counts.tp + counts.fp);
  if (counts.tp + counts.fn > 0) m.recall = tp / static_cast<double>(counts.tp + counts.fn);
  if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

std::string combination_label(detector::Criterion criterion, std::size_t window) {
  return (criterion == detector::Criterion::individual ? "Ind-" : "Maj-") + std::to_string(window);
}

std::vector<std::size_t> flagged_indices(std::span<const detector::Verdict> verdicts,
                                         detector::Criterion criterion) {
  std::vector<std::size_t> out;
  for (const auto& v : verdicts) {
    if (!v.in_warmup && v.anomalous(criterion)) out.push_back(v.t);
  }
  return out;
}

std::uint64_t training_seed(std::uint64_t seed, std::size_t window) { return derive_seed(seed, 0, window); }

std::uint64_t stream_seed(std::uint64_t seed, std::size_t window) { return derive_seed(seed, 1, window); }

SweepResult sweep(const MultivariateSeries& series, const datagen::LabelSet& labels,
                  const nn::HyperConfig& config, const SweepOptions& options) {
  config.validate();
  labels.check_within(series.size());

  std::vector<std::size_t> windows = options.windows;
  std::sort(windows.begin(), windows.end());
  std::vector<detector::OnlineModel> models;
  models.reserve(windows.size());
  for (const std::size_t n : windows) {
    auto training = options.training;
    training.seed = training_seed(options.seed, n);
    models.push_back(detector::train_initial_model(series, n, config, training));
  }

  SweepResult result;
  for (const auto criterion : options.criteria) {
    for (std::size_t k = 0; k < windows.size(); ++k) {
      auto cfg = options.detector;
      cfg.window = windows[k];
      cfg.criterion = criterion;
      SweepCell cell{windows[k], criterion,
                     detector::run_stream(series, cfg, models[k], stream_seed(options.seed, windows[k]))};
      const auto flags = flagged_indices(cell.verdicts, criterion);
      const auto label = combination_label(criterion, windows[k]);
      const auto overall = score(flags, labels, series.size());
      result.rows.push_back({label, "all", metrics(overall), overall});
      if (labels.size() > 1) {
        for (std::size_t e = 0; e < labels.size(); ++e) {
          const auto counts = score_event(flags, labels, e, series.size());
          result.rows.push_back({label, std::to_string(e + 1), metrics(counts), counts});
        }
      }
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

std::string format_results_csv(std::span<const MetricRow> rows) {
  std::ostringstream out;
  out << "combination,event,precision,recall,f1\n";
  for (const auto& r : rows) {
    out << r.combination << ',' << r.event << ',' << text::format_double(r.values.precision) << ','
        << text::format_double(r.values.recall) << ',' << text::format_double(r.values.f1) << '\n';
  }
  return out.str();
}

}  // namespace uocad::eval

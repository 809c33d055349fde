#include "uocad/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "uocad/datagen.hpp"
#include "uocad/detector.hpp"
#include "uocad/error.hpp"
#include "uocad/eval.hpp"
#include "uocad/nn/model_io.hpp"
#include "uocad/text.hpp"
#include "uocad/tuner.hpp"

namespace fs = std::filesystem;

namespace uocad::cli {

namespace {

constexpr std::string_view kArgPrefix = "arg.";

std::string absolute(const std::string& p) { return fs::absolute(fs::path(p)).lexically_normal().string(); }

std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += sep;
    out += items[i];
  }
  return out;
}

struct Options {
  std::string kind;
  std::uint64_t seed = 0;
  std::string data;
  std::string labels;
  std::string config;
  std::vector<std::size_t> windows;
  std::string criterion = "individual";
  int max_epochs = 50;
  int eta = 3;
  std::string out;
  std::string space;
  std::size_t max_rows = 0;
  std::size_t warmup = detector::DetectorConfig{}.warmup_steps;
  std::size_t history = detector::DetectorConfig{}.history_capacity;
  std::string manifest;
};

class Run {
 public:
  Run(std::string command, const Options& o, std::ostream& out) : o_(o), out_(out) {
    manifest_.command = std::move(command);
    manifest_.version = std::string(kArtifactVersion) + "; " + std::string(datagen::kGeneratorVersion);
    if (o_.out.empty()) throw ConfigError("--out is required");
    dir_ = absolute(o_.out);
    fs::create_directories(dir_);
    record("out", dir_.string());
    record("seed", std::to_string(o_.seed));
  }

  void record(const std::string& key, const std::string& value) { manifest_.args.emplace_back(key, value); }

  void write(const std::string& name, std::string_view content) {
    text::write_file(dir_ / name, content);
    manifest_.outputs.push_back(name);
  }

  fs::path path(const std::string& name) {
    manifest_.outputs.push_back(name);
    return dir_ / name;
  }

  void finish() {
    text::write_file(dir_ / std::string(kManifestName), format_manifest(manifest_));
    out_ << "wrote " << (dir_ / std::string(kManifestName)).string() << '\n';
  }

 private:
  const Options& o_;
  std::ostream& out_;
  fs::path dir_;
  RunManifest manifest_;
};

nn::HyperConfig load_config(const std::string& path) { return nn::parse_hyper_config(text::read_file(path)); }

detector::DetectorConfig detector_config(const Options& o) {
  detector::DetectorConfig cfg;
  cfg.warmup_steps = o.warmup;
  cfg.history_capacity = o.history;
  cfg.criterion = detector::parse_criterion(o.criterion);
  cfg.validate();
  return cfg;
}

void cmd_generate(const Options& o, std::ostream& out) {
  const auto kind = datagen::parse_benchmark_kind(o.kind);
  Run run("generate", o, out);
  run.record("kind", std::string(datagen::to_string(kind)));
  const auto b = datagen::make_benchmark(kind, o.seed);
  datagen::write_csv(run.path("series.csv"), b.series);
  datagen::write_labels(run.path("labels.csv"), b.labels);
  out << "generated " << b.series.size() << " rows, " << b.labels.size() << " labeled event"
      << (b.labels.size() == 1 ? "" : "s") << '\n';
  run.finish();
}

void cmd_tune(const Options& o, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  auto series = datagen::read_csv(o.data);
  if (o.max_rows > 0 && o.max_rows < series.size()) {
    const auto all = series.instances();
    series = MultivariateSeries(std::vector<Instance>(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(o.max_rows)));
  }
  const auto space = o.space.empty() ? tuner::SearchSpace{} : tuner::parse_search_space(text::read_file(o.space));
  tuner::TuneOptions options;
  options.max_epochs = o.max_epochs;
  options.eta = o.eta;
  options.window = o.windows.empty() ? 24 : o.windows.front();
  options.seed = o.seed;
  WindowConfig{options.window}.validate();

  Run run("tune", o, out);
  run.record("data", absolute(o.data));
  run.record("max-epochs", std::to_string(o.max_epochs));
  run.record("eta", std::to_string(o.eta));
  run.record("window", std::to_string(options.window));
  if (!o.space.empty()) run.record("space", absolute(o.space));
  if (o.max_rows > 0) run.record("max-rows", std::to_string(o.max_rows));

  const auto result = tuner::tune(space, series, options);
  run.write("trials.csv", tuner::format_trial_log(result.log));
  run.write("best_config.txt", nn::to_key_values(result.best));
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", minutes);
  out << "best: " << nn::describe(result.best) << " val_loss=" << text::format_double(result.best_val_loss) << '\n'
      << "trials: " << result.log.size() << ", wall time: " << buf << " min\n";
  run.finish();
}

void cmd_detect(const Options& o, std::ostream& out) {
  const auto series = datagen::read_csv(o.data);
  const auto cfg = load_config(o.config);
  auto dcfg = detector_config(o);
  dcfg.window = o.windows.empty() ? 24 : o.windows.front();
  dcfg.validate();

  Run run("detect", o, out);
  run.record("data", absolute(o.data));
  run.record("config", absolute(o.config));
  run.record("window", std::to_string(dcfg.window));
  run.record("criterion", std::string(detector::to_string(dcfg.criterion)));
  run.record("max-epochs", std::to_string(o.max_epochs));
  run.record("warmup", std::to_string(dcfg.warmup_steps));
  run.record("history", std::to_string(dcfg.history_capacity));

  detector::InitialTraining training;
  training.epochs = o.max_epochs;
  training.seed = eval::training_seed(o.seed, dcfg.window);
  const auto model = detector::train_initial_model(series, dcfg.window, cfg, training);
  if (series.size() < dcfg.window + 1) {
    throw EmptyInputError("series too short for window " + std::to_string(dcfg.window));
  }
  const auto all = series.instances();
  detector::Detector det(dcfg, model, all.first(dcfg.window), dcfg.window, eval::stream_seed(o.seed, dcfg.window));
  std::vector<detector::Verdict> verdicts;
  for (std::size_t t = dcfg.window; t < series.size(); ++t) verdicts.push_back(det.step(all[t]));

  run.write("verdicts.csv", detector::format_verdict_log(verdicts));
  run.write("traces.csv", detector::format_trace_csv(verdicts));
  nn::save_model(run.path("model.txt"), det.model().config, det.model().params);
  const auto flagged = eval::flagged_indices(verdicts, dcfg.criterion);
  out << verdicts.size() << " steps, " << flagged.size() << " anomalous (" << detector::to_string(dcfg.criterion)
      << ")\n";
  run.finish();
}

void cmd_sweep(const Options& o, std::ostream& out) {
  const auto series = datagen::read_csv(o.data);
  const auto labels = datagen::read_labels(o.labels);
  const auto cfg = load_config(o.config);

  eval::SweepOptions options;
  if (!o.windows.empty()) options.windows = o.windows;
  options.detector = detector_config(o);
  options.training.epochs = o.max_epochs;
  options.seed = o.seed;

  Run run("sweep", o, out);
  run.record("data", absolute(o.data));
  run.record("labels", absolute(o.labels));
  run.record("config", absolute(o.config));
  std::vector<std::string> ws;
  for (auto w : options.windows) ws.push_back(std::to_string(w));
  run.record("window", join(ws, ','));
  run.record("max-epochs", std::to_string(o.max_epochs));
  run.record("warmup", std::to_string(o.warmup));
  run.record("history", std::to_string(o.history));

  const auto result = eval::sweep(series, labels, cfg, options);
  const auto csv = eval::format_results_csv(result.rows);
  run.write("results.csv", csv);
  for (const auto& cell : result.cells) {
    run.write("verdicts_" + eval::combination_label(cell.criterion, cell.window) + ".csv",
              detector::format_verdict_log(cell.verdicts));
  }
  out << csv;
  run.finish();
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const DivergenceError*>(&e) || dynamic_cast<const TuningFailedError*>(&e)) return kNumeric;
  if (dynamic_cast<const ConfigError*>(&e)) return kUsage;
  return kData;
}

void add_window(CLI::App* cmd, Options& o, bool many) {
  auto* opt = cmd->add_option("--window", o.windows, many ? "window sizes (repeatable)" : "window size n");
  if (!many) opt->expected(1);
}

}  // namespace

std::string format_manifest(const RunManifest& m) {
  std::ostringstream out;
  out << "command=" << m.command << '\n' << "version=" << m.version << '\n';
  auto args = m.args;
  std::sort(args.begin(), args.end());
  for (const auto& [k, v] : args) out << kArgPrefix << k << '=' << v << '\n';
  out << "outputs=" << join(m.outputs, ',') << '\n';
  return out.str();
}

RunManifest parse_manifest(std::string_view content) {
  const auto kv = text::parse_key_values(content);
  RunManifest m;
  m.version.clear();
  for (const auto& [k, v] : kv) {
    if (k == "command") {
      m.command = v;
    } else if (k == "version") {
      m.version = v;
    } else if (k == "outputs") {
      for (auto item : text::split(v, ',')) {
        if (!text::trim(item).empty()) m.outputs.emplace_back(text::trim(item));
      }
    } else if (k.starts_with(kArgPrefix)) {
      m.args.emplace_back(k.substr(kArgPrefix.size()), v);
    } else {
      throw SchemaError("unknown manifest key '" + k + "'");
    }
  }
  if (m.command.empty()) throw SchemaError("manifest has no command");
  return m;
}

std::vector<std::string> replay_args(const RunManifest& manifest, const std::string& out_override) {
  std::vector<std::string> args{manifest.command};
  for (const auto& [k, v] : manifest.args) {
    const std::string value = (k == "out" && !out_override.empty()) ? out_override : v;
    if (k == "window") {
      for (auto w : text::split(value, ',')) {
        args.push_back("--window");
        args.emplace_back(w);
      }
    } else {
      args.push_back("--" + k);
      args.push_back(value);
    }
  }
  return args;
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Online contextual anomaly detection for multivariate sensor series", "uocad"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("generate", "write a synthetic benchmark series, labels and manifest");
  gen->add_option("--kind", o.kind, "2d1a, 10d2a or 5m")->required();
  gen->add_option("--seed", o.seed, "random seed");
  gen->add_option("--out", o.out, "output directory")->required();

  auto* tune = app.add_subcommand("tune", "Hyperband search for the forecaster configuration");
  tune->add_option("--data", o.data, "series CSV")->required();
  tune->add_option("--max-epochs", o.max_epochs, "Hyperband budget R")->capture_default_str();
  tune->add_option("--eta", o.eta, "Hyperband reduction factor")->capture_default_str();
  tune->add_option("--seed", o.seed, "random seed");
  add_window(tune, o, false);
  tune->add_option("--space", o.space, "search space file (key=v1,v2,... lines)");
  tune->add_option("--max-rows", o.max_rows, "use only the leading rows of the series");
  tune->add_option("--out", o.out, "output directory")->required();

  auto* det = app.add_subcommand("detect", "train an initial model and stream the detector over a series");
  det->add_option("--data", o.data, "series CSV")->required();
  det->add_option("--config", o.config, "model config (key=value)")->required();
  add_window(det, o, false);
  det->add_option("--criterion", o.criterion, "individual or majority")->capture_default_str();
  det->add_option("--max-epochs", o.max_epochs, "initial training epochs")->capture_default_str();
  det->add_option("--warmup", o.warmup, "warmup steps")->capture_default_str();
  det->add_option("--history", o.history, "threshold history capacity")->capture_default_str();
  det->add_option("--seed", o.seed, "random seed");
  det->add_option("--out", o.out, "output directory")->required();

  auto* sw = app.add_subcommand("sweep", "score every window size and criterion");
  sw->add_option("--data", o.data, "series CSV")->required();
  sw->add_option("--labels", o.labels, "labels CSV")->required();
  sw->add_option("--config", o.config, "model config (key=value)")->required();
  add_window(sw, o, true);
  sw->add_option("--max-epochs", o.max_epochs, "initial training epochs")->capture_default_str();
  sw->add_option("--warmup", o.warmup, "warmup steps")->capture_default_str();
  sw->add_option("--history", o.history, "threshold history capacity")->capture_default_str();
  sw->add_option("--seed", o.seed, "random seed");
  sw->add_option("--out", o.out, "output directory")->required();

  auto* rep = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  rep->add_option("manifest", o.manifest, "manifest file")->required();
  rep->add_option("--out", o.out, "write outputs here instead of the recorded directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) cmd_generate(o, out);
    if (*tune) cmd_tune(o, out);
    if (*det) cmd_detect(o, out);
    if (*sw) cmd_sweep(o, out);
    if (*rep) {
      const auto manifest = parse_manifest(text::read_file(o.manifest));
      if (manifest.command == "replay") throw SchemaError("a manifest cannot replay itself");
      const auto again = replay_args(manifest, o.out.empty() ? std::string() : absolute(o.out));
      return run(again, out, err);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}

}  // namespace uocad::cli

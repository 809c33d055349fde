#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "uocad/cli.hpp"
#include "uocad/nn/hyper_config.hpp"
#include "uocad/text.hpp"
#include "uocad/tuner.hpp"

namespace fs = std::filesystem;
using namespace uocad;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "uocad_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::size_t line_count(const fs::path& p) {
  const auto content = text::read_file(p);
  return static_cast<std::size_t>(std::count(content.begin(), content.end(), '\n'));
}

const char* kTinyConfig =
    "units=4\nactivation=relu\nlearning_rate=0.001\noptimizer=adam\nnum_layers=1\ndropout=0\n";

}  // namespace

TEST_CASE("generate writes series, labels and manifest reproducibly") {
  const auto dir = scratch("generate");
  REQUIRE(run({"generate", "--kind", "2d1a", "--seed", "7", "--out", (dir / "a").string()}).code == 0);
  REQUIRE(run({"generate", "--kind", "2d1a", "--seed", "7", "--out", (dir / "b").string()}).code == 0);
  CHECK(line_count(dir / "a" / "series.csv") == 1152);
  CHECK(line_count(dir / "a" / "labels.csv") == 2);
  CHECK(text::read_file(dir / "a" / "series.csv") == text::read_file(dir / "b" / "series.csv"));
  const auto m = cli::parse_manifest(text::read_file(dir / "a" / "manifest.txt"));
  CHECK(m.command == "generate");
  CHECK(m.version.find("uocad-datagen") != std::string::npos);
  CHECK(cli::format_manifest(m) == text::read_file(dir / "a" / "manifest.txt"));
}

TEST_CASE("detect, replay and exit codes") {
  const auto dir = scratch("detect");
  REQUIRE(run({"generate", "--kind", "2d1a", "--seed", "3", "--out", dir.string()}).code == 0);
  text::write_file(dir / "cfg.txt", kTinyConfig);
  const auto data = (dir / "series.csv").string();
  const auto cfg = (dir / "cfg.txt").string();

  const auto r = run({"detect", "--data", data, "--config", cfg, "--window", "12", "--criterion", "majority",
                      "--max-epochs", "2", "--seed", "5", "--out", (dir / "d1").string()});
  REQUIRE(r.code == 0);
  CHECK(line_count(dir / "d1" / "verdicts.csv") == 1 + 1151 - 12);

  // majority column never has more true entries than the individual column
  std::size_t ind = 0, maj = 0;
  const auto log = text::read_file(dir / "d1" / "verdicts.csv");
  for (auto line : text::split(log, '\n')) {
    const auto f = text::split(line, ',');
    if (f.size() != 14 || f[0] == "t") continue;
    ind += f[11] == "1";
    maj += f[12] == "1";
  }
  CHECK(maj <= ind);

  REQUIRE(run({"replay", (dir / "d1" / "manifest.txt").string(), "--out", (dir / "d2").string()}).code == 0);
  for (const char* f : {"verdicts.csv", "traces.csv", "model.txt"}) {
    CHECK(text::read_file(dir / "d1" / f) == text::read_file(dir / "d2" / f));
  }

  CHECK(run({"detect", "--data", (dir / "missing.csv").string(), "--config", cfg, "--out", (dir / "x").string()})
            .code == 3);
  CHECK(run({"detect", "--data", data, "--config", cfg, "--window", "1", "--out", (dir / "x").string()}).code == 2);
  CHECK(run({"detect", "--data", data}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"generate", "--kind", "7x", "--out", (dir / "x").string()}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("tune writes a loadable config and one log row per trial") {
  const auto dir = scratch("tune");
  REQUIRE(run({"generate", "--kind", "5m", "--seed", "1", "--out", dir.string()}).code == 0);
  text::write_file(dir / "space.txt", kTinyConfig);
  const auto r = run({"tune", "--data", (dir / "series.csv").string(), "--space", (dir / "space.txt").string(),
                      "--max-rows", "200", "--window", "6", "--max-epochs", "3", "--eta", "3", "--out",
                      (dir / "t").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("wall time") != std::string::npos);
  const auto best = nn::parse_hyper_config(text::read_file(dir / "t" / "best_config.txt"));
  CHECK(best == nn::parse_hyper_config(kTinyConfig));
  const auto plan = tuner::hyperband_schedule(3, 3);
  CHECK(line_count(dir / "t" / "trials.csv") == 1 + tuner::total_trials(plan));
}

TEST_CASE("sweep emits sixteen ordered rows for a single-event dataset") {
  const auto dir = scratch("sweep");
  REQUIRE(run({"generate", "--kind", "2d1a", "--seed", "2", "--out", dir.string()}).code == 0);
  text::write_file(dir / "cfg.txt", kTinyConfig);
  const auto r = run({"sweep", "--data", (dir / "series.csv").string(), "--labels", (dir / "labels.csv").string(),
                      "--config", (dir / "cfg.txt").string(), "--max-epochs", "1", "--out", (dir / "s").string()});
  REQUIRE(r.code == 0);
  const auto csv = text::read_file(dir / "s" / "results.csv");
  const auto lines = text::split(csv, '\n');
  REQUIRE(lines.size() == 18);
  CHECK(lines[0] == "combination,event,precision,recall,f1");
  const std::vector<std::string> order{"Ind-6",  "Ind-12", "Ind-24", "Ind-48", "Ind-72",  "Ind-96",
                                       "Ind-120", "Ind-144", "Maj-6", "Maj-12", "Maj-24", "Maj-48",
                                       "Maj-72", "Maj-96", "Maj-120", "Maj-144"};
  for (std::size_t i = 0; i < order.size(); ++i) CHECK(lines[i + 1].starts_with(order[i] + ",all,"));
}

TEST_CASE("manifest parsing") {
  cli::RunManifest m;
  m.command = "sweep";
  m.args = {{"data", "/x/y.csv"}, {"window", "6,12"}, {"seed", "4"}};
  m.outputs = {"results.csv"};
  const auto parsed = cli::parse_manifest(cli::format_manifest(m));
  CHECK(parsed.command == "sweep");
  CHECK(parsed.outputs == m.outputs);
  const auto args = cli::replay_args(parsed, "/tmp/o");
  CHECK(args.front() == "sweep");
  CHECK(std::count(args.begin(), args.end(), std::string("--window")) == 2);
  CHECK_THROWS(cli::parse_manifest("bogus=1\n"));
}

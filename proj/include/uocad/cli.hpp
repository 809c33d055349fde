#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace uocad::cli {

inline constexpr std::string_view kArtifactVersion = "uocad 0.1.0";
inline constexpr std::string_view kManifestName = "manifest.txt";

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4 };

/// Everything needed to re-run a command: its name and normalized flags
/// (paths made absolute), plus the files it wrote.
struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> args;  ///< flag name without dashes, value
  std::vector<std::string> outputs;                       ///< file names inside the output directory
  std::string version = std::string(kArtifactVersion);

  bool operator==(const RunManifest&) const = default;
};

std::string format_manifest(const RunManifest& manifest);
RunManifest parse_manifest(std::string_view content);

/// Command-line arguments that re-run `manifest`, optionally redirecting
/// the output directory.
std::vector<std::string> replay_args(const RunManifest& manifest, const std::string& out_override = {});

/// Entry point. `args` excludes the program name. Returns an ExitCode.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace uocad::cli

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "uocad/nn/bilstm.hpp"
#include "uocad/nn/hyper_config.hpp"

namespace uocad::nn {

inline constexpr std::string_view kModelFormatHeader = "uocad-bilstm-model 1";

struct StoredModel {
  HyperConfig config;
  ModelParams params;
};

/// Text format: the version header, the config as key=value lines, a
/// `params <count>` line, then one value per line in tensors() order. Values
/// use shortest round-trip formatting, so loading reproduces them exactly.
std::string serialize_model(const HyperConfig& cfg, const ModelParams& params);
StoredModel parse_model(std::string_view content);

void save_model(const std::filesystem::path& path, const HyperConfig& cfg, const ModelParams& params);
StoredModel load_model(const std::filesystem::path& path);

}  // namespace uocad::nn

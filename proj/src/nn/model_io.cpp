#include "uocad/nn/model_io.hpp"

#include "uocad/error.hpp"
#include "uocad/text.hpp"

namespace uocad::nn {

std::string serialize_model(const HyperConfig& cfg, const ModelParams& params) {
  check_shapes(params, cfg);
  std::string out(kModelFormatHeader);
  out += '\n';
  out += to_key_values(cfg);
  out += "params " + std::to_string(params.parameter_count()) + '\n';
  for (const auto& t : tensors(params)) {
    for (const double v : t) {
      out += text::format_double(v);
      out += '\n';
    }
  }
  return out;
}

StoredModel parse_model(std::string_view content) {
  const auto header_end = content.find('\n');
  if (header_end == std::string_view::npos || text::trim(content.substr(0, header_end)) != kModelFormatHeader) {
    throw SchemaError("not a model file (missing '" + std::string(kModelFormatHeader) + "' header)");
  }
  const auto params_pos = content.find("\nparams ", header_end);
  if (params_pos == std::string_view::npos) throw SchemaError("model file has no params section");

  StoredModel model;
  model.config = parse_hyper_config(content.substr(header_end + 1, params_pos - header_end));
  model.params = ModelParams::zeros(model.config);

  const auto count_end = content.find('\n', params_pos + 1);
  const auto count_line = content.substr(params_pos + 8, count_end - params_pos - 8);
  const auto declared = static_cast<std::size_t>(text::parse_int(count_line));
  if (declared != model.params.parameter_count()) {
    throw SchemaError("model declares " + std::to_string(declared) + " parameters, config implies " +
                      std::to_string(model.params.parameter_count()));
  }

  std::size_t pos = count_end == std::string_view::npos ? content.size() : count_end + 1;
  for (auto& t : tensors(model.params)) {
    for (double& v : t) {
      if (pos >= content.size()) throw SchemaError("model file is truncated");
      auto next = content.find('\n', pos);
      if (next == std::string_view::npos) next = content.size();
      v = text::parse_double(content.substr(pos, next - pos));
      pos = next + 1;
    }
  }
  if (pos < content.size() && !text::trim(content.substr(pos)).empty()) {
    throw SchemaError("trailing data after model parameters");
  }
  return model;
}

void save_model(const std::filesystem::path& path, const HyperConfig& cfg, const ModelParams& params) {
  text::write_file(path, serialize_model(cfg, params));
}

StoredModel load_model(const std::filesystem::path& path) { return parse_model(text::read_file(path)); }

}  // namespace uocad::nn

#include "uocad/nn/hyper_config.hpp"

#include <cmath>
#include <sstream>

#include "uocad/error.hpp"
#include "uocad/text.hpp"

namespace uocad::nn {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softmax: return "softmax";
  }
  return "?";
}

std::string_view to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::rmsprop: return "rmsprop";
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::adadelta: return "adadelta";
    case OptimizerKind::adagrad: return "adagrad";
  }
  return "?";
}

Activation parse_activation(std::string_view s) {
  s = text::trim(s);
  for (auto a : {Activation::relu, Activation::leaky_relu, Activation::sigmoid, Activation::softmax}) {
    if (s == to_string(a)) return a;
  }
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}

OptimizerKind parse_optimizer(std::string_view s) {
  s = text::trim(s);
  for (auto k : {OptimizerKind::rmsprop, OptimizerKind::adam, OptimizerKind::adadelta,
                 OptimizerKind::adagrad}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown optimizer '" + std::string(s) + "'");
}

void HyperConfig::validate() const {
  if (units < 1) throw ConfigError("units must be positive");
  if (!std::isfinite(learning_rate) || learning_rate <= 0.0) {
    throw ConfigError("learning_rate must be finite and positive");
  }
  if (num_layers < 1) throw ConfigError("num_layers must be at least 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

std::string to_key_values(const HyperConfig& cfg) {
  std::ostringstream out;
  out << "units=" << cfg.units << '\n'
      << "activation=" << to_string(cfg.activation) << '\n'
      << "learning_rate=" << text::format_double(cfg.learning_rate) << '\n'
      << "optimizer=" << to_string(cfg.optimizer) << '\n'
      << "num_layers=" << cfg.num_layers << '\n'
      << "dropout=" << text::format_double(cfg.dropout) << '\n';
  return out.str();
}

HyperConfig parse_hyper_config(std::string_view content) {
  const auto kv = text::parse_key_values(content);
  auto get = [&](std::string_view key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError("config is missing key '" + std::string(key) + "'");
    return it->second;
  };
  HyperConfig cfg;
  try {
    cfg.units = static_cast<int>(text::parse_int(get("units")));
    cfg.activation = parse_activation(get("activation"));
    cfg.learning_rate = text::parse_double(get("learning_rate"));
    cfg.optimizer = parse_optimizer(get("optimizer"));
    cfg.num_layers = static_cast<int>(text::parse_int(get("num_layers")));
    cfg.dropout = text::parse_double(get("dropout"));
  } catch (const SchemaError& e) {
    throw ConfigError(e.what());
  }
  cfg.validate();
  return cfg;
}

std::string describe(const HyperConfig& cfg) {
  std::ostringstream out;
  out << "units=" << cfg.units << " activation=" << to_string(cfg.activation)
      << " lr=" << text::format_double(cfg.learning_rate) << " optimizer=" << to_string(cfg.optimizer)
      << " layers=" << cfg.num_layers << " dropout=" << text::format_double(cfg.dropout);
  return out.str();
}

}  // namespace uocad::nn

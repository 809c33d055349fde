#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace uocad::nn {

/// Activation applied to the dense head's pre-output.
enum class Activation { relu, leaky_relu, sigmoid, softmax };

enum class OptimizerKind { rmsprop, adam, adadelta, adagrad };

/// Negative-side slope of leaky_relu.
inline constexpr double kLeakyReluSlope = 0.2;

std::string_view to_string(Activation a);
std::string_view to_string(OptimizerKind k);
Activation parse_activation(std::string_view s);
OptimizerKind parse_optimizer(std::string_view s);

/// Architecture and training hyperparameters of the Bi-LSTM forecaster.
/// Member order defines the lexicographic order used for tie-breaking.
struct HyperConfig {
  int units = 32;  ///< hidden size per direction
  Activation activation = Activation::relu;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::adam;
  int num_layers = 2;  ///< stacked Bi-LSTM layers
  double dropout = 0.1;

  /// Throws ConfigError for values outside their structural domain
  /// (units >= 1, finite lr > 0, layers >= 1, dropout in [0, 1)).
  void validate() const;

  auto operator<=>(const HyperConfig&) const = default;
  bool operator==(const HyperConfig&) const = default;
};

/// The configuration reported by the original offline tuning run.
inline constexpr HyperConfig kReferenceTunedConfig{160, Activation::relu, 1e-4, OptimizerKind::adam, 2,
                                              0.2};

/// Flat `key=value` form shared by the tuner output and detector input.
std::string to_key_values(const HyperConfig& cfg);
HyperConfig parse_hyper_config(std::string_view content);

std::string describe(const HyperConfig& cfg);

}  // namespace uocad::nn

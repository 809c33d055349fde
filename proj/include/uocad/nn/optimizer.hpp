#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "uocad/nn/bilstm.hpp"
#include "uocad/nn/hyper_config.hpp"

namespace uocad::nn {

// Constants of the four update rules.
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;
inline constexpr double kRmspropRho = 0.9;
inline constexpr double kRmspropEpsilon = 1e-8;
inline constexpr double kAdagradEpsilon = 1e-8;
inline constexpr double kAdadeltaRho = 0.95;
inline constexpr double kAdadeltaEpsilon = 1e-6;

/// Accumulators for one optimizer over a flat parameter vector. The first
/// step sizes zero-initialized slots to the parameter count.
///
/// slot1: adam first moment, rmsprop/adadelta running E[g^2], adagrad sum g^2
/// slot2: adam second moment, adadelta running E[dx^2]
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::adam;
  std::uint64_t steps = 0;
  std::vector<double> slot1;
  std::vector<double> slot2;

  explicit OptimizerState(OptimizerKind k = OptimizerKind::adam) : kind(k) {}

  bool operator==(const OptimizerState&) const = default;
};

/// Applies one update in place. Throws StructuralError when the state was
/// built for a different optimizer or a different parameter count.
void optimizer_step(OptimizerState& state, std::span<double> params, std::span<const double> grads,
                    OptimizerKind kind, double learning_rate);

/// Same update over every tensor of a model, in declaration order.
void optimizer_step(OptimizerState& state, ModelParams& params, const Gradients& grads,
                    OptimizerKind kind, double learning_rate);

}  // namespace uocad::nn

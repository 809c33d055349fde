#include "uocad/nn/optimizer.hpp"

#include <cmath>
#include <string>

#include "uocad/error.hpp"

namespace uocad::nn {

namespace {

void prepare(OptimizerState& state, std::size_t count, OptimizerKind kind) {
  if (state.kind != kind) {
    throw StructuralError("optimizer state is for " + std::string(to_string(state.kind)) +
                          ", step requested " + std::string(to_string(kind)));
  }
  if (state.steps == 0 && state.slot1.empty()) {
    state.slot1.assign(count, 0.0);
    if (kind == OptimizerKind::adam || kind == OptimizerKind::adadelta) state.slot2.assign(count, 0.0);
  }
  if (state.slot1.size() != count) {
    throw StructuralError("optimizer state holds " + std::to_string(state.slot1.size()) +
                          " slots for " + std::to_string(count) + " parameters");
  }
}

/// Updates params[offset, offset + grads.size()) using slots at the same offset.
void update(OptimizerState& state, std::span<double> params, std::span<const double> grads,
            std::size_t offset, double lr, double adam_correction1, double adam_correction2) {
  double* s1 = state.slot1.data() + offset;
  double* s2 = state.slot2.empty() ? nullptr : state.slot2.data() + offset;
  const std::size_t n = params.size();
  switch (state.kind) {
    case OptimizerKind::adam:
      for (std::size_t k = 0; k < n; ++k) {
        const double g = grads[k];
        s1[k] = kAdamBeta1 * s1[k] + (1.0 - kAdamBeta1) * g;
        s2[k] = kAdamBeta2 * s2[k] + (1.0 - kAdamBeta2) * g * g;
        const double m_hat = s1[k] / adam_correction1;
        const double v_hat = s2[k] / adam_correction2;
        params[k] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
      }
      break;
    case OptimizerKind::rmsprop:
      for (std::size_t k = 0; k < n; ++k) {
        const double g = grads[k];
        s1[k] = kRmspropRho * s1[k] + (1.0 - kRmspropRho) * g * g;
        params[k] -= lr * g / (std::sqrt(s1[k]) + kRmspropEpsilon);
      }
      break;
    case OptimizerKind::adagrad:
      for (std::size_t k = 0; k < n; ++k) {
        const double g = grads[k];
        s1[k] += g * g;
        params[k] -= lr * g / (std::sqrt(s1[k]) + kAdagradEpsilon);
      }
      break;
    case OptimizerKind::adadelta:
      for (std::size_t k = 0; k < n; ++k) {
        const double g = grads[k];
        s1[k] = kAdadeltaRho * s1[k] + (1.0 - kAdadeltaRho) * g * g;
        const double delta =
            -std::sqrt(s2[k] + kAdadeltaEpsilon) / std::sqrt(s1[k] + kAdadeltaEpsilon) * g;
        s2[k] = kAdadeltaRho * s2[k] + (1.0 - kAdadeltaRho) * delta * delta;
        params[k] += lr * delta;
      }
      break;
  }
}

}  // namespace

void optimizer_step(OptimizerState& state, std::span<double> params, std::span<const double> grads,
                    OptimizerKind kind, double learning_rate) {
  if (params.size() != grads.size()) throw StructuralError("parameter/gradient size mismatch");
  prepare(state, params.size(), kind);
  ++state.steps;
  const auto t = static_cast<double>(state.steps);
  update(state, params, grads, 0, learning_rate, 1.0 - std::pow(kAdamBeta1, t),
         1.0 - std::pow(kAdamBeta2, t));
}

void optimizer_step(OptimizerState& state, ModelParams& params, const Gradients& grads,
                    OptimizerKind kind, double learning_rate) {
  auto p = tensors(params);
  const auto g = tensors(grads);
  if (p.size() != g.size()) throw StructuralError("gradient layout does not match parameters");
  std::size_t count = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k].size() != g[k].size()) throw StructuralError("gradient tensor shape mismatch");
    count += p[k].size();
  }
  prepare(state, count, kind);
  ++state.steps;
  const auto t = static_cast<double>(state.steps);
  const double c1 = 1.0 - std::pow(kAdamBeta1, t);
  const double c2 = 1.0 - std::pow(kAdamBeta2, t);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    update(state, p[k], g[k], offset, learning_rate, c1, c2);
    offset += p[k].size();
  }
}

}  // namespace uocad::nn

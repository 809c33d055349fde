#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "uocad/nn/hyper_config.hpp"

namespace uocad::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Output width of the dense head: one prediction per sensor feature.
inline constexpr Eigen::Index kOutputs = 9;
inline constexpr Eigen::Index kInputs = 9;

/// One LSTM direction. Gate blocks are stacked row-wise in the order
/// input, forget, output, candidate; each block has `units` rows.
struct LstmCellParams {
  Matrix input_weights;      ///< 4H x in
  Matrix recurrent_weights;  ///< 4H x H
  Vector bias;               ///< 4H
};

struct BiLstmLayerParams {
  LstmCellParams forward;
  LstmCellParams backward;
};

struct ModelParams {
  std::vector<BiLstmLayerParams> layers;
  Matrix head_weights;  ///< kOutputs x 2H
  Vector head_bias;     ///< kOutputs

  /// All-zero parameters shaped for `cfg`.
  static ModelParams zeros(const HyperConfig& cfg);

  std::size_t parameter_count() const;
};

/// Gradients share the parameter layout.
using Gradients = ModelParams;

/// Views over every parameter array in declaration order: per layer the
/// forward then backward cell (W, U, b), then head weights and bias.
std::vector<std::span<double>> tensors(ModelParams& params);
std::vector<std::span<const double>> tensors(const ModelParams& params);
std::vector<double> flatten(const ModelParams& params);

/// Throws StructuralError if `params` does not match `cfg`.
void check_shapes(const ModelParams& params, const HyperConfig& cfg);

/// Uniform weights in [-1/sqrt(units), 1/sqrt(units)], forget-gate bias 1,
/// all other biases 0. Deterministic in (cfg, seed).
ModelParams init_params(const HyperConfig& cfg, std::uint64_t seed);

struct DirectionCache {
  Matrix gates;      ///< 4H x (n*B), post-activation
  Matrix cells;      ///< H x (n*B)
  Matrix cell_tanh;  ///< H x (n*B)
  Matrix hidden;     ///< H x (n*B)
};

struct LayerCache {
  Matrix input;  ///< in x (n*B), already masked by the previous layer's dropout
  DirectionCache forward;
  DirectionCache backward;
  Matrix output_mask;  ///< 2H x (n*B) inverted-dropout mask; empty when inactive
};

/// Everything backward() needs. Column t*B + b holds time step t of batch
/// element b; backward-direction states are stored at their original time index.
struct ForwardCache {
  std::size_t steps = 0;
  std::size_t batch = 0;
  std::vector<LayerCache> layers;
  Matrix head_input;  ///< 2H x B, [h_fwd(n-1); h_bwd(0)]
  Matrix head_pre;    ///< kOutputs x B
  Matrix predictions; ///< kOutputs x B
};

struct ForwardResult {
  Matrix predictions;  ///< kOutputs x B
  ForwardCache cache;
};

/// Runs the stacked Bi-LSTM over a batch of windows (each n x 9, n >= 2,
/// same n for all). Dropout between layers is active only in train_mode and
/// its masks are drawn from `seed`.
ForwardResult forward(const ModelParams& params, const HyperConfig& cfg,
                      std::span<const Matrix> windows, bool train_mode, std::uint64_t seed);

ForwardResult forward(const ModelParams& params, const HyperConfig& cfg, const Matrix& window,
                      bool train_mode, std::uint64_t seed);

/// Inference-mode prediction for a single window.
Vector predict(const ModelParams& params, const HyperConfig& cfg, const Matrix& window);

double mse_loss(const Eigen::Ref<const Vector>& pred, const Eigen::Ref<const Vector>& target);

/// Mean over batch columns of mse_loss.
double batch_mse(const Matrix& predictions, const Matrix& targets);

/// Exact gradients of loss_scale * batch_mse(predictions, targets) with
/// respect to every parameter.
Gradients backward(const ModelParams& params, const HyperConfig& cfg, const ForwardCache& cache,
                   const Matrix& targets, double loss_scale = 1.0);

}  // namespace uocad::nn

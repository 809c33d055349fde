#include "uocad/nn/bilstm.hpp"

#include <cmath>
#include <string>

#include "uocad/error.hpp"
#include "uocad/rng.hpp"

namespace uocad::nn {

namespace {

LstmCellParams zero_cell(Eigen::Index in, Eigen::Index hidden) {
  return {Matrix::Zero(4 * hidden, in), Matrix::Zero(4 * hidden, hidden), Vector::Zero(4 * hidden)};
}

Eigen::Index layer_input_width(const HyperConfig& cfg, std::size_t layer) {
  return layer == 0 ? kInputs : 2 * static_cast<Eigen::Index>(cfg.units);
}

template <typename Params, typename Span>
std::vector<Span> collect(Params& params) {
  std::vector<Span> out;
  out.reserve(params.layers.size() * 6 + 2);
  auto add = [&out](auto& m) { out.emplace_back(m.data(), static_cast<std::size_t>(m.size())); };
  for (auto& layer : params.layers) {
    for (auto* cell : {&layer.forward, &layer.backward}) {
      add(cell->input_weights);
      add(cell->recurrent_weights);
      add(cell->bias);
    }
  }
  add(params.head_weights);
  add(params.head_bias);
  return out;
}

Matrix sigmoid(const Matrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

void run_direction(const LstmCellParams& p, const Matrix& input, std::size_t steps,
                   std::size_t batch, bool reverse, DirectionCache& c) {
  const Eigen::Index h = p.recurrent_weights.cols();
  const auto b = static_cast<Eigen::Index>(batch);
  const auto cols = input.cols();

  Matrix pre = p.input_weights * input;
  pre.colwise() += p.bias;

  c.gates.resize(4 * h, cols);
  c.cells.resize(h, cols);
  c.cell_tanh.resize(h, cols);
  c.hidden.resize(h, cols);

  Matrix h_prev = Matrix::Zero(h, b);
  Matrix c_prev = Matrix::Zero(h, b);
  Matrix z(4 * h, b);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t t = reverse ? steps - 1 - s : s;
    const Eigen::Index col = static_cast<Eigen::Index>(t) * b;
    z.noalias() = pre.middleCols(col, b);
    z.noalias() += p.recurrent_weights * h_prev;

    auto gates = c.gates.middleCols(col, b);
    gates.topRows(3 * h) = sigmoid(z.topRows(3 * h));
    gates.bottomRows(h) = z.bottomRows(h).array().tanh().matrix();

    const auto i = gates.topRows(h).array();
    const auto f = gates.middleRows(h, h).array();
    const auto o = gates.middleRows(2 * h, h).array();
    const auto g = gates.bottomRows(h).array();

    auto cell = c.cells.middleCols(col, b);
    cell = (f * c_prev.array() + i * g).matrix();
    auto ct = c.cell_tanh.middleCols(col, b);
    ct = cell.array().tanh().matrix();
    auto hid = c.hidden.middleCols(col, b);
    hid = (o * ct.array()).matrix();

    h_prev = hid;
    c_prev = cell;
  }
}

/// Backpropagates d(loss)/d(hidden) through one direction. Accumulates
/// parameter gradients into `grad` and returns d(loss)/d(input).
Matrix backward_direction(const LstmCellParams& p, const Matrix& input, const DirectionCache& c,
                          const Matrix& d_hidden, std::size_t steps, std::size_t batch,
                          bool reverse, LstmCellParams& grad) {
  const Eigen::Index h = p.recurrent_weights.cols();
  const auto b = static_cast<Eigen::Index>(batch);
  const auto cols = input.cols();

  Matrix d_pre(4 * h, cols);
  Matrix h_prev_all = Matrix::Zero(h, cols);
  Matrix dh_next = Matrix::Zero(h, b);
  Matrix dc_next = Matrix::Zero(h, b);

  for (std::size_t s = steps; s-- > 0;) {
    const std::size_t t = reverse ? steps - 1 - s : s;
    const bool has_prev = s > 0;
    const std::size_t tp = reverse ? t + 1 : t - 1;
    const Eigen::Index col = static_cast<Eigen::Index>(t) * b;
    const Eigen::Index pcol = static_cast<Eigen::Index>(tp) * b;

    const auto gates = c.gates.middleCols(col, b);
    const auto i = gates.topRows(h).array();
    const auto f = gates.middleRows(h, h).array();
    const auto o = gates.middleRows(2 * h, h).array();
    const auto g = gates.bottomRows(h).array();
    const auto ct = c.cell_tanh.middleCols(col, b).array();

    const Eigen::ArrayXXd dh = d_hidden.middleCols(col, b).array() + dh_next.array();
    const Eigen::ArrayXXd dc = dc_next.array() + dh * o * (1.0 - ct.square());
    const Eigen::ArrayXXd c_prev =
        has_prev ? Eigen::ArrayXXd(c.cells.middleCols(pcol, b).array()) : Eigen::ArrayXXd::Zero(h, b);

    auto dz = d_pre.middleCols(col, b);
    dz.topRows(h) = (dc * g * i * (1.0 - i)).matrix();
    dz.middleRows(h, h) = (dc * c_prev * f * (1.0 - f)).matrix();
    dz.middleRows(2 * h, h) = (dh * ct * o * (1.0 - o)).matrix();
    dz.bottomRows(h) = (dc * i * (1.0 - g.square())).matrix();

    dc_next = (dc * f).matrix();
    dh_next.noalias() = p.recurrent_weights.transpose() * dz;
    if (has_prev) h_prev_all.middleCols(col, b) = c.hidden.middleCols(pcol, b);
  }

  grad.input_weights.noalias() += d_pre * input.transpose();
  grad.recurrent_weights.noalias() += d_pre * h_prev_all.transpose();
  grad.bias += d_pre.rowwise().sum();
  return p.input_weights.transpose() * d_pre;
}

Matrix apply_head_activation(Activation a, const Matrix& pre) {
  switch (a) {
    case Activation::relu: return pre.cwiseMax(0.0);
    case Activation::leaky_relu:
      return pre.unaryExpr([](double v) { return v > 0.0 ? v : kLeakyReluSlope * v; });
    case Activation::sigmoid: return sigmoid(pre);
    case Activation::softmax: {
      Matrix out(pre.rows(), pre.cols());
      for (Eigen::Index j = 0; j < pre.cols(); ++j) {
        const double peak = pre.col(j).maxCoeff();
        out.col(j) = (pre.col(j).array() - peak).exp().matrix();
        out.col(j) /= out.col(j).sum();
      }
      return out;
    }
  }
  return pre;
}

/// d(loss)/d(pre) from d(loss)/d(output).
Matrix head_activation_backward(Activation a, const Matrix& pre, const Matrix& out,
                                const Matrix& d_out) {
  switch (a) {
    case Activation::relu:
      return (pre.array() > 0.0).cast<double>().matrix().cwiseProduct(d_out);
    case Activation::leaky_relu:
      return pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : kLeakyReluSlope; })
          .cwiseProduct(d_out);
    case Activation::sigmoid:
      return (out.array() * (1.0 - out.array()) * d_out.array()).matrix();
    case Activation::softmax: {
      Matrix d_pre(pre.rows(), pre.cols());
      for (Eigen::Index j = 0; j < pre.cols(); ++j) {
        const double dot = out.col(j).dot(d_out.col(j));
        d_pre.col(j) = (out.col(j).array() * (d_out.col(j).array() - dot)).matrix();
      }
      return d_pre;
    }
  }
  return d_out;
}

void check_windows(std::span<const Matrix> windows) {
  if (windows.empty()) throw StructuralError("forward needs at least one window");
  const auto rows = windows.front().rows();
  if (rows < 2) throw StructuralError("window must have at least 2 rows");
  for (const auto& w : windows) {
    if (w.rows() != rows || w.cols() != kInputs) {
      throw StructuralError("window shape mismatch: expected " + std::to_string(rows) + "x" +
                            std::to_string(kInputs) + ", got " + std::to_string(w.rows()) + "x" +
                            std::to_string(w.cols()));
    }
  }
}

}  // namespace

ModelParams ModelParams::zeros(const HyperConfig& cfg) {
  cfg.validate();
  const auto h = static_cast<Eigen::Index>(cfg.units);
  ModelParams p;
  p.layers.reserve(static_cast<std::size_t>(cfg.num_layers));
  for (std::size_t l = 0; l < static_cast<std::size_t>(cfg.num_layers); ++l) {
    const auto in = layer_input_width(cfg, l);
    p.layers.push_back({zero_cell(in, h), zero_cell(in, h)});
  }
  p.head_weights = Matrix::Zero(kOutputs, 2 * h);
  p.head_bias = Vector::Zero(kOutputs);
  return p;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors(*this)) n += t.size();
  return n;
}

std::vector<std::span<double>> tensors(ModelParams& params) {
  return collect<ModelParams, std::span<double>>(params);
}

std::vector<std::span<const double>> tensors(const ModelParams& params) {
  return collect<const ModelParams, std::span<const double>>(params);
}

std::vector<double> flatten(const ModelParams& params) {
  std::vector<double> flat;
  flat.reserve(params.parameter_count());
  for (const auto& t : tensors(params)) flat.insert(flat.end(), t.begin(), t.end());
  return flat;
}

void check_shapes(const ModelParams& params, const HyperConfig& cfg) {
  const auto h = static_cast<Eigen::Index>(cfg.units);
  if (params.layers.size() != static_cast<std::size_t>(cfg.num_layers)) {
    throw StructuralError("expected " + std::to_string(cfg.num_layers) + " layers, got " +
                          std::to_string(params.layers.size()));
  }
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto in = layer_input_width(cfg, l);
    for (const auto* cell : {&params.layers[l].forward, &params.layers[l].backward}) {
      if (cell->input_weights.rows() != 4 * h || cell->input_weights.cols() != in ||
          cell->recurrent_weights.rows() != 4 * h || cell->recurrent_weights.cols() != h ||
          cell->bias.size() != 4 * h) {
        throw StructuralError("layer " + std::to_string(l) + " cell shape mismatch");
      }
    }
  }
  if (params.head_weights.rows() != kOutputs || params.head_weights.cols() != 2 * h ||
      params.head_bias.size() != kOutputs) {
    throw StructuralError("dense head shape mismatch");
  }
}

ModelParams init_params(const HyperConfig& cfg, std::uint64_t seed) {
  ModelParams p = ModelParams::zeros(cfg);
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.units));
  auto fill = [&](Matrix& m) {
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.uniform(-bound, bound);
  };
  const auto h = static_cast<Eigen::Index>(cfg.units);
  for (auto& layer : p.layers) {
    for (auto* cell : {&layer.forward, &layer.backward}) {
      fill(cell->input_weights);
      fill(cell->recurrent_weights);
      cell->bias.segment(h, h).setOnes();
    }
  }
  fill(p.head_weights);
  return p;
}

ForwardResult forward(const ModelParams& params, const HyperConfig& cfg,
                      std::span<const Matrix> windows, bool train_mode, std::uint64_t seed) {
  check_windows(windows);
  check_shapes(params, cfg);

  const auto steps = static_cast<std::size_t>(windows.front().rows());
  const std::size_t batch = windows.size();
  const auto b = static_cast<Eigen::Index>(batch);
  const auto h = static_cast<Eigen::Index>(cfg.units);
  const auto cols = static_cast<Eigen::Index>(steps) * b;

  ForwardCache cache;
  cache.steps = steps;
  cache.batch = batch;
  cache.layers.resize(params.layers.size());

  Matrix input(kInputs, cols);
  for (std::size_t t = 0; t < steps; ++t) {
    for (Eigen::Index j = 0; j < b; ++j) {
      input.col(static_cast<Eigen::Index>(t) * b + j) =
          windows[static_cast<std::size_t>(j)].row(static_cast<Eigen::Index>(t)).transpose();
    }
  }

  const bool dropout_active = train_mode && cfg.dropout > 0.0;
  Rng rng(seed);
  const double keep_scale = 1.0 / (1.0 - cfg.dropout);

  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    LayerCache& lc = cache.layers[l];
    lc.input = std::move(input);
    run_direction(params.layers[l].forward, lc.input, steps, batch, false, lc.forward);
    run_direction(params.layers[l].backward, lc.input, steps, batch, true, lc.backward);

    if (l + 1 < params.layers.size()) {
      input.resize(2 * h, cols);
      input.topRows(h) = lc.forward.hidden;
      input.bottomRows(h) = lc.backward.hidden;
      if (dropout_active) {
        lc.output_mask.resize(2 * h, cols);
        for (Eigen::Index k = 0; k < lc.output_mask.size(); ++k) {
          lc.output_mask.data()[k] = rng.uniform() < cfg.dropout ? 0.0 : keep_scale;
        }
        input.array() *= lc.output_mask.array();
      }
    }
  }

  const LayerCache& last = cache.layers.back();
  cache.head_input.resize(2 * h, b);
  cache.head_input.topRows(h) = last.forward.hidden.middleCols(static_cast<Eigen::Index>(steps - 1) * b, b);
  cache.head_input.bottomRows(h) = last.backward.hidden.middleCols(0, b);
  cache.head_pre = params.head_weights * cache.head_input;
  cache.head_pre.colwise() += params.head_bias;
  cache.predictions = apply_head_activation(cfg.activation, cache.head_pre);

  ForwardResult result;
  result.predictions = cache.predictions;
  result.cache = std::move(cache);
  return result;
}

ForwardResult forward(const ModelParams& params, const HyperConfig& cfg, const Matrix& window,
                      bool train_mode, std::uint64_t seed) {
  return forward(params, cfg, std::span<const Matrix>(&window, 1), train_mode, seed);
}

Vector predict(const ModelParams& params, const HyperConfig& cfg, const Matrix& window) {
  return forward(params, cfg, window, false, 0).predictions.col(0);
}

double mse_loss(const Eigen::Ref<const Vector>& pred, const Eigen::Ref<const Vector>& target) {
  if (pred.size() != target.size() || pred.size() == 0) {
    throw StructuralError("mse_loss needs equal, nonempty vectors");
  }
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

double batch_mse(const Matrix& predictions, const Matrix& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols() ||
      predictions.size() == 0) {
    throw StructuralError("batch_mse shape mismatch");
  }
  double total = 0.0;
  for (Eigen::Index j = 0; j < predictions.cols(); ++j) {
    total += mse_loss(predictions.col(j), targets.col(j));
  }
  return total / static_cast<double>(predictions.cols());
}

Gradients backward(const ModelParams& params, const HyperConfig& cfg, const ForwardCache& cache,
                   const Matrix& targets, double loss_scale) {
  check_shapes(params, cfg);
  const auto b = static_cast<Eigen::Index>(cache.batch);
  if (targets.rows() != kOutputs || targets.cols() != b || cache.layers.size() != params.layers.size()) {
    throw StructuralError("backward: targets or cache do not match the forward pass");
  }
  const auto h = static_cast<Eigen::Index>(cfg.units);
  const auto steps = cache.steps;
  const auto cols = static_cast<Eigen::Index>(steps) * b;

  Gradients grad = ModelParams::zeros(cfg);

  const double scale = loss_scale * 2.0 / static_cast<double>(kOutputs * b);
  const Matrix d_out = scale * (cache.predictions - targets);
  const Matrix d_pre = head_activation_backward(cfg.activation, cache.head_pre, cache.predictions, d_out);
  grad.head_weights.noalias() = d_pre * cache.head_input.transpose();
  grad.head_bias = d_pre.rowwise().sum();
  const Matrix d_head_input = params.head_weights.transpose() * d_pre;

  Matrix d_fwd = Matrix::Zero(h, cols);
  Matrix d_bwd = Matrix::Zero(h, cols);
  d_fwd.middleCols(static_cast<Eigen::Index>(steps - 1) * b, b) = d_head_input.topRows(h);
  d_bwd.middleCols(0, b) = d_head_input.bottomRows(h);

  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const LayerCache& lc = cache.layers[l];
    const auto& lp = params.layers[l];
    auto& lg = grad.layers[l];
    Matrix d_input =
        backward_direction(lp.forward, lc.input, lc.forward, d_fwd, steps, cache.batch, false, lg.forward);
    d_input += backward_direction(lp.backward, lc.input, lc.backward, d_bwd, steps, cache.batch, true,
                                  lg.backward);
    if (l == 0) break;
    const LayerCache& below = cache.layers[l - 1];
    if (below.output_mask.size() != 0) d_input.array() *= below.output_mask.array();
    d_fwd = d_input.topRows(h);
    d_bwd = d_input.bottomRows(h);
  }
  return grad;
}

}  // namespace uocad::nn

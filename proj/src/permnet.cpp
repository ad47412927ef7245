#include "mocap/permnet.hpp"

#include <cmath>
#include <random>
#include <string>

namespace mocap {

void NetworkConfig::validate() const {
  if (n_markers < 2) fail(ErrorKind::argument, "n_markers must be >= 2");
  if (hidden_width < 1) fail(ErrorKind::argument, "hidden_width must be >= 1");
  if (n_residual_blocks < 0) fail(ErrorKind::argument, "n_residual_blocks must be >= 0");
  if (layers_per_block < 1) fail(ErrorKind::argument, "layers_per_block must be >= 1");
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) {
    fail(ErrorKind::argument, "leaky_slope must lie in [0, 1)");
  }
}

namespace {

std::vector<std::pair<int, int>> layer_shapes(const NetworkConfig& cfg) {
  std::vector<std::pair<int, int>> shapes;  // (out, in)
  shapes.emplace_back(cfg.hidden_width, cfg.input_size());
  for (int b = 0; b < cfg.n_residual_blocks * cfg.layers_per_block; ++b) {
    shapes.emplace_back(cfg.hidden_width, cfg.hidden_width);
  }
  shapes.emplace_back(cfg.output_size(), cfg.hidden_width);
  return shapes;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Network Network::zeros(const NetworkConfig& cfg) {
  cfg.validate();
  Network net;
  net.config_ = cfg;
  for (auto [out, in] : layer_shapes(cfg)) {
    net.layers_.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
  }
  return net;
}

Network Network::initialize(const NetworkConfig& cfg) {
  Network net = zeros(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t l = 0; l < net.layers_.size(); ++l) {
    Eigen::MatrixXd& w = net.layers_[l].weight;
    const double fan_in = static_cast<double>(w.cols());
    const bool last = l + 1 == net.layers_.size();
    // The sigmoid output layer gets unit-variance (LeCun) scaling.
    const double stddev = std::sqrt((last ? 1.0 : 2.0) / fan_in);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = stddev * normal(rng);
    }
  }
  return net;
}

std::string Network::layer_name(std::size_t index) const {
  if (index == 0) return "input";
  if (index + 1 == layers_.size()) return "output";
  const std::size_t hidden = index - 1;
  const auto per_block = static_cast<std::size_t>(config_.layers_per_block);
  return "block" + std::to_string(hidden / per_block) + ".layer" +
         std::to_string(hidden % per_block);
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

void Network::validate_shapes() const {
  config_.validate();
  const auto shapes = layer_shapes(config_);
  if (shapes.size() != layers_.size()) {
    fail(ErrorKind::dimension, "network has " + std::to_string(layers_.size()) +
                                   " layers, config implies " + std::to_string(shapes.size()));
  }
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    const auto [out, in] = shapes[l];
    if (layers_[l].weight.rows() != out || layers_[l].weight.cols() != in ||
        layers_[l].bias.size() != out) {
      fail(ErrorKind::dimension, "layer " + layer_name(l) + " has inconsistent shape");
    }
  }
}

bool operator==(const Network& a, const Network& b) {
  if (!(a.config_ == b.config_) || a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    const auto& x = a.layers_[l];
    const auto& y = b.layers_[l];
    if (x.weight.rows() != y.weight.rows() || x.weight.cols() != y.weight.cols() ||
        x.bias.size() != y.bias.size() || x.weight != y.weight || x.bias != y.bias) {
      return false;
    }
  }
  return true;
}

Eigen::VectorXd flatten_frame(const MarkerFrame& frame) {
  frame.validate();
  Eigen::VectorXd flat(3 * static_cast<Eigen::Index>(frame.size()));
  for (std::size_t k = 0; k < frame.size(); ++k) {
    const Vec3& p = frame.occluded[k] ? kOcclusionPlaceholder : frame.positions[k];
    flat.segment<3>(3 * static_cast<Eigen::Index>(k)) = p;
  }
  return flat;
}

ForwardResult forward(const Network& net, const Eigen::MatrixXd& inputs) {
  const NetworkConfig& cfg = net.config();
  if (inputs.rows() != cfg.input_size() || inputs.cols() == 0) {
    fail(ErrorKind::dimension, "forward: expected " + std::to_string(cfg.input_size()) +
                                   " inputs per item, got " + std::to_string(inputs.rows()) +
                                   " x " + std::to_string(inputs.cols()));
  }
  const auto& layers = net.layers();
  const double slope = cfg.leaky_slope;
  auto leaky = [slope](double z) { return z > 0.0 ? z : slope * z; };

  ForwardResult result;
  NetworkTape& tape = result.tape;
  tape.inputs.reserve(layers.size());
  tape.pre_activation.reserve(layers.size());

  auto dense = [&](std::size_t l, const Eigen::MatrixXd& a) {
    Eigen::MatrixXd z(layers[l].weight.rows(), a.cols());
    z.noalias() = layers[l].weight * a;
    z.colwise() += layers[l].bias;
    if (!z.allFinite()) {
      fail(ErrorKind::numeric, "non-finite activation in layer " + std::to_string(l) + " (" +
                                   net.layer_name(l) + ")");
    }
    tape.inputs.push_back(a);
    tape.pre_activation.push_back(z);
    return z;
  };

  Eigen::MatrixXd hidden = dense(0, inputs).unaryExpr(leaky);
  std::size_t l = 1;
  for (int b = 0; b < cfg.n_residual_blocks; ++b) {
    const Eigen::MatrixXd skip = hidden;
    for (int k = 0; k < cfg.layers_per_block; ++k, ++l) {
      hidden = dense(l, hidden).unaryExpr(leaky);
    }
    hidden += skip;
  }
  tape.output = dense(l, hidden).unaryExpr([](double z) { return sigmoid(z); });

  const Eigen::Index n = cfg.n_markers;
  result.scores.reserve(static_cast<std::size_t>(inputs.cols()));
  for (Eigen::Index c = 0; c < inputs.cols(); ++c) {
    // Output unit i * N + j holds entry (i, j).
    result.scores.emplace_back(Eigen::Map<const SquareMatrix>(tape.output.col(c).data(), n, n));
  }
  return result;
}

SquareMatrix forward(const Network& net, const Eigen::VectorXd& frame_flat) {
  const NetworkConfig& cfg = net.config();
  if (frame_flat.size() != cfg.input_size()) {
    fail(ErrorKind::dimension, "forward: expected " + std::to_string(cfg.input_size()) +
                                   " inputs, got " + std::to_string(frame_flat.size()));
  }
  // Inference path: no tape, one matrix-vector product per layer.
  const auto& layers = net.layers();
  const double slope = cfg.leaky_slope;
  auto dense = [&](std::size_t l, const Eigen::VectorXd& a) {
    Eigen::VectorXd z = layers[l].bias;
    z.noalias() += layers[l].weight * a;
    if (!z.allFinite()) {
      fail(ErrorKind::numeric, "non-finite activation in layer " + std::to_string(l) + " (" +
                                   net.layer_name(l) + ")");
    }
    return z;
  };
  auto leaky = [slope](double z) { return z > 0.0 ? z : slope * z; };

  Eigen::VectorXd hidden = dense(0, frame_flat).unaryExpr(leaky);
  std::size_t l = 1;
  for (int b = 0; b < cfg.n_residual_blocks; ++b) {
    Eigen::VectorXd h = hidden;
    for (int k = 0; k < cfg.layers_per_block; ++k, ++l) h = dense(l, h).unaryExpr(leaky);
    hidden += h;
  }
  const Eigen::VectorXd out = dense(l, hidden).unaryExpr([](double z) { return sigmoid(z); });
  const Eigen::Index n = cfg.n_markers;
  return Eigen::Map<const SquareMatrix>(out.data(), n, n);
}

double column_cross_entropy(const SquareMatrix& dsm, const Permutation& target) {
  double loss = 0.0;
  for (std::size_t j = 0; j < target.size(); ++j) {
    loss -= std::log(std::max(dsm(target[j], static_cast<Eigen::Index>(j)), kLogFloor));
  }
  return loss / static_cast<double>(target.size());
}

namespace {

Eigen::MatrixXd stack_inputs(const Network& net, std::span<const TrainingExample> batch) {
  const NetworkConfig& cfg = net.config();
  Eigen::MatrixXd inputs(cfg.input_size(), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (batch[b].frame.size() != static_cast<std::size_t>(cfg.n_markers) ||
        batch[b].target.size() != static_cast<std::size_t>(cfg.n_markers)) {
      fail(ErrorKind::dimension, "example " + std::to_string(b) + " does not have " +
                                     std::to_string(cfg.n_markers) + " markers");
    }
    inputs.col(static_cast<Eigen::Index>(b)) = flatten_frame(batch[b].frame);
  }
  return inputs;
}

}  // namespace

LossResult loss_and_gradients(const Network& net, std::span<const TrainingExample> batch,
                              const SinkhornConfig& sinkhorn_cfg) {
  if (batch.empty()) fail(ErrorKind::argument, "loss_and_gradients: empty batch");
  const NetworkConfig& cfg = net.config();
  const Eigen::Index n = cfg.n_markers;
  const auto batch_size = static_cast<Eigen::Index>(batch.size());
  ForwardResult fwd = forward(net, stack_inputs(net, batch));

  LossResult result;
  // Gradient with respect to the pre-sigmoid outputs, one column per item.
  Eigen::MatrixXd delta(cfg.output_size(), batch_size);
  const double scale = 1.0 / (static_cast<double>(batch_size) * static_cast<double>(n));
  for (Eigen::Index b = 0; b < batch_size; ++b) {
    const SinkhornResult sk = sinkhorn_forward(fwd.scores[b], sinkhorn_cfg);
    const Permutation& target = batch[b].target;
    SquareMatrix grad_dsm = SquareMatrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double p = sk.dsm(target[j], j);
      if (p < kLogFloor) {
        ++result.clamped;
        result.loss -= std::log(kLogFloor) * scale;
      } else {
        result.loss -= std::log(p) * scale;
        grad_dsm(target[j], j) = -scale / p;
      }
    }
    const SquareMatrix grad_scores = sinkhorn_backward(sk.tape, grad_dsm);
    const auto s = fwd.tape.output.col(b).array();
    delta.col(b) =
        Eigen::Map<const Eigen::VectorXd>(grad_scores.data(), n * n).array() * s * (1.0 - s);
  }

  const auto& layers = net.layers();
  const double slope = cfg.leaky_slope;
  result.grads.resize(layers.size());
  auto backprop_dense = [&](std::size_t l, const Eigen::MatrixXd& dz) {
    result.grads[l].weight.noalias() = dz * fwd.tape.inputs[l].transpose();
    result.grads[l].bias = dz.rowwise().sum();
    Eigen::MatrixXd da(layers[l].weight.cols(), dz.cols());
    da.noalias() = layers[l].weight.transpose() * dz;
    return da;
  };
  auto leaky_grad = [&](std::size_t l, const Eigen::MatrixXd& da) {
    return da.cwiseProduct(
        fwd.tape.pre_activation[l].unaryExpr([slope](double z) { return z > 0.0 ? 1.0 : slope; }));
  };

  std::size_t l = layers.size() - 1;
  Eigen::MatrixXd grad_hidden = backprop_dense(l, delta);
  for (int b = cfg.n_residual_blocks - 1; b >= 0; --b) {
    const Eigen::MatrixXd skip_grad = grad_hidden;
    for (int k = cfg.layers_per_block - 1; k >= 0; --k) {
      --l;
      grad_hidden = backprop_dense(l, leaky_grad(l, grad_hidden));
    }
    grad_hidden += skip_grad;
  }
  --l;
  backprop_dense(l, leaky_grad(l, grad_hidden));
  return result;
}

double evaluate_loss(const Network& net, std::span<const TrainingExample> examples,
                     const SinkhornConfig& sinkhorn_cfg, std::size_t chunk) {
  if (examples.empty()) fail(ErrorKind::argument, "evaluate_loss: no examples");
  double total = 0.0;
  for (std::size_t start = 0; start < examples.size(); start += chunk) {
    const auto part = examples.subspan(start, std::min(chunk, examples.size() - start));
    const ForwardResult fwd = forward(net, stack_inputs(net, part));
    for (std::size_t b = 0; b < part.size(); ++b) {
      total += column_cross_entropy(sinkhorn(fwd.scores[b], sinkhorn_cfg), part[b].target);
    }
  }
  return total / static_cast<double>(examples.size());
}

}  // namespace mocap

#pragma once

// The learnable scoring network: a residual feed-forward net mapping a
// normalized frame to an N x N matrix in (0, 1), trained through Sinkhorn
// normalization with a column-wise cross-entropy loss.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mocap/core.hpp"
#include "mocap/sinkhorn.hpp"

namespace mocap {

struct NetworkConfig {
  int n_markers = 41;
  int hidden_width = 1024;
  int n_residual_blocks = 3;
  int layers_per_block = 3;
  double leaky_slope = 0.01;
  std::uint64_t seed = 0;

  int input_size() const { return 3 * n_markers; }
  int output_size() const { return n_markers * n_markers; }
  /// Number of dense layers: input + blocks + output.
  int layer_count() const { return 2 + n_residual_blocks * layers_per_block; }
  void validate() const;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// Weights of the scoring network. Layer 0 maps the 3N inputs to the hidden
/// width, then come n_residual_blocks * layers_per_block hidden layers, and
/// the last layer maps to N^2 sigmoid outputs.
class Network {
 public:
  Network() = default;

  /// He-scaled normal weights drawn from cfg.seed, zero biases.
  static Network initialize(const NetworkConfig& cfg);
  static Network zeros(const NetworkConfig& cfg);

  const NetworkConfig& config() const noexcept { return config_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

  /// Stable tensor names, e.g. "input.weight", "block1.layer2.bias".
  std::string layer_name(std::size_t index) const;
  std::size_t parameter_count() const;

  /// Throws ErrorKind::dimension if any layer shape disagrees with config.
  void validate_shapes() const;

  friend bool operator==(const Network& a, const Network& b);

 private:
  NetworkConfig config_;
  std::vector<DenseLayer> layers_;
};

/// Same shapes as the network layers.
using Gradients = std::vector<DenseLayer>;

/// Marker-major flattening (x0, y0, z0, x1, ...). Occluded markers enter as
/// the placeholder position.
Eigen::VectorXd flatten_frame(const MarkerFrame& frame);

/// Activations of a batched forward pass (one column per batch item).
struct NetworkTape {
  std::vector<Eigen::MatrixXd> inputs;       // input to each dense layer
  std::vector<Eigen::MatrixXd> pre_activation;
  Eigen::MatrixXd output;                    // sigmoid outputs, N^2 x B
};

struct ForwardResult {
  /// Unconstrained score matrices in (0, 1), one per batch item.
  std::vector<SquareMatrix> scores;
  NetworkTape tape;
};

/// Batched forward pass; `inputs` is 3N x B. Throws ErrorKind::dimension on
/// shape mismatch and ErrorKind::numeric (naming the layer) on a non-finite
/// activation.
ForwardResult forward(const Network& net, const Eigen::MatrixXd& inputs);

/// Single-frame forward pass.
SquareMatrix forward(const Network& net, const Eigen::VectorXd& frame_flat);

/// Probability floor inside the log of the loss.
inline constexpr double kLogFloor = 1e-12;

struct LossResult {
  double loss = 0.0;
  Gradients grads;
  /// Target entries that fell below kLogFloor and were clamped.
  std::size_t clamped = 0;
};

/// Mean over batch items and markers j of -log D[target[j], j], where D is
/// the Sinkhorn output, with gradients for every layer.
LossResult loss_and_gradients(const Network& net, std::span<const TrainingExample> batch,
                              const SinkhornConfig& sinkhorn_cfg);

/// Loss only, evaluated in fixed-size chunks.
double evaluate_loss(const Network& net, std::span<const TrainingExample> examples,
                     const SinkhornConfig& sinkhorn_cfg, std::size_t chunk = 256);

/// Column-wise cross-entropy of one DSM against the marker labels.
double column_cross_entropy(const SquareMatrix& dsm, const Permutation& target);

}  // namespace mocap

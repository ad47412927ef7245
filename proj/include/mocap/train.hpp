#pragma once

// Adam training loop with validation-driven learning-rate halving.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mocap/permnet.hpp"
#include "mocap/sinkhorn.hpp"

namespace mocap {

struct TrainConfig {
  int batch_size = 32;
  double lr_initial = 5e-5;
  /// Applied after an epoch whose validation loss exceeds the previous one.
  double lr_decay_factor = 0.5;
  int epochs = 100;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double learning_rate = 0.0;
  std::size_t clamped = 0;
};

struct TrainingMeta {
  int epochs_run = 0;
  int best_epoch = -1;
  double best_val_loss = 0.0;
  std::string dataset_fingerprint;
  std::vector<std::string> train_subjects;
  std::vector<EpochLog> log;
};

/// Next learning rate given the last two validation losses.
double scheduled_learning_rate(double lr, double previous_val_loss, double val_loss,
                               double decay_factor);

/// Adam moments for every layer.
class AdamState {
 public:
  AdamState(const Network& net, const TrainConfig& cfg);
  void step(Network& net, const Gradients& grads, double lr);

 private:
  Gradients m_;
  Gradients v_;
  double beta1_, beta2_, eps_;
  long step_count_ = 0;
};

struct TrainResult {
  Network best;  // weights with the lowest validation loss
  TrainingMeta meta;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Trains a freshly initialized network. Batches are drawn from a per-epoch
/// shuffle seeded by cfg.seed; the batch gradient is a sum in fixed item
/// order, so a seed fully determines the result. Throws ErrorKind::argument
/// on empty datasets and ErrorKind::numeric (with epoch and batch) on a
/// non-finite loss.
TrainResult train(std::span<const TrainingExample> train_set,
                  std::span<const TrainingExample> val_set, const NetworkConfig& net_cfg,
                  const TrainConfig& train_cfg, const SinkhornConfig& sinkhorn_cfg,
                  const EpochCallback& on_epoch = {});

}  // namespace mocap

#include "mocap/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace mocap {

void TrainConfig::validate() const {
  if (batch_size < 1) fail(ErrorKind::argument, "batch_size must be positive");
  if (!(lr_initial > 0.0)) fail(ErrorKind::argument, "lr_initial must be positive");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor < 1.0)) {
    fail(ErrorKind::argument, "lr_decay_factor must lie in (0, 1)");
  }
  if (epochs < 1) fail(ErrorKind::argument, "epochs must be positive");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0 && adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
    fail(ErrorKind::argument, "adam betas must lie in (0, 1)");
  }
  if (!(adam_eps > 0.0)) fail(ErrorKind::argument, "adam_eps must be positive");
}

double scheduled_learning_rate(double lr, double previous_val_loss, double val_loss,
                               double decay_factor) {
  return val_loss > previous_val_loss ? lr * decay_factor : lr;
}

AdamState::AdamState(const Network& net, const TrainConfig& cfg)
    : beta1_(cfg.adam_beta1), beta2_(cfg.adam_beta2), eps_(cfg.adam_eps) {
  for (const auto& layer : net.layers()) {
    DenseLayer zero{Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                    Eigen::VectorXd::Zero(layer.bias.size())};
    m_.push_back(zero);
    v_.push_back(std::move(zero));
  }
}

void AdamState::step(Network& net, const Gradients& grads, double lr) {
  ++step_count_;
  const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
  const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
  const double step_size = lr / correction1;
  const double sqrt_c2 = std::sqrt(correction2);
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseAbs2();
    param.array() -= step_size * m.array() / (v.array().sqrt() / sqrt_c2 + eps_);
  };
  auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight, m_[l].weight, v_[l].weight, grads[l].weight);
    update(layers[l].bias, m_[l].bias, v_[l].bias, grads[l].bias);
  }
}

TrainResult train(std::span<const TrainingExample> train_set,
                  std::span<const TrainingExample> val_set, const NetworkConfig& net_cfg,
                  const TrainConfig& train_cfg, const SinkhornConfig& sinkhorn_cfg,
                  const EpochCallback& on_epoch) {
  train_cfg.validate();
  sinkhorn_cfg.validate();
  if (train_set.empty()) fail(ErrorKind::argument, "train: empty training set");
  if (val_set.empty()) fail(ErrorKind::argument, "train: empty validation set");

  Network net = Network::initialize(net_cfg);
  AdamState adam(net, train_cfg);
  std::mt19937_64 rng(train_cfg.seed);

  TrainResult result;
  result.best = net;
  result.meta.best_val_loss = std::numeric_limits<double>::infinity();
  double lr = train_cfg.lr_initial;
  double previous_val = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<TrainingExample> batch;
  batch.reserve(static_cast<std::size_t>(train_cfg.batch_size));

  for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochLog log;
    log.epoch = epoch;
    log.learning_rate = lr;
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(train_cfg.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(train_cfg.batch_size));
      batch.clear();
      for (std::size_t k = start; k < stop; ++k) batch.push_back(train_set[order[k]]);
      LossResult r;
      try {
        r = loss_and_gradients(net, batch, sinkhorn_cfg);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::numeric) throw;
        fail(ErrorKind::numeric, std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                                     ", batch " + std::to_string(batches));
      }
      if (!std::isfinite(r.loss)) {
        fail(ErrorKind::numeric, "non-finite loss at epoch " + std::to_string(epoch) +
                                     ", batch " + std::to_string(batches));
      }
      adam.step(net, r.grads, lr);
      loss_sum += r.loss;
      log.clamped += r.clamped;
      ++batches;
    }
    log.train_loss = loss_sum / static_cast<double>(batches);
    log.val_loss = evaluate_loss(net, val_set, sinkhorn_cfg);
    if (!std::isfinite(log.val_loss)) {
      fail(ErrorKind::numeric, "non-finite validation loss at epoch " + std::to_string(epoch));
    }
    if (log.val_loss < result.meta.best_val_loss) {
      result.meta.best_val_loss = log.val_loss;
      result.meta.best_epoch = epoch;
      result.best = net;
    }
    lr = scheduled_learning_rate(lr, previous_val, log.val_loss, train_cfg.lr_decay_factor);
    previous_val = log.val_loss;
    result.meta.log.push_back(log);
    result.meta.epochs_run = epoch + 1;
    if (on_epoch) on_epoch(log);
  }
  return result;
}

}  // namespace mocap

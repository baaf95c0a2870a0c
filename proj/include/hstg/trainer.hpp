#pragma once

#include <span>
#include <string>
#include <vector>

#include "hstg/model.hpp"

namespace hstg {

struct TrainConfig {
  int batch_size = 64;
  int epochs = 30;
  double lr_max = 0.5;
  double lr_min = 0.0;
  double momentum = 0.9;  // beta
  uint64_t seed = 1;
};

/// Mean over windows of the per-window element-mean squared error.
double mse_loss(const Tensor& pred, const Tensor& target);
double mse_loss(std::span<const Tensor> preds, std::span<const Tensor> targets);

/// lr_min + 0.5 (lr_max - lr_min) (1 + cos(pi epoch / total)).
double cosine_lr(int epoch, int total_epochs, double lr_max, double lr_min = 0.0);

/// Classical momentum: v' = beta v + g; p' = p - lr v'.
void sgd_step(std::span<double> params, std::span<const double> grads,
              std::span<double> velocity, double lr, double beta);

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double loss_low = 0.0;
  double loss_high = 0.0;
};

struct Checkpoint {
  std::string group_id;
  TrainConfig train_config;
  ModelParams low;
  ModelParams high;
  double final_loss_low = 0.0;
  double final_loss_high = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochStats> history;
};

/// Trains the two predictors separately on their window sets (shuffled
/// mini-batches, seeded, deterministic). Throws EmptyDataset when either
/// level has no windows.
TrainResult train(std::span<const WindowSample> low_windows,
                  std::span<const WindowSample> high_windows,
                  const ModelConfig& low_cfg, const ModelConfig& high_cfg,
                  const TrainConfig& cfg, const std::string& group_id);

// Text checkpoint: "HSTGCNN-CKPT v1" header, key/value metadata, then one
// named tensor block per parameter tensor at 17 significant digits.
// Round-trips bit-exactly.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hstg

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

#include "rog/model/network.hpp"
#include "rog/training/augment.hpp"

namespace rog::training {

enum class Selection { kCleanDice, kRobustDice };

struct FreeAtConfig {
  bool enabled = false;
  double eps = 8.0 / 255.0;  // attack-space radius
  int replays = 5;           // m
  // Checkpoint criterion when eps > 0. Robust: validation Dice under a
  // 5-step sign-gradient attack at eps.
  Selection select = Selection::kRobustDice;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-5;
  double plateau_factor = 0.5;
  int plateau_patience = 50;
  int epochs = 200;
  int batch_size = 2;
  int batches_per_epoch = 0;  // 0: one pass worth of patches over the training cases
  double fg_patch_prob = 0.5;
  AugmentPolicy augment;
  FreeAtConfig free_at;
  std::uint64_t seed = 0;
  bool restore_best = true;

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_dice = 0.0;
  double val_robust_dice = -1.0;  // negative when not measured
};

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = -1;
  double best_val_dice = 0.0;
  long optimizer_steps = 0;
};

struct TrainHooks {
  std::filesystem::path best_checkpoint;  // written whenever validation Dice improves
  std::function<void(const EpochLog&)> on_epoch;
  std::function<void(const Tensor& delta)> on_perturbation;  // after every update of delta
};

TrainResult train_standard(model::RogNet& net, std::span<const volumes::Case> train,
                           std::span<const volumes::Case> val, const volumes::TaskSpec& task, const TrainConfig& cfg,
                           const TrainHooks& hooks = {});

// Replays every batch free_at.replays times, sharing each backward pass
// between the weight update and the perturbation update; runs
// epochs / replays epochs.
TrainResult train_free_adv(model::RogNet& net, std::span<const volumes::Case> train,
                           std::span<const volumes::Case> val, const volumes::TaskSpec& task, const TrainConfig& cfg,
                           const TrainHooks& hooks = {});

// Mean Dice of predict_case over the cases (post-processing when the task
// allows it).
double evaluate_dice(const model::RogNet& net, std::span<const volumes::Case> cases, const volumes::TaskSpec& task);

void write_log_csv(std::ostream& os, const std::vector<EpochLog>& log);

}  // namespace rog::training

#pragma once

// Per-network training loop: Adam, flip augmentation, random multi-loss,
// cosine phase switching to step phase on the plateau trigger.

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "nnkit/data.hpp"
#include "nnkit/losses.hpp"
#include "nnkit/model.hpp"
#include "nnkit/schedule.hpp"

namespace nnkit {

struct TrainConfig {
  std::size_t batch_size = 128; // shrunk automatically for smaller datasets
  std::size_t max_epochs = 30;

  double beta1 = 0.9, beta2 = 0.999, eps_adam = 1e-8;

  double lr1 = 3e-4;              // phase 1: cosine annealing
  std::size_t cosine_period = 0;  // 0 means max_epochs
  double lr_min = 0.0;
  double lr2 = 1e-5;              // phase 2: step decay
  double step_gamma = 0.9;
  std::size_t step_interval = 5;

  std::size_t plateau_window = 5;
  double plateau_loss_tol = 0.01;
  double plateau_acc_tol = 0.005;

  double flip_prob = 0.5;
  LossPolicy policy{{{LossKind::LSR, 0.8}, {LossKind::CE, 0.2}}, 0.1, {}, 0};
  std::uint64_t seed = 0;

  /// Stop once the phase-2 plateau fires (the first plateau only switches
  /// the learning-rate phase). Used when training "to plateau" under a cap.
  bool stop_on_plateau = false;

  void validate() const;
};

struct EpochStats {
  double loss = 0.0;      // mean over samples, augmented batches
  double accuracy = 0.0;  // on the same augmented batches
  double lr = 0.0;
  std::array<std::size_t, 3> loss_tally{}; // draws of CE / WCE / LSR
};

constexpr std::size_t kNoSwitch = std::numeric_limits<std::size_t>::max();

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t switch_epoch = kNoSwitch; // first epoch trained with lr2
  bool plateaued = false;               // phase-2 plateau fired
  std::string checkpoint_path;
};

/// Runs shuffled mini-batch epochs on `state`. Deterministic for a fixed
/// (config, seed); the data-order stream and the loss-policy stream are
/// separate, so changing the policy never perturbs shuffling or flips.
TrainReport train(NetworkState &state, const DatasetBundle &data, const TrainConfig &cfg);

struct EvalResult {
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;
  std::vector<std::vector<double>> confusion; // row = true class, fractions
  Tensor logits;                              // [N, C]
  std::vector<std::uint16_t> predicted;
};

/// Flip-free evaluation. Confusion rows are fractions of each true class.
EvalResult evaluate(const NetworkState &state, const DatasetBundle &data);

/// Member-specific derivation of seeds for multi-network runs.
TrainConfig config_for_member(const TrainConfig &base, std::size_t member_index);

/// Trains each state under config_for_member(cfg, k). `parallel` caps the
/// number of concurrent workers; kernels drop to one thread per worker so
/// results match the serial schedule bit for bit.
std::vector<TrainReport> train_population(std::vector<NetworkState> &states,
                                          const DatasetBundle &data, const TrainConfig &cfg,
                                          std::size_t parallel);

} // namespace nnkit

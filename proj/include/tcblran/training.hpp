#pragma once

#include "tcblran/datagen.hpp"
#include "tcblran/losses.hpp"

#include <cstdint>
#include <iosfwd>

namespace tcblran {

struct TrainerConfig {
  double lr0 = 0.01;
  double lr_decay = 0.5;
  std::vector<std::size_t> milestones{30, 100, 200, 400};
  double weight_decay = 0.1;
  double grad_clip = 0.05;
  std::size_t epochs = 600;
  std::uint64_t seed = 0;

  void validate() const;
};

/// lr0 * lr_decay^(number of milestones <= epoch).
double lr_at_epoch(const TrainerConfig& config, std::size_t epoch);

double global_norm(const std::vector<Matrix>& tensors);

/// Rescales all gradients jointly so that their concatenated 2-norm is at
/// most max_norm. Returns the norm before clipping.
double clip_gradients(std::vector<Matrix>& grads, double max_norm);

struct AdamState {
  static constexpr double beta1 = 0.9;
  static constexpr double beta2 = 0.999;
  static constexpr double epsilon = 1e-8;

  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::uint64_t step = 0;

  static AdamState zeros_like(const std::vector<Matrix>& params);
};

/// Adam with decoupled weight decay: params shrink by lr * weight_decay *
/// params in addition to the bias-corrected moment step.
void adam_step(AdamState& state, std::vector<Matrix>& params, const std::vector<Matrix>& grads,
               double lr, double weight_decay);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  LossBreakdown losses;  // mean over the epoch's batches
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;

  /// Columns: epoch,lr,L_id,L_fwd,L_tc,L_tot.
  void write_csv(std::ostream& out) const;
};

struct TrainingSetup {
  Architecture arch;
  LossWeights weights;
  TrainerConfig trainer;
};

struct TrainResult {
  ModelParams params;
  TrainingHistory history;
  std::size_t batch_size = 0;  // effective M
  std::size_t windows_per_epoch = 0;
};

/// Start indices of every stride-1 loss window inside the training portion.
std::vector<std::size_t> window_starts(std::size_t n_train, std::size_t window_length);

/// Trains on the first n_train samples of dataset.lifted_states. Windows are
/// reshuffled every epoch; each window is one Adam step.
TrainResult train(const TrainingSetup& setup, const Dataset& dataset);

}  // namespace tcblran

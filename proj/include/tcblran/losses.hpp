#pragma once

#include "tcblran/model.hpp"

namespace tcblran {

struct LossWeights {
  double gamma_id = 1.0;
  double gamma_fwd = 1.0;
  double gamma_tc = 0.0;
  std::size_t k_m = 12;   // forward look-ahead horizon
  std::size_t k_tm = 2;   // temporal-consistency horizon
  std::size_t batch_size = 32;

  void validate() const;
  /// States spanned by one loss window: M + k_m + k_tm.
  std::size_t window_length() const { return batch_size + k_m + k_tm; }
};

/// A window of consecutive lifted states with the controls that drive
/// states.col(i) to states.col(i + 1). The first `anchors` states are the
/// encoded starting points.
struct Batch {
  Matrix states;    // D x W
  Matrix controls;  // m x (W - 1), or longer
  std::size_t start = 0;
  std::size_t anchors = 0;  // M
};

/// Slices a window of `length` states starting at `start`.
Batch make_batch(const Matrix& states, const Matrix& controls, std::size_t start,
                 std::size_t anchors, std::size_t length);

struct LossBreakdown {
  double identity = 0.0;
  double forward = 0.0;
  double consistency = 0.0;
  double total = 0.0;
};

/// Loss nodes built on a tape; `total` is the weighted sum.
struct TapedLosses {
  ad::Var identity;
  ad::Var forward;
  ad::Var consistency;
  ad::Var total;
};

TapedLosses build_losses(const TapedModel& model, const Batch& batch,
                         const LossWeights& weights);

double identity_loss(const ModelParams& params, const Batch& batch);
double forward_loss(const ModelParams& params, const Batch& batch, std::size_t k_m);
double temporal_consistency_loss(const ModelParams& params, const Batch& batch,
                                 std::size_t k_tm);
double total_loss(const ModelParams& params, const Batch& batch, const LossWeights& weights);
LossBreakdown loss_breakdown(const ModelParams& params, const Batch& batch,
                             const LossWeights& weights);

struct LossGradient {
  LossBreakdown losses;
  std::vector<Matrix> grads;  // indexed like ModelParams::tensors()
};

LossGradient loss_and_gradient(const ModelParams& params, const Batch& batch,
                               const LossWeights& weights);

}  // namespace tcblran

#include "tcblran/losses.hpp"

#include <algorithm>

namespace tcblran {

void LossWeights::validate() const {
  if (gamma_id < 0.0 || gamma_fwd < 0.0 || gamma_tc < 0.0) {
    throw ConfigError("loss weights must be nonnegative (gamma_id=" + std::to_string(gamma_id) +
                      ", gamma_fwd=" + std::to_string(gamma_fwd) +
                      ", gamma_tc=" + std::to_string(gamma_tc) + ")");
  }
  if (k_m < 1) throw ConfigError("k_m must be at least 1");
  if (k_tm < 2) throw ConfigError("k_tm must be at least 2, got " + std::to_string(k_tm));
  if (batch_size <= k_tm) {
    throw ConfigError("batch size M (" + std::to_string(batch_size) + ") must exceed k_tm (" +
                      std::to_string(k_tm) + ")");
  }
}

Batch make_batch(const Matrix& states, const Matrix& controls, std::size_t start,
                 std::size_t anchors, std::size_t length) {
  const auto s = static_cast<Eigen::Index>(start);
  const auto w = static_cast<Eigen::Index>(length);
  if (length < 2 || anchors == 0 || anchors > length) {
    throw InvalidArgument("make_batch: window of " + std::to_string(length) + " with " +
                          std::to_string(anchors) + " anchors");
  }
  if (s + w > states.cols() || s + w - 1 > controls.cols()) {
    throw InvalidArgument("make_batch: window [" + std::to_string(start) + ", " +
                          std::to_string(start + length) + ") exceeds data " +
                          shape_of(states) + " / controls " + shape_of(controls));
  }
  return Batch{states.middleCols(s, w), controls.middleCols(s, w - 1), start, anchors};
}

namespace {

Eigen::Index as_index(std::size_t v) { return static_cast<Eigen::Index>(v); }

void require_window(const Batch& batch, std::size_t horizon, const char* loss) {
  if (batch.anchors == 0) throw InvalidArgument(std::string(loss) + ": empty batch");
  const auto M = as_index(batch.anchors);
  const auto k = as_index(horizon);
  if (batch.states.cols() < M || batch.controls.cols() < M + k - 1) {
    throw ConfigError(std::string(loss) + ": window too short for M=" +
                      std::to_string(batch.anchors) + ", horizon " + std::to_string(horizon) +
                      " (states " + shape_of(batch.states) + ", controls " +
                      shape_of(batch.controls) + ")");
  }
}

// latents[s] holds every anchor advanced s steps: column j started from
// states.col(j) and consumed controls j .. j + s - 1.
std::vector<ad::Var> roll_anchors(ad::Tape& tape, const TapedModel& model, const Batch& batch,
                                  std::size_t steps) {
  const auto M = as_index(batch.anchors);
  std::vector<ad::Var> latents;
  latents.reserve(steps + 1);
  latents.push_back(model.encode(tape.constant(batch.states.leftCols(M))));
  for (std::size_t s = 0; s < steps; ++s) {
    latents.push_back(model.step(latents.back(), batch.controls.middleCols(as_index(s), M)));
  }
  return latents;
}

ad::Var consistency_from_latents(const std::vector<ad::Var>& latents,
                                 std::size_t anchors, std::size_t k_tm) {
  const auto M = as_index(anchors);
  ad::Var sum_q;
  for (std::size_t q = 1; q <= k_tm - 1; ++q) {
    const auto overlap = M - as_index(q);
    ad::Var sum_k;
    for (std::size_t k = 1; k <= k_tm - q; ++k) {
      // Landing time n + k + p: anchor p rolled k steps vs anchor p - q
      // rolled k + q steps, for p = q .. M - 1.
      ad::Var diff = ad::columns(latents[k], as_index(q), overlap) -
                     ad::columns(latents[k + q], 0, overlap);
      ad::Var l_k = (1.0 / static_cast<double>(overlap)) * ad::sum_squares(diff);
      sum_k = k == 1 ? l_k : sum_k + l_k;
    }
    ad::Var l_q = (1.0 / static_cast<double>(k_tm - q)) * sum_k;
    sum_q = q == 1 ? l_q : sum_q + l_q;
  }
  return (1.0 / (2.0 * static_cast<double>(k_tm - 1))) * sum_q;
}

}  // namespace

TapedLosses build_losses(const TapedModel& model, const Batch& batch,
                         const LossWeights& weights) {
  weights.validate();
  if (batch.anchors <= weights.k_tm - 1) {
    throw InvalidArgument("temporal consistency needs M > k_tm - 1");
  }
  require_window(batch, weights.k_m, "forward loss");
  require_window(batch, weights.k_tm, "temporal consistency loss");
  const auto M = as_index(batch.anchors);
  const auto k_m = as_index(weights.k_m);
  if (batch.states.cols() < M + k_m) {
    throw ConfigError("forward loss: window of " + std::to_string(batch.states.cols()) +
                      " states is shorter than M + k_m = " + std::to_string(M + k_m));
  }
  ad::Tape& tape = *model.vars.front().tape();
  const auto latents = roll_anchors(tape, model, batch, std::max(weights.k_m, weights.k_tm));

  // One decoder pass for the reconstruction and all k_m look-ahead steps.
  std::vector<ad::Var> to_decode(latents.begin(), latents.begin() + k_m + 1);
  ad::Var decoded = model.decode(ad::hconcat(to_decode));

  Matrix targets(batch.states.rows(), M * k_m);
  for (Eigen::Index k = 1; k <= k_m; ++k) {
    targets.middleCols((k - 1) * M, M) = batch.states.middleCols(k, M);
  }

  TapedLosses out;
  out.identity = (1.0 / (2.0 * static_cast<double>(M))) *
                 ad::sum_squares(ad::columns(decoded, 0, M) -
                                 tape.constant(batch.states.leftCols(M)));
  out.forward = (1.0 / (2.0 * static_cast<double>(k_m * M))) *
                ad::sum_squares(ad::columns(decoded, M, M * k_m) - tape.constant(targets));
  out.consistency = consistency_from_latents(latents, batch.anchors, weights.k_tm);
  out.total = weights.gamma_id * out.identity + weights.gamma_fwd * out.forward +
              weights.gamma_tc * out.consistency;
  return out;
}

double identity_loss(const ModelParams& params, const Batch& batch) {
  if (batch.anchors == 0) throw InvalidArgument("identity loss: empty batch");
  const auto M = as_index(batch.anchors);
  if (batch.states.cols() < M) throw ConfigError("identity loss: window shorter than M");
  ad::Tape tape;
  TapedModel model(tape, params);
  ad::Var x = tape.constant(batch.states.leftCols(M));
  ad::Var loss = (1.0 / (2.0 * static_cast<double>(M))) *
                 ad::sum_squares(model.decode(model.encode(x)) - x);
  return loss.scalar();
}

double forward_loss(const ModelParams& params, const Batch& batch, std::size_t k_m) {
  if (k_m == 0) throw ConfigError("forward loss: k_m must be at least 1");
  require_window(batch, k_m, "forward loss");
  const auto M = as_index(batch.anchors);
  if (batch.states.cols() < M + as_index(k_m)) {
    throw ConfigError("forward loss: window shorter than M + k_m");
  }
  ad::Tape tape;
  TapedModel model(tape, params);
  const auto latents = roll_anchors(tape, model, batch, k_m);
  std::vector<ad::Var> rolled(latents.begin() + 1, latents.end());
  ad::Var decoded = model.decode(ad::hconcat(rolled));
  Matrix targets(batch.states.rows(), M * as_index(k_m));
  for (Eigen::Index k = 1; k <= as_index(k_m); ++k) {
    targets.middleCols((k - 1) * M, M) = batch.states.middleCols(k, M);
  }
  ad::Var loss = (1.0 / (2.0 * static_cast<double>(as_index(k_m) * M))) *
                 ad::sum_squares(decoded - tape.constant(targets));
  return loss.scalar();
}

double temporal_consistency_loss(const ModelParams& params, const Batch& batch,
                                 std::size_t k_tm) {
  if (k_tm < 2) throw InvalidArgument("temporal consistency loss: k_tm must be at least 2");
  if (batch.anchors <= k_tm - 1) {
    throw InvalidArgument("temporal consistency loss: M (" + std::to_string(batch.anchors) +
                          ") must exceed every q <= k_tm - 1");
  }
  require_window(batch, k_tm, "temporal consistency loss");
  ad::Tape tape;
  TapedModel model(tape, params);
  const auto latents = roll_anchors(tape, model, batch, k_tm);
  return consistency_from_latents(latents, batch.anchors, k_tm).scalar();
}

LossBreakdown loss_breakdown(const ModelParams& params, const Batch& batch,
                             const LossWeights& weights) {
  ad::Tape tape;
  TapedModel model(tape, params);
  const TapedLosses l = build_losses(model, batch, weights);
  return {l.identity.scalar(), l.forward.scalar(), l.consistency.scalar(), l.total.scalar()};
}

double total_loss(const ModelParams& params, const Batch& batch, const LossWeights& weights) {
  return loss_breakdown(params, batch, weights).total;
}

LossGradient loss_and_gradient(const ModelParams& params, const Batch& batch,
                               const LossWeights& weights) {
  ad::Tape tape;
  TapedModel model(tape, params);
  const TapedLosses l = build_losses(model, batch, weights);
  ad::GradientSet gs = tape.backward(l.total);
  LossGradient out;
  out.losses = {l.identity.scalar(), l.forward.scalar(), l.consistency.scalar(),
                l.total.scalar()};
  out.grads.reserve(params.tensors().size());
  for (std::size_t i = 0; i < params.tensors().size(); ++i) {
    out.grads.push_back(std::move(gs.grads.at(i)));
  }
  return out;
}

}  // namespace tcblran

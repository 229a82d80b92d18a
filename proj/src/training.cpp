#include "tcblran/training.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>

namespace tcblran {

void TrainerConfig::validate() const {
  if (!(lr0 > 0.0)) throw ConfigError("train.lr must be positive");
  if (!(lr_decay > 0.0)) throw ConfigError("train.lr_decay must be positive");
  if (weight_decay < 0.0) throw ConfigError("train.weight_decay must be nonnegative");
  if (!(grad_clip > 0.0)) throw ConfigError("train.grad_clip must be positive");
  for (std::size_t i = 1; i < milestones.size(); ++i) {
    if (milestones[i] <= milestones[i - 1]) {
      throw ConfigError("train.milestones must be strictly increasing");
    }
  }
}

double lr_at_epoch(const TrainerConfig& config, std::size_t epoch) {
  const auto passed = std::count_if(config.milestones.begin(), config.milestones.end(),
                                    [&](std::size_t m) { return m <= epoch; });
  return config.lr0 * std::pow(config.lr_decay, static_cast<double>(passed));
}

double global_norm(const std::vector<Matrix>& tensors) {
  double acc = 0.0;
  for (const auto& t : tensors) acc += t.squaredNorm();
  return std::sqrt(acc);
}

double clip_gradients(std::vector<Matrix>& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw InvalidArgument("clip_gradients: max_norm must be positive");
  const double norm = global_norm(grads);
  if (!std::isfinite(norm)) throw NumericError("clip_gradients: non-finite gradient norm");
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (auto& g : grads) g *= factor;
  }
  return norm;
}

AdamState AdamState::zeros_like(const std::vector<Matrix>& params) {
  AdamState s;
  for (const auto& p : params) {
    s.first_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
    s.second_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
  return s;
}

void adam_step(AdamState& state, std::vector<Matrix>& params, const std::vector<Matrix>& grads,
               double lr, double weight_decay) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw InvalidArgument("adam_step: " + std::to_string(params.size()) + " params, " +
                          std::to_string(grads.size()) + " grads, " +
                          std::to_string(state.first_moment.size()) + " moments");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(AdamState::beta1, t);
  const double correction2 = 1.0 - std::pow(AdamState::beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = params[i];
    const Matrix& g = grads[i];
    if (p.rows() != g.rows() || p.cols() != g.cols()) {
      throw InvalidArgument("adam_step: tensor " + std::to_string(i) + " param " + shape_of(p) +
                            " vs grad " + shape_of(g));
    }
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    m = AdamState::beta1 * m + (1.0 - AdamState::beta1) * g;
    v = AdamState::beta2 * v + (1.0 - AdamState::beta2) * g.cwiseProduct(g);
    if (weight_decay != 0.0) p *= 1.0 - lr * weight_decay;
    p.array() -= lr * (m.array() / correction1) /
                 ((v.array() / correction2).sqrt() + AdamState::epsilon);
    if (!p.allFinite()) {
      throw NumericError("adam_step: non-finite update in tensor " + std::to_string(i) +
                         " at step " + std::to_string(state.step));
    }
  }
}

void TrainingHistory::write_csv(std::ostream& out) const {
  out << "epoch,lr,L_id,L_fwd,L_tc,L_tot\n";
  out << std::setprecision(17);
  for (const auto& r : epochs) {
    out << r.epoch << ',' << r.lr << ',' << r.losses.identity << ',' << r.losses.forward << ','
        << r.losses.consistency << ',' << r.losses.total << '\n';
  }
}

std::vector<std::size_t> window_starts(std::size_t n_train, std::size_t window_length) {
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + window_length <= n_train; ++s) starts.push_back(s);
  return starts;
}

TrainResult train(const TrainingSetup& setup, const Dataset& dataset) {
  setup.arch.validate();
  setup.weights.validate();
  setup.trainer.validate();
  if (setup.arch.input_dim != dataset.lifted_states.rows()) {
    throw ConfigError("architecture input_dim " + std::to_string(setup.arch.input_dim) +
                      " does not match dataset dimension " +
                      std::to_string(dataset.lifted_states.rows()));
  }
  if (setup.arch.input_count != dataset.controls.rows()) {
    throw ConfigError("architecture input_count does not match dataset controls");
  }
  if (dataset.n_train > dataset.size()) throw ConfigError("n_train exceeds dataset size");

  LossWeights weights = setup.weights;
  weights.batch_size =
      effective_batch_size(dataset.n_train, weights.batch_size, weights.k_m, weights.k_tm);
  const std::size_t window = weights.window_length();
  std::vector<std::size_t> starts = window_starts(dataset.n_train, window);

  TrainResult result;
  result.batch_size = weights.batch_size;
  result.windows_per_epoch = starts.size();
  result.params = init_params(setup.trainer.seed, setup.arch);

  std::mt19937_64 shuffle_rng(setup.trainer.seed ^ 0x9e3779b97f4a7c15ULL);
  AdamState adam = AdamState::zeros_like(result.params.tensors());

  for (std::size_t epoch = 0; epoch < setup.trainer.epochs; ++epoch) {
    const double lr = lr_at_epoch(setup.trainer, epoch);
    std::shuffle(starts.begin(), starts.end(), shuffle_rng);
    EpochRecord record;
    record.epoch = epoch;
    record.lr = lr;
    for (std::size_t b = 0; b < starts.size(); ++b) {
      const Batch batch = make_batch(dataset.lifted_states, dataset.controls, starts[b],
                                     weights.batch_size, window);
      LossGradient lg = loss_and_gradient(result.params, batch, weights);
      if (!std::isfinite(lg.losses.total)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b));
      }
      record.losses.identity += lg.losses.identity;
      record.losses.forward += lg.losses.forward;
      record.losses.consistency += lg.losses.consistency;
      record.losses.total += lg.losses.total;
      try {
        clip_gradients(lg.grads, setup.trainer.grad_clip);
        adam_step(adam, result.params.tensors(), lg.grads, lr, setup.trainer.weight_decay);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(b) + ")");
      }
    }
    const double n = static_cast<double>(starts.size());
    record.losses.identity /= n;
    record.losses.forward /= n;
    record.losses.consistency /= n;
    record.losses.total /= n;
    result.history.epochs.push_back(record);
  }
  return result;
}

}  // namespace tcblran

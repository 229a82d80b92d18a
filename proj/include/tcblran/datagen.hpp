#pragma once

#include "tcblran/dynamics.hpp"

#include <cstdint>
#include <optional>

namespace tcblran {

/// Orthonormal-column embedding of d-dimensional states into R^D.
struct LiftMap {
  Matrix q;  // D x d, Q^T Q = I
  std::uint64_t seed = 0;

  Eigen::Index original_dim() const { return q.cols(); }
  Eigen::Index lifted_dim() const { return q.rows(); }
};

LiftMap make_lift(std::uint64_t seed, Eigen::Index d, Eigen::Index D);
Vector lift(const LiftMap& map, const Vector& x);
Vector unlift(const LiftMap& map, const Vector& lifted);
Matrix lift_columns(const LiftMap& map, const Matrix& states);
Matrix unlift_columns(const LiftMap& map, const Matrix& lifted);

/// n_steps scalar inputs drawn i.i.d. uniform on [lo, hi], one per sampling
/// interval.
VectorSequence random_piecewise_control(std::uint64_t seed, std::size_t n_steps,
                                        double lo, double hi);

/// Adds i.i.d. Gaussian noise with variance P / 10^(snr_db / 10), where P is
/// the mean squared entry over the whole sequence (columns are samples).
Matrix add_noise(const Matrix& states, double snr_db, std::uint64_t seed);

/// Empirical SNR in dB of noisy against clean.
double measured_snr_db(const Matrix& clean, const Matrix& noisy);

struct DatasetConfig {
  SystemKind system = SystemKind::pendulum;
  Vector x0 = Vector::Constant(2, 0.0);
  double dt = 0.1;
  std::size_t n_points = 2200;
  Eigen::Index lifted_dim = 64;
  std::uint64_t lift_seed = 0;
  std::uint64_t control_seed = 1;
  double control_lo = -0.15;
  double control_hi = 0.15;
  std::optional<double> snr_db;  // nullopt: clean data
  std::uint64_t noise_seed = 2;
  std::size_t n_train = 32;

  DatasetConfig();
  void validate() const;
};

struct Dataset {
  static constexpr int kSchemaVersion = 1;

  std::string system_name;
  LiftMap lift;
  double dt = 0.1;
  Matrix clean_states;   // d x N, original coordinates
  Matrix lifted_clean;   // D x N
  Matrix lifted_states;  // D x N, what the model trains on (noisy if snr_db)
  Matrix controls;       // m x (N - 1)
  std::size_t n_train = 0;
  std::optional<double> snr_db;
  std::uint64_t control_seed = 0;
  std::uint64_t noise_seed = 0;

  std::size_t size() const { return static_cast<std::size_t>(lifted_states.cols()); }

  /// Sample indices of the evaluation initial conditions: the last n_ics
  /// samples of the training portion, in order.
  std::vector<std::size_t> eval_initial_indices(std::size_t n_ics) const;
};

Dataset build_dataset(const DatasetConfig& config);

/// True exactly when a loss window of M anchors with the two horizons fits
/// into n_train samples.
bool window_feasible(std::size_t n_train, std::size_t batch_size, std::size_t k_m,
                     std::size_t k_tm);

/// Batch size actually used for training. Equal to batch_size when the
/// window fits; otherwise shrinks to n_train - k_m - k_tm so that a single
/// stride-1 window covers the training portion. Throws ConfigError when
/// even that leaves no more than k_tm anchors.
std::size_t effective_batch_size(std::size_t n_train, std::size_t batch_size,
                                 std::size_t k_m, std::size_t k_tm);

}  // namespace tcblran

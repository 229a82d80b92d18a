#include "tcblran/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace tcblran {

LiftMap make_lift(std::uint64_t seed, Eigen::Index d, Eigen::Index D) {
  if (d <= 0) throw InvalidArgument("make_lift: d must be positive");
  if (D < d) {
    throw InvalidArgument("make_lift: lifted dimension " + std::to_string(D) +
                          " is smaller than state dimension " + std::to_string(d));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix gaussian(D, d);
  // Column-major fill order is part of the reproducibility contract.
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < D; ++i) gaussian(i, j) = normal(rng);

  Eigen::HouseholderQR<Matrix> qr(gaussian);
  Matrix q = qr.householderQ() * Matrix::Identity(D, d);
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return LiftMap{std::move(q), seed};
}

Vector lift(const LiftMap& map, const Vector& x) {
  if (x.size() != map.original_dim()) {
    throw InvalidArgument("lift: state has size " + std::to_string(x.size()) +
                          ", map expects " + std::to_string(map.original_dim()));
  }
  return map.q * x;
}

Vector unlift(const LiftMap& map, const Vector& lifted) {
  if (lifted.size() != map.lifted_dim()) {
    throw InvalidArgument("unlift: vector has size " + std::to_string(lifted.size()) +
                          ", map expects " + std::to_string(map.lifted_dim()));
  }
  return map.q.transpose() * lifted;
}

Matrix lift_columns(const LiftMap& map, const Matrix& states) {
  if (states.rows() != map.original_dim()) {
    throw InvalidArgument("lift_columns: states " + shape_of(states) +
                          " vs map " + shape_of(map.q));
  }
  return map.q * states;
}

Matrix unlift_columns(const LiftMap& map, const Matrix& lifted) {
  if (lifted.rows() != map.lifted_dim()) {
    throw InvalidArgument("unlift_columns: states " + shape_of(lifted) +
                          " vs map " + shape_of(map.q));
  }
  return map.q.transpose() * lifted;
}

VectorSequence random_piecewise_control(std::uint64_t seed, std::size_t n_steps,
                                        double lo, double hi) {
  if (lo > hi) {
    throw InvalidArgument("random_piecewise_control: lo (" + std::to_string(lo) +
                          ") > hi (" + std::to_string(hi) + ")");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(lo, hi);
  VectorSequence out;
  out.reserve(n_steps);
  for (std::size_t n = 0; n < n_steps; ++n) {
    // uniform_real_distribution may round up to hi; clamp keeps [lo, hi].
    const double v = lo == hi ? lo : std::clamp(uniform(rng), lo, hi);
    out.push_back(Vector::Constant(1, v));
  }
  return out;
}

Matrix add_noise(const Matrix& states, double snr_db, std::uint64_t seed) {
  if (states.size() == 0) throw InvalidArgument("add_noise: empty sequence");
  if (!std::isfinite(snr_db)) throw InvalidArgument("add_noise: snr_db must be finite");
  const double signal_power = states.squaredNorm() / static_cast<double>(states.size());
  const double sigma = std::sqrt(signal_power / std::pow(10.0, snr_db / 10.0));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  Matrix noisy = states;
  for (Eigen::Index j = 0; j < noisy.cols(); ++j)
    for (Eigen::Index i = 0; i < noisy.rows(); ++i) noisy(i, j) += normal(rng);
  return noisy;
}

double measured_snr_db(const Matrix& clean, const Matrix& noisy) {
  if (clean.rows() != noisy.rows() || clean.cols() != noisy.cols()) {
    throw InvalidArgument("measured_snr_db: shapes " + shape_of(clean) + " vs " +
                          shape_of(noisy));
  }
  return 10.0 * std::log10(clean.squaredNorm() / (noisy - clean).squaredNorm());
}

DatasetConfig::DatasetConfig() { x0 = (Vector(2) << 0.8, 0.0).finished(); }

void DatasetConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("dataset: dt must be positive");
  if (n_points < 2) throw ConfigError("dataset: n_points must be at least 2");
  if (n_train == 0 || n_train > n_points) {
    throw ConfigError("dataset: n_train (" + std::to_string(n_train) +
                      ") must be in [1, n_points=" + std::to_string(n_points) + "]");
  }
  if (control_lo > control_hi) throw ConfigError("dataset: control_lo > control_hi");
  if (x0.size() != 2) throw ConfigError("dataset: x0 must have 2 entries");
  if (lifted_dim < x0.size()) throw ConfigError("dataset: lifted_dim smaller than state dim");
  if (snr_db && !std::isfinite(*snr_db)) throw ConfigError("dataset: snr_db must be finite");
}

std::vector<std::size_t> Dataset::eval_initial_indices(std::size_t n_ics) const {
  if (n_ics > n_train) {
    throw ConfigError("evaluation needs " + std::to_string(n_ics) +
                      " initial conditions but the training portion has " +
                      std::to_string(n_train) + " samples");
  }
  std::vector<std::size_t> out;
  for (std::size_t i = n_train - n_ics; i < n_train; ++i) out.push_back(i);
  return out;
}

Dataset build_dataset(const DatasetConfig& config) {
  config.validate();
  const auto system = ControlAffineSystem::by_kind(config.system);
  const auto controls = random_piecewise_control(
      config.control_seed, config.n_points - 1, config.control_lo, config.control_hi);
  const Trajectory traj = simulate(system, config.x0, controls, config.dt);

  Dataset ds;
  ds.system_name = system.name;
  ds.lift = make_lift(config.lift_seed, system.state_dim, config.lifted_dim);
  ds.dt = config.dt;
  ds.clean_states = stack_columns(traj.states);
  ds.lifted_clean = lift_columns(ds.lift, ds.clean_states);
  ds.lifted_states = config.snr_db
                         ? add_noise(ds.lifted_clean, *config.snr_db, config.noise_seed)
                         : ds.lifted_clean;
  ds.controls = stack_columns(controls);
  ds.n_train = config.n_train;
  ds.snr_db = config.snr_db;
  ds.control_seed = config.control_seed;
  ds.noise_seed = config.noise_seed;
  return ds;
}

bool window_feasible(std::size_t n_train, std::size_t batch_size, std::size_t k_m,
                     std::size_t k_tm) {
  return n_train >= batch_size + k_m + k_tm;
}

std::size_t effective_batch_size(std::size_t n_train, std::size_t batch_size,
                                 std::size_t k_m, std::size_t k_tm) {
  if (window_feasible(n_train, batch_size, k_m, k_tm)) return batch_size;
  const std::size_t horizon = k_m + k_tm;
  if (n_train <= horizon + k_tm) {
    throw ConfigError("n_train (" + std::to_string(n_train) +
                      ") must exceed k_m + 2*k_tm (" + std::to_string(horizon + k_tm) +
                      ") to leave more than k_tm anchors in a loss window");
  }
  return n_train - horizon;
}

}  // namespace tcblran

#pragma once

// Brute-force reference implementations for tests. Nothing here calls into
// the production loss or rollout code.

#include "tcblran/datagen.hpp"
#include "tcblran/dynamics.hpp"
#include "tcblran/losses.hpp"
#include "tcblran/model.hpp"

#include <cstdint>

namespace tcblran::oracle {

/// RK4 with dt / substeps internal steps per sampling interval.
Trajectory fine_step_reference(const ControlAffineSystem& system, const Vector& x0,
                               const VectorSequence& controls, double dt, int substeps);

struct LossTriple {
  double identity = 0.0;
  double forward = 0.0;
  double consistency = 0.0;
};

/// Literal nested loops over the printed index sets.
LossTriple loss_oracle(const ModelParams& params, const Batch& batch, const LossWeights& weights);

/// z' = A-tilde z + sum_i u_i B-tilde_i z, one entry at a time.
std::vector<double> oracle_step(const ModelParams& params, const std::vector<double>& z,
                                const Vector& u);

/// Exactly bilinear system x_{n+1} = (I + A dt + sum_i B_i u_i dt) x_n.
struct SyntheticBilinearSystem {
  Eigen::Index dim = 0;
  double dt = 0.1;
  Matrix a_true;
  std::vector<Matrix> b_true;
  std::uint64_t seed = 0;  // seed of the accepted draw

  Matrix a_tilde() const { return Matrix::Identity(dim, dim) + a_true * dt; }
  Matrix b_tilde(std::size_t i) const { return b_true[i] * dt; }
  double spectral_radius() const;

  /// controls.size() + 1 states produced by the Euler propagator.
  VectorSequence propagate(const Vector& x0, const VectorSequence& controls) const;
};

struct SyntheticData {
  SyntheticBilinearSystem system;
  Dataset dataset;
};

/// Draws a stable system and a clean trajectory of n_samples states under
/// uniform piecewise-constant control on [-control_amplitude, control_amplitude].
/// Unstable draws are rejected by bumping the seed.
SyntheticData make_synthetic(std::uint64_t seed, Eigen::Index n, double dt,
                             std::size_t n_samples = 500, double control_amplitude = 0.5);

/// Identity encoder/decoder with the true latent transition matrices.
ModelParams hardwired_model(const SyntheticBilinearSystem& system);

}  // namespace tcblran::oracle

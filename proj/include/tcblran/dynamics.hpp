#pragma once

#include "tcblran/common.hpp"

#include <functional>
#include <map>
#include <string>
#include <string_view>

namespace tcblran {

enum class SystemKind { pendulum, vanderpol, duffing, custom };

std::string_view to_string(SystemKind kind);
SystemKind system_kind_from_string(std::string_view name);

/// A control-affine system xdot = f(x) + sum_i g_i(x) u_i.
///
/// The three built-in benchmarks are second-order oscillators with state
/// [position, velocity] and a single input entering the velocity equation.
/// Custom systems carry their own drift and control fields.
struct ControlAffineSystem {
  using Drift = std::function<Vector(const Vector&)>;
  using ControlFields = std::function<Matrix(const Vector&)>;  // d x m

  SystemKind kind = SystemKind::pendulum;
  std::string name;
  std::map<std::string, double> params;
  Eigen::Index state_dim = 2;
  Eigen::Index input_dim = 1;

  // Only used when kind == custom.
  Drift drift;
  ControlFields control_fields;

  static ControlAffineSystem pendulum(double g = 9.8, double l = 1.0);
  static ControlAffineSystem vanderpol(double mu = 1.0);
  static ControlAffineSystem duffing(double alpha = -1.0, double beta = 1.0,
                                     double delta = 0.02);
  static ControlAffineSystem custom(std::string name, Eigen::Index state_dim,
                                    Eigen::Index input_dim, Drift drift,
                                    ControlFields control_fields);
  static ControlAffineSystem by_kind(SystemKind kind);

  double param(const std::string& key) const;
};

/// Sampled trajectory under zero-order-hold control. controls[n] is held
/// over [t_n, t_{n+1}), so states.size() == controls.size() + 1.
struct Trajectory {
  VectorSequence states;
  VectorSequence controls;
  double dt = 0.0;
  double t0 = 0.0;

  std::size_t size() const { return states.size(); }
  double time(std::size_t n) const { return t0 + dt * static_cast<double>(n); }
};

Vector vector_field(const ControlAffineSystem& system, const Vector& x,
                    const Vector& u);

/// One classical Runge-Kutta step with u held constant across the step.
/// Throws NumericError if the result is not finite.
Vector rk4_step(const ControlAffineSystem& system, const Vector& x,
                const Vector& u, double dt);

/// Integrates from x0 applying controls[n] over the n-th interval.
Trajectory simulate(const ControlAffineSystem& system, const Vector& x0,
                    const VectorSequence& controls, double dt, double t0 = 0.0);

/// Total mechanical energy of the unforced pendulum, 0.5 thetadot^2 +
/// (g/l)(1 - cos theta).
double pendulum_energy(const ControlAffineSystem& pendulum, const Vector& x);

}  // namespace tcblran

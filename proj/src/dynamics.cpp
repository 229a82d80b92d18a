#include "tcblran/dynamics.hpp"

#include <cmath>

namespace tcblran {

std::string_view to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::pendulum: return "pendulum";
    case SystemKind::vanderpol: return "vanderpol";
    case SystemKind::duffing: return "duffing";
    case SystemKind::custom: return "custom";
  }
  return "unknown";
}

SystemKind system_kind_from_string(std::string_view name) {
  if (name == "pendulum") return SystemKind::pendulum;
  if (name == "vanderpol" || name == "vdp") return SystemKind::vanderpol;
  if (name == "duffing") return SystemKind::duffing;
  throw InvalidArgument("unknown system '" + std::string(name) +
                        "' (expected pendulum, vanderpol or duffing)");
}

ControlAffineSystem ControlAffineSystem::pendulum(double g, double l) {
  ControlAffineSystem s;
  s.kind = SystemKind::pendulum;
  s.name = "pendulum";
  s.params = {{"g", g}, {"l", l}};
  return s;
}

ControlAffineSystem ControlAffineSystem::vanderpol(double mu) {
  ControlAffineSystem s;
  s.kind = SystemKind::vanderpol;
  s.name = "vanderpol";
  s.params = {{"mu", mu}};
  return s;
}

ControlAffineSystem ControlAffineSystem::duffing(double alpha, double beta,
                                                 double delta) {
  ControlAffineSystem s;
  s.kind = SystemKind::duffing;
  s.name = "duffing";
  s.params = {{"alpha", alpha}, {"beta", beta}, {"delta", delta}};
  return s;
}

ControlAffineSystem ControlAffineSystem::custom(std::string name,
                                                Eigen::Index state_dim,
                                                Eigen::Index input_dim,
                                                Drift drift,
                                                ControlFields control_fields) {
  if (state_dim <= 0 || input_dim <= 0) {
    throw InvalidArgument("custom system dimensions must be positive");
  }
  if (!drift || !control_fields) {
    throw InvalidArgument("custom system needs both drift and control fields");
  }
  ControlAffineSystem s;
  s.kind = SystemKind::custom;
  s.name = std::move(name);
  s.state_dim = state_dim;
  s.input_dim = input_dim;
  s.drift = std::move(drift);
  s.control_fields = std::move(control_fields);
  return s;
}

ControlAffineSystem ControlAffineSystem::by_kind(SystemKind kind) {
  switch (kind) {
    case SystemKind::pendulum: return pendulum();
    case SystemKind::vanderpol: return vanderpol();
    case SystemKind::duffing: return duffing();
    case SystemKind::custom: break;
  }
  throw InvalidArgument("custom systems have no default construction");
}

double ControlAffineSystem::param(const std::string& key) const {
  auto it = params.find(key);
  if (it == params.end()) {
    throw InvalidArgument("system '" + name + "' has no parameter '" + key + "'");
  }
  return it->second;
}

Vector vector_field(const ControlAffineSystem& system, const Vector& x,
                    const Vector& u) {
  if (x.size() != system.state_dim || u.size() != system.input_dim) {
    throw InvalidArgument("vector_field(" + system.name + "): state size " +
                          std::to_string(x.size()) + " / input size " +
                          std::to_string(u.size()) + ", expected " +
                          std::to_string(system.state_dim) + " / " +
                          std::to_string(system.input_dim));
  }
  Vector dx = Vector::Zero(2);
  switch (system.kind) {
    case SystemKind::pendulum: {
      const double g = system.param("g");
      const double l = system.param("l");
      dx << x(1), -(g / l) * std::sin(x(0));
      break;
    }
    case SystemKind::vanderpol: {
      const double mu = system.param("mu");
      dx << x(1), mu * (1.0 - x(0) * x(0)) * x(1) - x(0);
      break;
    }
    case SystemKind::duffing: {
      const double alpha = system.param("alpha");
      const double beta = system.param("beta");
      const double delta = system.param("delta");
      dx << x(1), -delta * x(1) - alpha * x(0) - beta * x(0) * x(0) * x(0);
      break;
    }
    case SystemKind::custom:
      return system.drift(x) + system.control_fields(x) * u;
  }
  // g(x) = [0, 1]^T for the built-in oscillators.
  dx(1) += u(0);
  return dx;
}

Vector rk4_step(const ControlAffineSystem& system, const Vector& x,
                const Vector& u, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("rk4_step: dt must be positive");
  const Vector k1 = vector_field(system, x, u);
  const Vector k2 = vector_field(system, x + 0.5 * dt * k1, u);
  const Vector k3 = vector_field(system, x + 0.5 * dt * k2, u);
  const Vector k4 = vector_field(system, x + dt * k3, u);
  Vector next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) {
    throw NumericError("rk4_step(" + system.name + "): non-finite state");
  }
  return next;
}

Trajectory simulate(const ControlAffineSystem& system, const Vector& x0,
                    const VectorSequence& controls, double dt, double t0) {
  if (controls.empty()) throw InvalidArgument("simulate: controls must be non-empty");
  if (!(dt > 0.0)) throw InvalidArgument("simulate: dt must be positive");
  if (x0.size() != system.state_dim) {
    throw InvalidArgument("simulate: x0 has size " + std::to_string(x0.size()) +
                          ", expected " + std::to_string(system.state_dim));
  }
  Trajectory traj;
  traj.dt = dt;
  traj.t0 = t0;
  traj.controls = controls;
  traj.states.reserve(controls.size() + 1);
  traj.states.push_back(x0);
  for (std::size_t n = 0; n < controls.size(); ++n) {
    try {
      traj.states.push_back(rk4_step(system, traj.states.back(), controls[n], dt));
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " at step " + std::to_string(n));
    }
  }
  return traj;
}

double pendulum_energy(const ControlAffineSystem& pendulum, const Vector& x) {
  const double w2 = pendulum.param("g") / pendulum.param("l");
  return 0.5 * x(1) * x(1) + w2 * (1.0 - std::cos(x(0)));
}

}  // namespace tcblran

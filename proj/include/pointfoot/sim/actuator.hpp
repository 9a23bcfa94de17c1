#pragma once

// Series-elastic joint abstraction: either an ideal torque source or a
// closed torque loop with first-order motor lag and actuator dry friction.

#include "pointfoot/core.hpp"

#include <algorithm>
#include <cmath>

namespace pointfoot::sim {

enum class ActuatorMode { Ideal, SeaLag };

struct TorqueGains {
  double Kp = 65.0;  ///< K_P,tau (dimensionless loop gain)
  double Ki = 0.0;   ///< K_I,tau (1/s)
};

struct SeaParams {
  ActuatorMode mode = ActuatorMode::Ideal;
  double motor_lag = 1.0;     ///< open-loop motor time constant T_m (s)
  double dry_friction = 0.0;  ///< magnitude of the friction torque (N m)
  double friction_speed = 1e-3;  ///< tanh smoothing velocity (rad/s)
  double integral_limit = 50.0;  ///< clamp on the integrated torque error (N m s)
};

/// One joint: u = tau_des + Kp (tau_des - tau_out) + Ki int(tau_des - tau_out),
/// T_m dtau_m/dt = u - tau_m and tau_out = tau_m - friction(qdot). Without
/// friction the loop is first order with time constant T_m / (1 + Kp).
class SeaJoint {
 public:
  explicit SeaJoint(SeaParams p = {}, TorqueGains g = {}) : p_(p), g_(g) {
    if (!(p_.motor_lag > 0.0)) throw ConfigError("motor lag must be positive", {"actuator.motor_lag"});
    if (g_.Kp < 0.0 || g_.Ki < 0.0) throw ConfigError("torque gains must be non-negative", {"torque_gains"});
  }

  void set_gains(const TorqueGains& g) { g_ = g; }
  const TorqueGains& gains() const { return g_; }
  double motor_torque() const { return tau_m_; }

  double friction(double qdot) const { return p_.dry_friction * std::tanh(qdot / p_.friction_speed); }

  /// Delivered joint torque after advancing dt with the given demand.
  double update(double tau_des, double qdot, double dt) {
    if (p_.mode == ActuatorMode::Ideal) return out_ = tau_des;
    const double f = friction(qdot);
    const double e = tau_des - out_;
    integral_ = std::clamp(integral_ + e * dt, -p_.integral_limit, p_.integral_limit);
    const double u = tau_des + g_.Kp * e + g_.Ki * integral_;
    // exact update of the motor lag with u held over the step
    tau_m_ = u + (tau_m_ - u) * std::exp(-dt / p_.motor_lag);
    return out_ = tau_m_ - f;
  }

  double output() const { return out_; }

  void reset(double tau = 0.0) {
    tau_m_ = out_ = tau;
    integral_ = 0.0;
  }

 private:
  SeaParams p_;
  TorqueGains g_;
  double tau_m_ = 0.0;
  double out_ = 0.0;
  double integral_ = 0.0;
};

}  // namespace pointfoot::sim

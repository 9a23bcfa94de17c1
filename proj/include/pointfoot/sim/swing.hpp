#pragma once

// Swing-foot set-points: a lift to an apex, then a landing curve that can be
// re-fitted from the current set-point when the target moves. Segments are
// quintic so the feed-forward acceleration is continuous across phases.

#include "pointfoot/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

namespace pointfoot::sim {

struct Setpoint {
  Vec3 pos = Vec3::Zero();
  Vec3 vel = Vec3::Zero();
  Vec3 acc = Vec3::Zero();
};

/// Quintic Hermite segment per axis on [0, T]; matches position, velocity
/// and acceleration at both ends.
class HermiteSegment {
 public:
  HermiteSegment() = default;
  HermiteSegment(const Setpoint& a, const Setpoint& b, double T) : T_(T) {
    if (!(T > 0.0)) throw ConfigError("Hermite segment duration must be positive");
    const Vec3 h = b.pos - a.pos - a.vel * T - 0.5 * a.acc * T * T;
    const Vec3 dv = b.vel - a.vel - a.acc * T;
    const Vec3 da = b.acc - a.acc;
    c_[0] = a.pos;
    c_[1] = a.vel;
    c_[2] = 0.5 * a.acc;
    c_[3] = (10.0 * h - 4.0 * T * dv + 0.5 * T * T * da) / std::pow(T, 3);
    c_[4] = (-15.0 * h + 7.0 * T * dv - T * T * da) / std::pow(T, 4);
    c_[5] = (6.0 * h - 3.0 * T * dv + 0.5 * T * T * da) / std::pow(T, 5);
  }

  double duration() const { return T_; }

  /// Evaluates at s; past the end the curve continues with the end velocity.
  Setpoint at(double s) const {
    Setpoint sp;
    if (s > T_) {
      const Setpoint e = at(T_);
      sp.pos = e.pos + e.vel * (s - T_);
      sp.vel = e.vel;
      return sp;
    }
    s = std::max(s, 0.0);
    sp.pos = c_[0] + s * (c_[1] + s * (c_[2] + s * (c_[3] + s * (c_[4] + s * c_[5]))));
    sp.vel = c_[1] + s * (2.0 * c_[2] + s * (3.0 * c_[3] + s * (4.0 * c_[4] + s * 5.0 * c_[5])));
    sp.acc = 2.0 * c_[2] + s * (6.0 * c_[3] + s * (12.0 * c_[4] + s * 20.0 * c_[5]));
    return sp;
  }

 private:
  std::array<Vec3, 6> c_ = {Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  double T_ = 1.0;
};

struct SwingParams {
  double apex = 0.05;           ///< lift height above the start point (m)
  double touchdown_speed = 0.05;  ///< downward speed at the end of the landing curve (m/s)
};

/// Lifting: vertical rise from rest to the apex (also at rest).
/// Landing: Hermite curve from the current set-point to the target, arriving
/// with a small downward speed and continuing until contact.
class SwingTrajectory {
 public:
  SwingTrajectory(const Vec3& start, double lift_time, SwingParams p)
      : start_(start), p_(p),
        lift_({start, Vec3::Zero(), Vec3::Zero()}, {start + Vec3(0, 0, p.apex), Vec3::Zero(), Vec3::Zero()}, lift_time) {}

  Setpoint lifting(double s) const { return lift_.at(std::min(s, lift_.duration())); }

  /// Starts (or re-fits) the landing curve at landing-clock s_now, leaving
  /// `remaining` seconds to reach `target`.
  void retarget(const Vec3& target, double s_now, double remaining, const std::optional<Setpoint>& from = {}) {
    const Setpoint cur = from ? *from : (landing_ ? landing(s_now) : lifting(lift_.duration()));
    target_ = target;
    land_offset_ = s_now;
    landing_ = HermiteSegment(cur, {target, Vec3(0, 0, -p_.touchdown_speed), Vec3::Zero()}, std::max(remaining, 1e-3));
  }

  Setpoint landing(double s) const {
    if (!landing_) throw ConfigError("landing curve used before a target was set");
    return landing_->at(s - land_offset_);
  }

  bool has_target() const { return landing_.has_value(); }
  const Vec3& target() const { return target_; }
  const Vec3& start() const { return start_; }

 private:
  Vec3 start_;
  SwingParams p_;
  HermiteSegment lift_;
  std::optional<HermiteSegment> landing_;
  Vec3 target_ = Vec3::Zero();
  double land_offset_ = 0.0;
};

}  // namespace pointfoot::sim

#pragma once

// Prismatic inverted pendulum: a point mass on a height surface z = h(x),
// pushed by a point foot along the foot-to-COM line.

#include "pointfoot/core.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace pointfoot::planner {

/// Piecewise polynomial height surface. Piece i covers [breaks[i], breaks[i+1])
/// in powers of (x - breaks[i]); the first and last pieces extend to infinity.
class HeightSurface {
 public:
  HeightSurface() : HeightSurface(flat(1.0)) {}
  HeightSurface(std::vector<double> breaks, std::vector<VecX> coeffs)
      : breaks_(std::move(breaks)), coeffs_(std::move(coeffs)) {
    if (breaks_.empty() || breaks_.size() != coeffs_.size())
      throw PlannerError("height surface needs one break per polynomial piece");
    for (size_t i = 0; i < coeffs_.size(); ++i) {
      if (coeffs_[i].size() == 0) throw PlannerError("height surface piece " + std::to_string(i) + " is empty");
      if (i > 0 && !(breaks_[i] > breaks_[i - 1])) throw PlannerError("height surface breaks must increase");
    }
    for (size_t i = 1; i < coeffs_.size(); ++i) {
      const double x = breaks_[i];
      const Vec3 left = eval_piece(i - 1, x), right = eval_piece(i, x);
      if ((left - right).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + left.cwiseAbs().maxCoeff()))
        throw PlannerError("height surface is not C2 at x = " + std::to_string(x));
    }
  }

  static HeightSurface flat(double z0) { return HeightSurface({0.0}, {VecX::Constant(1, z0)}); }

  /// Single polynomial c0 + c1 x + c2 x^2 + ...
  static HeightSurface polynomial(const VecX& c) { return HeightSurface({0.0}, {c}); }

  double h(double x) const { return eval(x)[0]; }
  double dh(double x) const { return eval(x)[1]; }
  double ddh(double x) const { return eval(x)[2]; }

  /// (h, h', h'') at x.
  Vec3 eval(double x) const {
    size_t i = 0;
    while (i + 1 < breaks_.size() && x >= breaks_[i + 1]) ++i;
    return eval_piece(i, x);
  }

  bool is_flat() const { return coeffs_.size() == 1 && coeffs_[0].size() == 1; }

  const std::vector<double>& breaks() const { return breaks_; }
  const std::vector<VecX>& coeffs() const { return coeffs_; }

 private:
  Vec3 eval_piece(size_t i, double x) const {
    const VecX& c = coeffs_[i];
    const double u = x - breaks_[i];
    double v = 0, d = 0, dd = 0;
    for (Eigen::Index k = c.size() - 1; k >= 0; --k) {
      dd = dd * u + 2.0 * d;
      d = d * u + v;
      v = v * u + c[k];
    }
    return {v, d, dd};
  }

  std::vector<double> breaks_;
  std::vector<VecX> coeffs_;
};

struct PipmState {
  double t = 0.0;
  double x = 0.0;
  double xdot = 0.0;
  double xp = 0.0;  ///< stance foot
};

inline constexpr double kSingularDenominator = 1e-6;

/// xdd = (g + h'' xd^2) / (z - (x - xp) h') * (x - xp).
inline double pipm_accel(const PipmState& s, const HeightSurface& surf, double g = kGravity) {
  const Vec3 hz = surf.eval(s.x);
  const double denom = hz[0] - (s.x - s.xp) * hz[1];
  if (!(hz[0] > 0.0)) throw PlannerError("height surface is not above ground at x = " + std::to_string(s.x));
  if (std::abs(denom) < kSingularDenominator)
    throw PlannerError("pendulum denominator is singular at x = " + std::to_string(s.x));
  return (g + hz[2] * s.xdot * s.xdot) / denom * (s.x - s.xp);
}

inline constexpr double kPipmDt = 1e-3;

enum class PipmEvent { Time, Crossing, Singular };

struct PipmTrajectory {
  std::vector<PipmState> states;
  PipmEvent event = PipmEvent::Time;
  const PipmState& back() const { return states.back(); }
};

/// One RK4 step of length h.
inline PipmState rk4_step(const PipmState& s, double h, const HeightSurface& surf) {
  auto f = [&](double x, double v) {
    PipmState q = s;
    q.x = x;
    q.xdot = v;
    return pipm_accel(q, surf);
  };
  const double k1x = s.xdot, k1v = f(s.x, s.xdot);
  const double k2x = s.xdot + 0.5 * h * k1v, k2v = f(s.x + 0.5 * h * k1x, s.xdot + 0.5 * h * k1v);
  const double k3x = s.xdot + 0.5 * h * k2v, k3v = f(s.x + 0.5 * h * k2x, s.xdot + 0.5 * h * k2v);
  const double k4x = s.xdot + h * k3v, k4v = f(s.x + h * k3x, s.xdot + h * k3v);
  PipmState out = s;
  out.t = s.t + h;
  out.x = s.x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
  out.xdot = s.xdot + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
  return out;
}

/// Integrates for `duration` seconds with fixed steps (the last one
/// shortened to land on the end time). If `event` is given, integration stops
/// where it changes sign, located by bisection on the step length.
inline PipmTrajectory integrate_pipm(const PipmState& s0, const HeightSurface& surf, double duration,
                                     const std::function<double(const PipmState&)>& event = {},
                                     double dt = kPipmDt) {
  if (!(duration >= 0.0)) throw PlannerError("integration duration must be non-negative");
  if (!(dt > 0.0)) throw PlannerError("integration step must be positive");
  PipmTrajectory tr;
  tr.states.push_back(s0);
  const double t_end = s0.t + duration;
  const auto n = static_cast<long>(std::ceil(duration / dt - 1e-9));
  try {
    pipm_accel(s0, surf);
    for (long k = 0; k < n; ++k) {
      const PipmState& s = tr.states.back();
      const double h = (k + 1 == n) ? t_end - s.t : dt;
      PipmState next = rk4_step(s, h, surf);
      if (event) {
        const double g0 = event(s), g1 = event(next);
        if (g0 != 0.0 && std::signbit(g0) != std::signbit(g1)) {
          double lo = 0.0, hi = h;
          for (int it = 0; it < 50 && hi - lo > 1e-12; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (std::signbit(event(rk4_step(s, mid, surf))) == std::signbit(g0)) lo = mid;
            else hi = mid;
          }
          tr.states.push_back(rk4_step(s, hi, surf));
          tr.event = PipmEvent::Crossing;
          return tr;
        }
      }
      tr.states.push_back(next);
    }
  } catch (const PlannerError&) {
    tr.event = PipmEvent::Singular;
  }
  return tr;
}

/// Linear-pendulum orbital energy, conserved on flat surfaces.
inline double orbital_energy(const PipmState& s, double z0, double g = kGravity) {
  const double w2 = g / z0;
  return 0.5 * s.xdot * s.xdot - 0.5 * w2 * (s.x - s.xp) * (s.x - s.xp);
}

}  // namespace pointfoot::planner

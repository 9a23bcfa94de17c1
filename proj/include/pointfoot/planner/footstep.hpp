#pragma once

// Constant time-to-velocity-reversal footstep planner.

#include "pointfoot/planner/pipm.hpp"

#include <iomanip>
#include <ostream>

namespace pointfoot::planner {

struct PlanParams {
  double t_reversal = 0.25;  ///< t'
  double impact_bias_x = -0.01;
  double impact_bias_y = 0.0;
  double dual = 0.079;
  double transition = 0.02;
  double lifting = 0.23;
  double landing = 0.26;
  double trigger_fraction = 0.8;  ///< share of the lifting phase at which the plan runs
  double ydot_max = 0.65;
  double ydot_min = 0.1;
  double max_extension = 0.3;  ///< cap on the lateral step extension (s)
  double reach_x = 0.35;       ///< step reach about the post-impact COM (m)
  double reach_y = 0.35;
  double tolerance = 1e-5;  ///< bisection width on p (m)
  double dt = kPipmDt;

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0)) throw PlannerError(std::string(name) + " must be positive");
    };
    positive(t_reversal, "t_reversal");
    positive(dual, "dual");
    positive(transition, "transition");
    positive(lifting, "lifting");
    positive(landing, "landing");
    positive(reach_x, "reach_x");
    positive(reach_y, "reach_y");
    positive(tolerance, "tolerance");
    positive(dt, "dt");
    positive(ydot_min, "ydot_min");
    if (!(ydot_max > ydot_min)) throw PlannerError("ydot_max must exceed ydot_min");
    if (!(trigger_fraction >= 0.0 && trigger_fraction <= 1.0))
      throw PlannerError("trigger_fraction must lie in [0, 1]");
    if (!(max_extension >= 0.0)) throw PlannerError("max_extension must be non-negative");
  }

  /// Time from the lifting trigger until the feet exchange roles (touchdown).
  double time_to_switch_from_trigger() const { return (1.0 - trigger_fraction) * lifting + landing; }
};

/// Integrates the current state forward by `remaining` seconds.
inline PipmState switching_state(const PipmState& now, double remaining, const HeightSurface& surf,
                                 const std::string& axis = "x", double dt = kPipmDt) {
  if (remaining < 0.0) throw PlannerError("remaining time must be non-negative", axis);
  const PipmTrajectory tr = integrate_pipm(now, surf, remaining, {}, dt);
  if (tr.event == PipmEvent::Singular) throw PlannerError("singular surface while predicting the switch", axis);
  return tr.back();
}

inline PipmState apply_impact(PipmState s, double bias) {
  s.xdot += bias;
  return s;
}

struct FootstepResult {
  double p = 0.0;
  bool saturated = false;
  PipmState reversal;  ///< predicted state t' after the switch
};

/// Velocity t' after the switch with the new stance foot at p.
inline PipmState reversal_state(const PipmState& post, double p, double t_reversal, const HeightSurface& surf,
                                double dt = kPipmDt) {
  PipmState s = post;
  s.xp = p;
  const PipmTrajectory tr = integrate_pipm(s, surf, t_reversal, {}, dt);
  if (tr.event == PipmEvent::Singular) throw PlannerError("singular surface during the reversal search");
  return tr.back();
}

/// Bisection for the foot location whose pendulum reverses velocity exactly
/// t' after the switch, bracketed by [x+ - reach, x+ + reach].
inline FootstepResult find_footstep(const PipmState& post, const HeightSurface& surf, double t_reversal, double reach,
                                    double tolerance = 1e-5, const std::string& axis = "x", double dt = kPipmDt) {
  if (!(t_reversal > 0.0)) throw PlannerError("t' must be positive", axis);
  if (!(reach > 0.0)) throw PlannerError("reach must be positive", axis);
  auto f = [&](double p) {
    try {
      return reversal_state(post, p, t_reversal, surf, dt);
    } catch (const PlannerError& e) {
      throw PlannerError(e.what(), axis);
    }
  };
  double lo = post.x - reach, hi = post.x + reach;
  PipmState slo = f(lo), shi = f(hi);
  FootstepResult r;
  if (slo.xdot == 0.0 || shi.xdot == 0.0 || std::signbit(slo.xdot) == std::signbit(shi.xdot)) {
    const bool pick_lo = std::abs(slo.xdot) <= std::abs(shi.xdot);
    r.p = pick_lo ? lo : hi;
    r.reversal = pick_lo ? slo : shi;
    r.saturated = r.reversal.xdot != 0.0;
    return r;
  }
  const bool lo_negative = std::signbit(slo.xdot);
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (std::signbit(f(mid).xdot) == lo_negative) lo = mid;
    else hi = mid;
  }
  r.p = 0.5 * (lo + hi);
  r.reversal = f(r.p);
  return r;
}

enum class TimeAdjustment { None, Shortened, Extended };

inline const char* to_string(TimeAdjustment a) {
  switch (a) {
    case TimeAdjustment::Shortened: return "shortened";
    case TimeAdjustment::Extended: return "extended";
    default: return "none";
  }
}

struct AxisPlan {
  PipmState switching;
  PipmState post_impact;
  FootstepResult step;
};

struct FootstepPlan {
  AxisPlan x;
  std::optional<AxisPlan> y;
  double switch_time = 0.0;  ///< from the planning instant to the switch (s)
  TimeAdjustment adjustment = TimeAdjustment::None;
};

/// Sagittal-only plan used by planar walking.
inline FootstepPlan plan_1d(const PipmState& now_x, const HeightSurface& surf_x, const PlanParams& prm,
                            double remaining) {
  prm.validate();
  FootstepPlan plan;
  plan.switch_time = remaining;
  plan.x.switching = switching_state(now_x, remaining, surf_x, "x", prm.dt);
  plan.x.post_impact = apply_impact(plan.x.switching, prm.impact_bias_x);
  plan.x.step = find_footstep(plan.x.post_impact, surf_x, prm.t_reversal, prm.reach_x, prm.tolerance, "x", prm.dt);
  return plan;
}

/// Lateral axis first: it may move the switch earlier (|ydot| reaches
/// ydot_max) or later (|ydot| below ydot_min at the default switch). The
/// sagittal plan then uses the adjusted switch time.
inline FootstepPlan plan_3d(const PipmState& now_x, const PipmState& now_y, const HeightSurface& surf_x,
                            const HeightSurface& surf_y, const PlanParams& prm, double remaining) {
  prm.validate();
  if (remaining < 0.0) throw PlannerError("remaining time must be non-negative", "y");
  FootstepPlan plan;
  const bool already_fast = std::abs(now_y.xdot) >= prm.ydot_max;
  const PipmTrajectory fast = integrate_pipm(
      now_y, surf_y, already_fast ? 0.0 : remaining,
      [&](const PipmState& s) { return prm.ydot_max - std::abs(s.xdot); }, prm.dt);
  if (fast.event == PipmEvent::Singular) throw PlannerError("singular surface while predicting the switch", "y");
  PipmState sw_y = fast.back();
  double T = fast.back().t - now_y.t;
  if (already_fast || fast.event == PipmEvent::Crossing) {
    plan.adjustment = TimeAdjustment::Shortened;
  } else if (std::abs(sw_y.xdot) < prm.ydot_min && prm.max_extension > 0.0) {
    const PipmTrajectory slow = integrate_pipm(
        sw_y, surf_y, prm.max_extension, [&](const PipmState& s) { return std::abs(s.xdot) - prm.ydot_min; },
        prm.dt);
    if (slow.event == PipmEvent::Singular) throw PlannerError("singular surface while extending the step", "y");
    sw_y = slow.back();
    T = sw_y.t - now_y.t;
    plan.adjustment = TimeAdjustment::Extended;
  }
  plan.switch_time = T;
  AxisPlan y;
  y.switching = sw_y;
  y.post_impact = apply_impact(sw_y, prm.impact_bias_y);
  y.step = find_footstep(y.post_impact, surf_y, prm.t_reversal, prm.reach_y, prm.tolerance, "y", prm.dt);
  plan.y = y;
  plan.x.switching = switching_state(now_x, T, surf_x, "x", prm.dt);
  plan.x.post_impact = apply_impact(plan.x.switching, prm.impact_bias_x);
  plan.x.step = find_footstep(plan.x.post_impact, surf_x, prm.t_reversal, prm.reach_x, prm.tolerance, "x", prm.dt);
  return plan;
}

/// Fixed-gain observer: PIPM prediction blended with the measured state.
/// With no stance foot (dual support) the prediction keeps velocity constant.
class PipmObserver {
 public:
  PipmObserver(double gain_x = 1.0, double gain_v = 1.0) : gx_(gain_x), gv_(gain_v) {
    if (!(gx_ > 0.0 && gx_ <= 1.0 && gv_ > 0.0 && gv_ <= 1.0))
      throw PlannerError("observer gains must lie in (0, 1]");
  }

  void reset(double x, double xdot) {
    x_ = x;
    v_ = xdot;
    init_ = true;
  }

  void update(double x_meas, double xdot_meas, std::optional<double> foot, const HeightSurface& surf, double dt) {
    if (!init_) return reset(x_meas, xdot_meas);
    if (foot) {
      const PipmState s = rk4_step({0.0, x_, v_, *foot}, dt, surf);
      x_ = s.x;
      v_ = s.xdot;
    } else {
      x_ += v_ * dt;
    }
    x_ += gx_ * (x_meas - x_);
    v_ += gv_ * (xdot_meas - v_);
  }

  double x() const { return x_; }
  double xdot() const { return v_; }

 private:
  double gx_, gv_;
  double x_ = 0.0, v_ = 0.0;
  bool init_ = false;
};

struct PlanLogRow {
  int step = 0;
  std::string axis;
  double trigger_time = 0.0;
  PipmState switching, post_impact, reversal;
  double p_planned = 0.0;
  double p_achieved = std::nan("");
  bool saturated = false;
  std::string adjustment = "none";
};

inline void write_plan_log(const std::vector<PlanLogRow>& rows, std::ostream& os) {
  os << "step,axis,trigger_time,switch_t,switch_x,switch_xdot,post_x,post_xdot,p_planned,p_achieved,"
        "reversal_t,reversal_x,reversal_xdot,saturated,adjustment\n"
     << std::setprecision(10);
  for (const auto& r : rows)
    os << r.step << "," << r.axis << "," << r.trigger_time << "," << r.switching.t << "," << r.switching.x << ","
       << r.switching.xdot << "," << r.post_impact.x << "," << r.post_impact.xdot << "," << r.p_planned << ","
       << r.p_achieved << "," << r.reversal.t << "," << r.reversal.x << "," << r.reversal.xdot << ","
       << (r.saturated ? 1 : 0) << "," << r.adjustment << "\n";
}

}  // namespace pointfoot::planner

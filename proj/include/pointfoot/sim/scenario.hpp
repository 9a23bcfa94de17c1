#pragma once

// Scenario runner: controller stack in closed loop with the simulated plant,
// the walking state machine, torque-loop gain scheduling, fall detection and
// logging.

#include "pointfoot/estimator/fusion.hpp"
#include "pointfoot/model/inverse_kinematics.hpp"
#include "pointfoot/planner/footstep.hpp"
#include "pointfoot/sim/actuator.hpp"
#include "pointfoot/sim/config.hpp"
#include "pointfoot/sim/swing.hpp"
#include "pointfoot/sim/world.hpp"
#include "pointfoot/wbosc/controller.hpp"

#include <deque>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace pointfoot::sim {

using estimator::Quat;
using wbosc::RowVec6;

enum class Phase { Dual, TransitionLift, Lifting, Landing, TransitionLand };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::Dual: return "dual";
    case Phase::TransitionLift: return "transition-lift";
    case Phase::Lifting: return "lifting";
    case Phase::Landing: return "landing";
    default: return "transition-land";
  }
}

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Both feet on the terrain at x = +-half_stance (right foot forward), torso
/// upright with its origin at `hip_height`.
inline VecX initial_stance(const RobotModel& m, double half_stance, double lateral, double hip_height,
                           const Terrain& terrain) {
  VecX q = VecX::Zero(m.dofs());
  q[m.base_coordinate("z")] = hip_height;
  for (int i = 0; i < m.dofs(); ++i) {
    const auto& n = m.body(i).name;
    if (n.find("thigh") != std::string::npos) q[i] = -0.4;
    if (n.find("shank") != std::string::npos) q[i] = 0.8;
  }
  const double lat = m.planar() ? 0.0 : lateral;
  Vec3 pr(half_stance, -lat, 0.0), pl(-half_stance, lat, 0.0);
  pr.z() = terrain.h(pr);
  pl.z() = terrain.h(pl);
  const double er = model::solve_leg_ik(m, q, "right_foot", pr);
  const double el = model::solve_leg_ik(m, q, "left_foot", pl);
  if (er > 1e-9 || el > 1e-9)
    throw ConfigError("initial stance is out of reach (IK residual " + std::to_string(std::max(er, el)) + " m)",
                      {"stance"});
  return q;
}

/// Velocity consistent with fixed feet, with base translation rates
/// `v` (x, y) and zero base height and orientation rates.
inline VecX constrained_velocity(const RobotModel& m, const VecX& q, const Vec3& v, bool lock_x) {
  const model::Kinematics kin(m, q, VecX::Zero(m.dofs()));
  const auto axes = m.point_axes();
  const int pr = m.point_rows();
  MatX A = MatX::Zero(2 * pr + m.base_dofs(), m.dofs());
  VecX b = VecX::Zero(A.rows());
  int r = 0;
  for (const auto* name : {"right_foot", "left_foot"}) {
    const auto& c = m.contact(name);
    const MatX J3 = kin.point_jacobian3(c.body, c.offset);
    for (int ax : axes) A.row(r++) = J3.row(ax);
  }
  for (int k = 0; k < m.base_dofs(); ++k, ++r) {
    A(r, k) = 1.0;
    if (k == m.base_coordinate("x")) b[r] = lock_x ? 0.0 : v.x();
    else if (!m.planar() && k == m.base_coordinate("y")) b[r] = v.y();
  }
  Eigen::FullPivLU<MatX> lu(A);
  if (lu.rank() < m.dofs()) throw ConfigError("initial velocity cannot be made consistent with the stance", {"initial"});
  return lu.solve(b);
}

/// Task set built from a gains table; keys com_x, com_y, com_z, pitch, roll
/// and, with a swing contact, foot_x, foot_y, foot_z.
inline std::vector<wbosc::Task> build_tasks(const RobotModel& m, const std::map<std::string, PidGains>& g,
                                            const std::string& swing, double integral_limit,
                                            const std::string& path) {
  static const std::vector<std::string> order{"com_x", "com_y", "com_z", "pitch", "roll", "foot_x", "foot_y", "foot_z"};
  std::vector<std::string> bad;
  for (const auto& [k, v] : g) {
    const bool known = std::find(order.begin(), order.end(), k) != order.end();
    const bool planar_only = m.planar() && (k == "com_y" || k == "roll" || k == "foot_y");
    const bool foot_in_dual = swing.empty() && k.rfind("foot_", 0) == 0;
    if (!known || planar_only || foot_in_dual) bad.push_back(path + "." + k);
  }
  if (!bad.empty()) {
    std::string msg = "task gains not applicable to this model or phase:";
    for (const auto& b : bad) msg += " " + b;
    throw ConfigError(msg, bad);
  }
  auto set = [&](wbosc::Task& t, const std::vector<const PidGains*>& pg) {
    for (size_t i = 0; i < pg.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      t.gains.K[k] = pg[i]->K;
      t.gains.I[k] = pg[i]->I;
      t.gains.D[k] = pg[i]->D;
    }
    t.integral_limit = integral_limit;
  };
  std::vector<wbosc::Task> tasks;
  auto has = [&](const char* k) { return g.count(k) > 0; };
  if (has("com_x") || has("com_y")) {
    std::vector<int> axes;
    std::vector<const PidGains*> pg;
    if (has("com_x")) axes.push_back(0), pg.push_back(&g.at("com_x"));
    if (has("com_y")) axes.push_back(1), pg.push_back(&g.at("com_y"));
    tasks.push_back(wbosc::make_task("com_xy", wbosc::TaskKind::ComPlanar, axes));
    set(tasks.back(), pg);
  }
  if (has("com_z")) {
    tasks.push_back(wbosc::make_task("com_z", wbosc::TaskKind::ComHeight));
    set(tasks.back(), {&g.at("com_z")});
  }
  if (has("pitch")) {
    tasks.push_back(wbosc::make_task("pitch", wbosc::TaskKind::BodyPitch));
    set(tasks.back(), {&g.at("pitch")});
  }
  if (has("roll")) {
    tasks.push_back(wbosc::make_task("roll", wbosc::TaskKind::BodyRoll));
    set(tasks.back(), {&g.at("roll")});
  }
  if (!swing.empty()) {
    std::vector<int> axes;
    std::vector<const PidGains*> pg;
    for (int ax = 0; ax < 3; ++ax) {
      const std::string k = std::string("foot_") + "xyz"[ax];
      if (has(k.c_str())) axes.push_back(ax), pg.push_back(&g.at(k));
    }
    if (axes.empty()) throw ConfigError("single-support gains need foot task entries", {path});
    tasks.push_back(wbosc::make_task("foot", wbosc::TaskKind::FootPosition, axes, swing));
    set(tasks.back(), pg);
  }
  return tasks;
}

/// Checks the parts of a configuration that depend on the robot model.
inline void validate_against_model(const ScenarioConfig& c, const RobotModel& m) {
  build_tasks(m, c.dual_gains, "", c.integral_limit, "gains.dual");
  if (!c.single_gains.empty()) build_tasks(m, c.single_gains, "right_foot", c.integral_limit, "gains.single");
  initial_stance(m, c.half_stance, c.lateral, c.hip_height, c.terrain);
  for (size_t i = 0; i < c.pushes.size(); ++i) {
    try {
      m.body_index(c.pushes[i].body);
    } catch (const ModelError&) {
      throw ConfigError("unknown body '" + c.pushes[i].body + "'", {"disturbances[" + std::to_string(i) + "].body"});
    }
  }
}

struct ComTarget {
  Vec3 pos = Vec3::Zero(), vel = Vec3::Zero(), acc = Vec3::Zero();
};

/// Hold, or an ellipse in the x-z plane starting at the initial COM and
/// moving +x first. The angular rate ramps up smoothly over `ramp` seconds.
inline ComTarget com_target(const ComReference& r, const Vec3& c0, double t) {
  ComTarget out;
  out.pos = c0;
  if (r.type != "ellipse") return out;
  const double w = 2.0 * M_PI / r.period;
  double th, thd, thdd;
  if (r.ramp > 0.0 && t < r.ramp) {
    const double s = t / r.ramp;
    th = w * r.ramp * (s * s * s - 0.5 * s * s * s * s);
    thd = w * (3 * s * s - 2 * s * s * s);
    thdd = w * (6 * s - 6 * s * s) / r.ramp;
  } else {
    th = 0.5 * w * r.ramp + w * (t - r.ramp);
    thd = w;
    thdd = 0.0;
  }
  const double s = std::sin(th), c = std::cos(th);
  out.pos.x() += r.radius_x * s;
  out.pos.z() -= r.radius_z * (1.0 - c);
  out.vel.x() = r.radius_x * c * thd;
  out.vel.z() = -r.radius_z * s * thd;
  out.acc.x() = r.radius_x * (-s * thd * thd + c * thdd);
  out.acc.z() = -r.radius_z * (c * thd * thd + s * thdd);
  return out;
}

struct LogRow {
  double t = 0.0;
  Phase phase = Phase::Dual;
  int steps = 0;
  VecX q, qdot, tau_cmd, tau_del;
  Vec3 lambda_right = Vec3::Constant(kNaN), lambda_left = Vec3::Constant(kNaN);  ///< robot on ground
  double fint_ref = kNaN, fint_act = kNaN, fint_world = kNaN;
  Vec3 com = Vec3::Zero(), com_ref = Vec3::Zero();
  double pitch = 0.0, roll = 0.0;
  Vec3 swing_ref = Vec3::Constant(kNaN), swing_pos = Vec3::Constant(kNaN);
  double est_error = kNaN;
};

struct RunSummary {
  std::string scenario;
  bool completed = false;
  bool fell = false;
  std::string fall_reason;
  double fall_time = kNaN;
  std::string error;
  int steps = 0;
  double sim_time = 0.0;
  double com_error_max = 0.0;    ///< Euclidean over the tracked COM axes
  double com_x_error_max = 0.0;
  double com_z_error_max = 0.0;
  double pitch_error_max = 0.0;
  double roll_error_max = 0.0;
  double fint_error_max = kNaN;  ///< plant-measured internal force vs reference
  double fint_error_mean = kNaN;
  double torque_jump_max = 0.0;  ///< largest per-tick change of any commanded torque (N m)
  double com_speed_max = 0.0;    ///< horizontal
  double friction_ratio_max = 0.0;
  double normal_force_min = kNaN;
  double push_peak = kNaN;
  double push_settling = kNaN;   ///< from the end of the first push
  double estimator_error_max = kNaN;
  int saturations = 0;
  std::vector<std::string> events;
  json resolved;
};

struct RunResult {
  RunSummary summary;
  std::vector<LogRow> log;
  std::vector<planner::PlanLogRow> plans;
};

namespace detail {

inline std::string other_foot(const std::string& f) { return f == "right_foot" ? "left_foot" : "right_foot"; }

/// Synthetic gyro and delayed motion-capture frames feeding the fusion
/// buffer; returns the estimated base orientation each tick.
class EstimatorLoop {
 public:
  EstimatorLoop(const EstimatorSettings& s, double dt, std::uint64_t seed, const Quat& q0, const Vec3& x0)
      : s_(s), dt_(dt), rng_(seed), buf_(make_cfg(s, dt), q0, x0) {}

  Quat tick(std::int64_t k, const Quat& q_true, const Vec3& x_true, const Vec3& omega_body) {
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    if (std::floor(static_cast<double>(k) * s_.mocap_rate * dt_) >
        std::floor(static_cast<double>(k - 1) * s_.mocap_rate * dt_)) {
      estimator::MocapSample m;
      m.capture_tick = k;
      m.leds = estimator::observe_leds(buf_.config().pattern, q_true, x_true);
      for (int i = 0; i < m.leds.size(); ++i) m.leds[i] += s_.led_noise * n01(rng_);
      for (auto& v : m.visible) v = u01(rng_) < s_.p_visible;
      pending_.push_back(m);
    }
    Vec3 w = omega_body + s_.gyro_bias;
    for (int i = 0; i < 3; ++i) w[i] += s_.gyro_noise * n01(rng_);
    std::optional<estimator::MocapSample> frame;
    if (!pending_.empty() && pending_.front().capture_tick + s_.latency_ticks <= k) {
      frame = pending_.front();
      pending_.pop_front();
    }
    return buf_.fuse_tick(w, frame);
  }

 private:
  static estimator::FusionConfig make_cfg(const EstimatorSettings& s, double dt) {
    estimator::FusionConfig c;
    c.dt = dt;
    c.latency_ticks = s.latency_ticks;
    c.depth = std::max(64, 4 * s.latency_ticks + 8);
    return c;
  }

  EstimatorSettings s_;
  double dt_;
  std::mt19937_64 rng_;
  estimator::FusionBuffer buf_;
  std::deque<estimator::MocapSample> pending_;
};

/// Euler angles (yaw about z, then pitch about y, then roll about x).
inline Vec3 ypr_from(const Mat3& R) {
  return Vec3(std::atan2(R(1, 0), R(0, 0)), std::asin(std::clamp(-R(2, 0), -1.0, 1.0)), std::atan2(R(2, 1), R(2, 2)));
}

/// Settling time after `from`: the last instant the deviation exceeds 5% of
/// its peak, measured from `from`.
inline std::pair<double, double> settling(const std::vector<std::pair<double, double>>& trace, double from) {
  double peak = 0.0;
  for (const auto& [t, e] : trace)
    if (t >= from) peak = std::max(peak, std::abs(e));
  double last = from;
  for (const auto& [t, e] : trace)
    if (t >= from && std::abs(e) > 0.05 * peak) last = t;
  return {peak, last - from};
}

}  // namespace detail

/// Runs one scenario to completion, fall or error. Model and configuration
/// problems throw; a diverged simulation is reported in the summary.
inline RunResult run_scenario(const ScenarioConfig& c, const RobotModel& m) {
  validate_against_model(c, m);
  RunResult res;
  RunSummary& sum = res.summary;
  sum.scenario = c.scenario;
  sum.resolved = c.resolved;

  const bool walking = c.scenario != "split_terrain";
  const bool planning = c.scenario == "undirected_walking" || c.planner_enabled;

  WorldOptions wo;
  wo.dt = c.dt;
  wo.mu = c.mu;
  wo.terrain = c.terrain;
  wo.pushes = c.pushes;
  wo.rotor_inertia = c.rotor_inertia;
  const VecX q0 = initial_stance(m, c.half_stance, c.lateral, c.hip_height, c.terrain);
  VecX qd0 = VecX::Zero(m.dofs());
  if (c.initial_velocity.norm() > 0.0) qd0 = constrained_velocity(m, q0, c.initial_velocity, c.lock_base_x);
  World world(m, wo, q0, qd0);
  world.add_contact("right_foot");
  world.add_contact("left_foot");
  const int x_idx = m.base_coordinate("x");
  if (c.lock_base_x) world.add_lock(x_idx);

  const wbosc::ControllerOptions copt{c.omit_coriolis, c.rotor_inertia};
  const int na = m.actuated_dofs();
  const auto& act = m.actuated_indices();

  // torque loops and their gain schedule
  auto joint_class = [&](const std::string& n) -> std::string {
    if (n.find("abd") != std::string::npos) return "abduction";
    if (n.find("thigh") != std::string::npos) return "hip";
    return "knee";
  };
  auto joint_side = [&](const std::string& n) { return n.rfind("r_", 0) == 0 ? "right" : "left"; };
  std::vector<SeaJoint> sea;
  std::vector<TorqueGains> stance_g(static_cast<size_t>(na)), swing_g(static_cast<size_t>(na));
  for (int k = 0; k < na; ++k) {
    const std::string n = m.body(act[static_cast<size_t>(k)]).name;
    const std::string cls = joint_class(n);
    const auto it = c.stance_torque.find(cls);
    stance_g[static_cast<size_t>(k)] = it != c.stance_torque.end() ? it->second : TorqueGains{};
    const auto is = c.swing_torque.find(cls + "_" + joint_side(n));
    swing_g[static_cast<size_t>(k)] = is != c.swing_torque.end() ? is->second : stance_g[static_cast<size_t>(k)];
    sea.emplace_back(c.actuator, stance_g[static_cast<size_t>(k)]);
  }
  auto schedule = [&](const std::string& swing_foot) {
    const auto leg = swing_foot.empty() ? std::vector<int>{} : model::leg_joints(m, swing_foot);
    for (int k = 0; k < na; ++k) {
      const bool on_swing = std::find(leg.begin(), leg.end(), act[static_cast<size_t>(k)]) != leg.end();
      sea[static_cast<size_t>(k)].set_gains(on_swing ? swing_g[static_cast<size_t>(k)]
                                                                           : stance_g[static_cast<size_t>(k)]);
    }
  };

  std::vector<wbosc::Task> dual_tasks = build_tasks(m, c.dual_gains, "", c.integral_limit, "gains.dual");
  std::map<std::string, std::vector<wbosc::Task>> single_tasks;
  if (walking)
    for (const auto* f : {"right_foot", "left_foot"})
      single_tasks[f] = build_tasks(m, c.single_gains, f, c.integral_limit, "gains.single");

  std::vector<wbosc::ConstraintBlock> extra;
  if (c.lock_base_x) extra.push_back(wbosc::coordinate_lock(m, x_idx, "lock"));
  std::optional<wbosc::InternalForceSetting> internal;
  if (c.internal_enabled) internal = wbosc::InternalForceSetting{"right_foot", "left_foot", c.internal_ref, c.internal_KF,
                                                                 c.internal_feedback};

  const int torso = m.base_dofs() - 1;
  const model::Kinematics kin0(m, q0, qd0);
  const Vec3 c0 = kin0.com();
  const planner::HeightSurface surf = planner::HeightSurface::flat(c0.z() - c.terrain.height);

  std::optional<detail::EstimatorLoop> est;
  if (c.estimator.enabled)
    est.emplace(c.estimator, c.control_dt, c.seed, Quat(kin0.rotation(torso)), kin0.origin(torso));

  // walking state
  Phase phase = Phase::Dual;
  double phase_start = 0.0;
  double dual_time = c.initial_dual;
  std::string swing = c.first_swing == "left" ? "left_foot" : "right_foot";
  Vec3 hold = Vec3::Zero();
  std::optional<SwingTrajectory> traj;
  std::optional<wbosc::TransitionState> trans;
  VecX f_dual_next;
  std::map<std::string, Vec3> home;
  for (const auto* f : {"right_foot", "left_foot"}) {
    const auto& cp = m.contact(f);
    home[f] = kin0.point_position(cp.body, cp.offset);
  }
  bool planned = false, touched = false;
  Vec3 target = Vec3::Zero();
  double landing_time = c.plan.landing;
  size_t plan_rows_begin = 0;
  planner::PipmObserver obs_x(c.observer_gain_x, c.observer_gain_v), obs_y(c.observer_gain_x, c.observer_gain_v);

  const int sub = static_cast<int>(std::lround(c.control_dt / c.dt));
  VecX tau_del = VecX::Zero(na), tau_prev;
  bool first = true;
  std::vector<std::pair<double, double>> push_trace;
  double fint_sum = 0.0;
  long fint_n = 0;
  std::int64_t tick = 0;

  auto fall = [&](const std::string& why) {
    if (sum.fell) return;
    sum.fell = true;
    sum.fall_reason = why;
    sum.fall_time = world.time();
  };
  auto enter = [&](Phase p) {
    phase = p;
    phase_start = world.time();
  };
  auto foot_pos = [&](const model::Kinematics& kin, const std::string& f) {
    const auto& cp = m.contact(f);
    return kin.point_position(cp.body, cp.offset);
  };

  try {
    while (world.time() < c.duration - 1e-9 && !sum.fell) {
      const double t = world.time();
      VecX q = world.q();
      const VecX qdot = world.qdot();
      const model::Kinematics kin(m, q, qdot);
      const Vec3 com = kin.com();
      const Vec3 comd = kin.com_jacobian3() * qdot;
      const std::string stance = detail::other_foot(swing);

      LogRow row;
      if (est) {
        const Mat3 R = kin.rotation(torso);
        const Quat qt(R);
        const Vec3 w_body = R.transpose() * kin.velocity(torso).head<3>();
        const Quat qe = est->tick(tick, qt, kin.origin(torso), w_body);
        row.est_error = qe.angularDistance(qt);
        sum.estimator_error_max = std::isnan(sum.estimator_error_max) ? row.est_error
                                                                      : std::max(sum.estimator_error_max, row.est_error);
        const Vec3 ypr = detail::ypr_from(qe.toRotationMatrix());
        if (m.planar()) {
          const Mat3 Re = qe.toRotationMatrix();
          q[m.base_coordinate("pitch")] = std::atan2(Re(0, 2), Re(0, 0));
        } else {
          q[m.base_coordinate("yaw")] = ypr[0];
          q[m.base_coordinate("pitch")] = ypr[1];
          q[m.base_coordinate("roll")] = ypr[2];
        }
      }

      // planner observers track the COM relative to nothing; the foot enters as xp
      if (planning) {
        const bool single = phase == Phase::Lifting || phase == Phase::Landing;
        const Vec3 ps = foot_pos(kin, stance);
        obs_x.update(com.x(), comd.x(), single ? std::optional<double>(ps.x()) : std::nullopt, surf, c.control_dt);
        if (!m.planar())
          obs_y.update(com.y(), comd.y(), single ? std::optional<double>(ps.y()) : std::nullopt, surf, c.control_dt);
      }

      // phase logic
      if (walking) {
        bool changed = true;
        while (changed) {
          changed = false;
          const double clock = t - phase_start;
          switch (phase) {
            case Phase::Dual:
              if (clock >= dual_time - 1e-9) {
                dual_time = c.plan.dual;
                hold = foot_pos(kin, swing);
                if (c.transitions) {
                  trans = wbosc::start_transition(wbosc::TransitionDirection::Lifting, c.plan.transition, swing, f_dual_next);
                  enter(Phase::TransitionLift);
                } else {
                  enter(Phase::Lifting);
                  traj.emplace(hold, c.plan.lifting, SwingParams{c.apex, c.touchdown_speed});
                  schedule(swing);
                }
                for (auto& tk : single_tasks[swing]) tk.reset_integral();
                planned = false;
                touched = false;
                changed = true;
              }
              break;
            case Phase::TransitionLift:
              if (clock >= c.plan.transition - 1e-9) {
                enter(Phase::Lifting);
                traj.emplace(hold, c.plan.lifting, SwingParams{c.apex, c.touchdown_speed});
                schedule(swing);
                changed = true;
              }
              break;
            case Phase::Lifting:
              if (planning && !planned && clock >= c.plan.trigger_fraction * c.plan.lifting - 1e-9) {
                const Vec3 ps = foot_pos(kin, stance);
                const double remaining = (c.plan.lifting - clock) + c.plan.landing;
                const planner::PipmState sx{0.0, obs_x.x(), obs_x.xdot(), ps.x()};
                planner::FootstepPlan plan;
                if (m.planar()) {
                  plan = planner::plan_1d(sx, surf, c.plan, remaining);
                } else {
                  const planner::PipmState sy{0.0, obs_y.x(), obs_y.xdot(), ps.y()};
                  plan = planner::plan_3d(sx, sy, surf, surf, c.plan, remaining);
                }
                landing_time = std::max(c.min_landing, plan.switch_time - (c.plan.lifting - clock));
                target = foot_pos(kin, swing);
                target.x() = plan.x.step.p;
                if (plan.y) target.y() = plan.y->step.p;
                target.z() = c.terrain.h(target);
                plan_rows_begin = res.plans.size();
                auto log_axis = [&](const planner::AxisPlan& ap, const std::string& axis) {
                  planner::PlanLogRow pr;
                  pr.step = sum.steps + 1;
                  pr.axis = axis;
                  pr.trigger_time = t;
                  pr.switching = ap.switching;
                  pr.post_impact = ap.post_impact;
                  pr.reversal = ap.step.reversal;
                  pr.p_planned = ap.step.p;
                  pr.saturated = ap.step.saturated;
                  pr.adjustment = planner::to_string(plan.adjustment);
                  sum.saturations += ap.step.saturated ? 1 : 0;
                  res.plans.push_back(pr);
                };
                log_axis(plan.x, "x");
                if (plan.y) log_axis(*plan.y, "y");
                planned = true;
              }
              if (clock >= c.plan.lifting - 1e-9) {
                if (!planning) {
                  target = home[swing];
                  landing_time = c.plan.landing;
                }
                traj->retarget(target, 0.0, landing_time);
                enter(Phase::Landing);
                changed = true;
              }
              break;
            case Phase::Landing:
              if (touched) {
                ++sum.steps;
                hold = foot_pos(kin, swing);
                for (size_t i = plan_rows_begin; i < res.plans.size(); ++i)
                  res.plans[i].p_achieved = res.plans[i].axis == "x" ? hold.x() : hold.y();
                plan_rows_begin = res.plans.size();
                schedule("");
                if (c.transitions) {
                  std::vector<wbosc::Task> probe = dual_tasks;
                  for (auto& tk : probe) tk.reset_integral();
                  wbosc::CommandRequest rq{&m, q, qdot, {"right_foot", "left_foot"}, extra, &probe, {}, {}, {}};
                  const auto dual = wbosc::whole_body_command(rq, copt);
                  trans = wbosc::start_transition(wbosc::TransitionDirection::Landing, c.plan.transition, swing,
                                                  wbosc::contact_reaction(dual.contacts, dual.lambda_pred, swing));
                  enter(Phase::TransitionLand);
                } else {
                  enter(Phase::Dual);
                  for (auto& tk : dual_tasks) tk.reset_integral();
                  swing = stance;
                }
                changed = true;
              } else if (clock > landing_time + 1.0) {
                fall("no-touchdown");
              }
              break;
            case Phase::TransitionLand:
              if (clock >= c.plan.transition - 1e-9) {
                enter(Phase::Dual);
                for (auto& tk : dual_tasks) tk.reset_integral();
                swing = stance;
                changed = true;
              }
              break;
          }
          if (c.steps > 0 && sum.steps >= c.steps) break;
        }
        if (sum.fell || (c.steps > 0 && sum.steps >= c.steps)) break;
      }

      // command
      const std::string cur_stance = detail::other_foot(swing);
      const double clock = world.time() - phase_start;
      const ComTarget ct = com_target(c.com_ref, c0, t);
      auto set_refs = [&](std::vector<wbosc::Task>& tasks) {
        for (auto& tk : tasks) {
          switch (tk.kind) {
            case wbosc::TaskKind::ComPlanar:
              for (size_t r = 0; r < tk.axes.size(); ++r) {
                const auto k = static_cast<Eigen::Index>(r);
                tk.ref.pos[k] = ct.pos[tk.axes[r]];
                tk.ref.vel[k] = ct.vel[tk.axes[r]];
                tk.ref.acc[k] = ct.acc[tk.axes[r]];
              }
              break;
            case wbosc::TaskKind::ComHeight:
              tk.ref.pos[0] = ct.pos.z();
              tk.ref.vel[0] = ct.vel.z();
              tk.ref.acc[0] = ct.acc.z();
              break;
            case wbosc::TaskKind::FootPosition: {
              Setpoint sp{hold, Vec3::Zero(), Vec3::Zero()};
              if (phase == Phase::Lifting) sp = traj->lifting(clock);
              else if (phase == Phase::Landing) sp = traj->landing(clock);
              for (size_t r = 0; r < tk.axes.size(); ++r) {
                const auto k = static_cast<Eigen::Index>(r);
                tk.ref.pos[k] = sp.pos[tk.axes[r]];
                tk.ref.vel[k] = sp.vel[tk.axes[r]];
                tk.ref.acc[k] = sp.acc[tk.axes[r]];
              }
              row.swing_ref = sp.pos;
              break;
            }
            default: break;
          }
        }
      };

      wbosc::CommandResult cmd;
      std::vector<wbosc::Task>* active = nullptr;
      if (phase == Phase::Dual) {
        active = &dual_tasks;
        set_refs(dual_tasks);
        wbosc::CommandRequest rq{&m, q, qdot, {"right_foot", "left_foot"}, extra, active, internal, tau_del, {}};
        cmd = wbosc::whole_body_command(rq, copt);
        if (walking) f_dual_next = wbosc::contact_reaction(cmd.contacts, cmd.lambda_pred, swing);
      } else {
        active = &single_tasks[swing];
        set_refs(*active);
        wbosc::CommandRequest rq{&m, q, qdot, {cur_stance}, extra, active, {}, tau_del, {}};
        if (phase == Phase::TransitionLift || phase == Phase::TransitionLand) {
          trans->elapsed = clock;
          cmd = wbosc::transition_command(rq, *trans, copt);
        } else {
          cmd = wbosc::whole_body_command(rq, copt);
        }
      }
      for (size_t i = 0; i < active->size(); ++i)
        wbosc::integrate_error((*active)[i], cmd.task_kinematics[i], c.control_dt);

      const VecX& tau_cmd = cmd.tau;
      if (first) {
        for (int k = 0; k < na; ++k) sea[static_cast<size_t>(k)].reset(tau_cmd[k]);
        first = false;
      } else if (t >= c.settle) {
        sum.torque_jump_max = std::max(sum.torque_jump_max, (tau_cmd - tau_prev).cwiseAbs().maxCoeff());
      }
      tau_prev = tau_cmd;

      // plant
      for (int s = 0; s < sub && !sum.fell; ++s) {
        for (int k = 0; k < na; ++k) {
          const int j = act[static_cast<size_t>(k)];
          tau_del[k] = sea[static_cast<size_t>(k)].update(tau_cmd[k], world.qdot()[j], c.dt);
        }
        const auto events = world.step(tau_del);
        for (const auto& f : world.contact_forces()) {
          if (f.normal > 0) sum.friction_ratio_max = std::max(sum.friction_ratio_max, f.tangential / f.normal);
          sum.normal_force_min = std::isnan(sum.normal_force_min) ? f.normal : std::min(sum.normal_force_min, f.normal);
        }
        for (const auto& e : events) {
          std::ostringstream os;
          os << std::setprecision(6) << e.t << " " << to_string(e.kind) << " " << e.contact;
          if (e.kind != EventKind::Touchdown) os << " ratio " << e.friction_ratio;
          sum.events.push_back(os.str());
          const bool is_swing = walking && e.contact == swing && phase != Phase::Dual;
          if (e.kind == EventKind::Touchdown) {
            if (is_swing && phase == Phase::Landing) touched = true;
            continue;
          }
          if (is_swing) continue;
          fall(e.kind == EventKind::Slip ? "friction-cone" : "contact-lost");
        }
      }

      // measurements and envelopes
      const model::Kinematics k2(m, world.q(), world.qdot());
      const Vec3 com2 = k2.com();
      const Vec3 comd2 = k2.com_jacobian3() * world.qdot();
      const ComTarget ct2 = com_target(c.com_ref, c0, world.time());
      row.t = world.time();
      row.phase = phase;
      row.steps = sum.steps;
      row.q = world.q();
      row.qdot = world.qdot();
      row.tau_cmd = tau_cmd;
      row.tau_del = tau_del;
      row.com = com2;
      row.com_ref = ct2.pos;
      row.pitch = world.q()[m.base_coordinate("pitch")];
      row.roll = m.planar() ? 0.0 : world.q()[m.base_coordinate("roll")];
      if (walking && phase != Phase::Dual) row.swing_pos = foot_pos(k2, swing);
      for (const auto& f : world.contact_forces()) (f.name == "right_foot" ? row.lambda_right : row.lambda_left) = -f.reaction;
      if (cmd.internal_active) {
        row.fint_ref = cmd.F_int_ref;
        row.fint_act = cmd.F_int_act;
        if (world.in_contact("right_foot") && world.in_contact("left_foot") && !std::isnan(row.lambda_right.x()) &&
            !std::isnan(row.lambda_left.x())) {
          const RowVec6 W = wbosc::build_W_int(foot_pos(k2, "right_foot"), foot_pos(k2, "left_foot"));
          Vec6 lam;
          lam << row.lambda_right, row.lambda_left;
          row.fint_world = W * lam;
        }
      }

      if (row.t >= c.settle) {
        const bool track_x = c.dual_gains.count("com_x") > 0 && !walking;
        const double ex = track_x ? com2.x() - ct2.pos.x() : 0.0;
        const double ez = com2.z() - ct2.pos.z();
        sum.com_x_error_max = std::max(sum.com_x_error_max, std::abs(ex));
        sum.com_z_error_max = std::max(sum.com_z_error_max, std::abs(ez));
        sum.com_error_max = std::max(sum.com_error_max, std::hypot(ex, ez));
        sum.pitch_error_max = std::max(sum.pitch_error_max, std::abs(row.pitch));
        sum.roll_error_max = std::max(sum.roll_error_max, std::abs(row.roll));
        sum.com_speed_max = std::max(sum.com_speed_max, std::hypot(comd2.x(), comd2.y()));
        if (!std::isnan(row.fint_world)) {
          const double e = std::abs(row.fint_world - row.fint_ref);
          sum.fint_error_max = std::isnan(sum.fint_error_max) ? e : std::max(sum.fint_error_max, e);
          fint_sum += e;
          ++fint_n;
        }
      }
      if (!c.pushes.empty()) push_trace.emplace_back(row.t, com2.x() - ct2.pos.x());

      if (com2.z() - c.terrain.height < c.com_min) fall("com-height");
      if (std::abs(row.pitch) > c.pitch_max || std::abs(row.roll) > c.pitch_max) fall("attitude");

      if (tick % c.log_decimation == 0) res.log.push_back(std::move(row));
      ++tick;
    }
    sum.completed = !sum.fell;
  } catch (const SimulationDivergedError& e) {
    sum.error = e.what();
    sum.fell = true;
    sum.fall_reason = "diverged";
    sum.fall_time = world.time();
  } catch (const Error& e) {
    sum.error = e.what();
    sum.fell = true;
    sum.fall_reason = "controller-error";
    sum.fall_time = world.time();
  }
  sum.sim_time = world.time();
  if (fint_n > 0) sum.fint_error_mean = fint_sum / static_cast<double>(fint_n);
  if (!c.pushes.empty()) {
    const auto [peak, settle] = detail::settling(push_trace, c.pushes.front().start + c.pushes.front().duration);
    sum.push_peak = peak;
    sum.push_settling = settle;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Output

inline std::vector<std::string> coordinate_names(const RobotModel& m) {
  std::vector<std::string> n = m.planar() ? std::vector<std::string>{"x", "z", "pitch"}
                                          : std::vector<std::string>{"x", "y", "z", "yaw", "pitch", "roll"};
  for (int i = m.base_dofs(); i < m.dofs(); ++i) n.push_back(m.body(i).name);
  return n;
}

inline void write_timeseries_csv(const std::vector<LogRow>& rows, const RobotModel& m, std::ostream& os) {
  const auto names = coordinate_names(m);
  os << "t,phase,steps";
  for (const auto& n : names) os << ",q_" << n;
  for (const auto& n : names) os << ",qd_" << n;
  for (int i = m.base_dofs(); i < m.dofs(); ++i) os << ",tau_cmd_" << m.body(i).name;
  for (int i = m.base_dofs(); i < m.dofs(); ++i) os << ",tau_del_" << m.body(i).name;
  os << ",lambda_r_x,lambda_r_y,lambda_r_z,lambda_l_x,lambda_l_y,lambda_l_z,fint_ref,fint_act,fint_world"
        ",com_x,com_y,com_z,com_ref_x,com_ref_y,com_ref_z,pitch,roll"
        ",swing_ref_x,swing_ref_y,swing_ref_z,swing_x,swing_y,swing_z,est_error\n";
  os << std::setprecision(10);
  auto vec = [&](const auto& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) os << ',' << v[i];
  };
  for (const auto& r : rows) {
    os << r.t << ',' << to_string(r.phase) << ',' << r.steps;
    vec(r.q);
    vec(r.qdot);
    vec(r.tau_cmd);
    vec(r.tau_del);
    vec(r.lambda_right);
    vec(r.lambda_left);
    os << ',' << r.fint_ref << ',' << r.fint_act << ',' << r.fint_world;
    vec(r.com);
    vec(r.com_ref);
    os << ',' << r.pitch << ',' << r.roll;
    vec(r.swing_ref);
    vec(r.swing_pos);
    os << ',' << r.est_error << '\n';
  }
}

inline json summary_json(const RunSummary& s) {
  auto num = [](double v) -> json { return std::isfinite(v) ? json(v) : json(nullptr); };
  json j;
  j["scenario"] = s.scenario;
  j["completed"] = s.completed;
  j["fell"] = s.fell;
  j["fall_reason"] = s.fall_reason;
  j["fall_time"] = num(s.fall_time);
  j["error"] = s.error;
  j["steps"] = s.steps;
  j["sim_time"] = s.sim_time;
  j["envelopes"] = {{"com_error_max", num(s.com_error_max)},
                    {"com_x_error_max", num(s.com_x_error_max)},
                    {"com_z_error_max", num(s.com_z_error_max)},
                    {"pitch_error_max", num(s.pitch_error_max)},
                    {"roll_error_max", num(s.roll_error_max)},
                    {"fint_error_max", num(s.fint_error_max)},
                    {"fint_error_mean", num(s.fint_error_mean)},
                    {"torque_jump_max", num(s.torque_jump_max)},
                    {"com_speed_max", num(s.com_speed_max)},
                    {"friction_ratio_max", num(s.friction_ratio_max)},
                    {"normal_force_min", num(s.normal_force_min)},
                    {"push_peak", num(s.push_peak)},
                    {"push_settling", num(s.push_settling)},
                    {"estimator_error_max", num(s.estimator_error_max)}};
  j["saturations"] = s.saturations;
  j["events"] = s.events;
  j["config"] = s.resolved;
  return j;
}

}  // namespace pointfoot::sim

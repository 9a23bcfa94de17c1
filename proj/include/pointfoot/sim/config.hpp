#pragma once

// Scenario configuration: JSON layout, dotted-path overrides and validation.

#include "pointfoot/planner/footstep.hpp"
#include "pointfoot/sim/actuator.hpp"
#include "pointfoot/sim/world.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <map>

namespace pointfoot::sim {

using json = nlohmann::json;

struct PidGains {
  double K = 0.0, I = 0.0, D = 0.0;
};

struct ComReference {
  std::string type = "hold";  ///< hold | ellipse
  double radius_x = 0.03;
  double radius_z = 0.015;
  double period = 8.0;
  double ramp = 2.0;  ///< time to reach the constant angular rate (s)
};

struct EstimatorSettings {
  bool enabled = false;
  int latency_ticks = 15;
  double mocap_rate = 480.0;
  Vec3 gyro_bias = Vec3::Zero();
  double gyro_noise = 0.0;
  double led_noise = 0.0;
  double p_visible = 1.0;
};

struct ScenarioConfig {
  std::string scenario;
  std::filesystem::path model;
  std::uint64_t seed = 1;
  double duration = 30.0;
  int steps = 0;  ///< stop after this many touchdowns (0: run for `duration`)

  double dt = 1e-4;
  double control_dt = 1e-3;

  Terrain terrain;
  double mu = 1.0;

  double half_stance = 0.1;
  double lateral = 0.1;
  double hip_height = 0.8;
  Vec3 initial_velocity = Vec3::Zero();

  SeaParams actuator;
  std::map<std::string, TorqueGains> stance_torque;  ///< keys: hip, knee, abduction
  std::map<std::string, TorqueGains> swing_torque;   ///< keys: hip_right, knee_left, ...

  bool omit_coriolis = false;
  bool rotor_inertia = true;
  bool transitions = true;
  double integral_limit = 0.05;
  bool lock_base_x = false;

  std::map<std::string, PidGains> dual_gains;    ///< com_x, com_y, com_z, pitch, roll
  std::map<std::string, PidGains> single_gains;  ///< adds foot_x, foot_y, foot_z

  bool internal_enabled = false;
  double internal_ref = 100.0;
  double internal_KF = 1.0;
  bool internal_feedback = true;

  planner::PlanParams plan;
  double initial_dual = 0.5;  ///< settling time in dual support before the first step (s)
  bool planner_enabled = false;
  double observer_gain_x = 1.0, observer_gain_v = 1.0;
  double min_landing = 0.1;

  double apex = 0.05;
  double touchdown_speed = 0.05;
  std::string first_swing = "right";

  ComReference com_ref;
  std::vector<Push> pushes;

  double com_min = 0.5;
  double pitch_max = 0.8;
  double settle = 2.0;  ///< metrics ignore the first `settle` seconds

  EstimatorSettings estimator;
  int log_decimation = 1;

  json resolved;  ///< configuration after overrides, echoed into the run summary
};

/// Applies "a.b.c=value"; the value is parsed as JSON when possible and kept
/// as a string otherwise. Missing intermediate objects are created.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  size_t pos = 0;
  while (true) {
    const auto dot = key.find('.', pos);
    const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component", {key});
    if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a non-object", {key});
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    pos = dot + 1;
  }
}

namespace detail {

/// Reads typed fields and records every problem with its dotted path.
class Reader {
 public:
  std::vector<std::string> errors, paths;

  void fail(const std::string& path, const std::string& msg) {
    errors.push_back(path + ": " + msg);
    paths.push_back(path);
  }

  const json* find(const json& j, const std::string& key) const {
    if (!j.is_object()) return nullptr;
    const auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
  }

  template <class T>
  void get(const json& j, const std::string& key, const std::string& path, T& out) {
    const json* v = find(j, key);
    if (!v) return;
    try {
      out = v->get<T>();
    } catch (const json::exception&) {
      fail(path, "has the wrong type");
    }
  }

  void number(const json& j, const std::string& key, const std::string& path, double& out, double lo = -INFINITY,
              bool lo_open = false) {
    const json* v = find(j, key);
    if (!v) return;
    if (!v->is_number()) return fail(path, "must be a number");
    const double x = v->get<double>();
    if (lo_open ? !(x > lo) : !(x >= lo))
      return fail(path, std::string("must be ") + (lo_open ? "> " : ">= ") + std::to_string(lo));
    out = x;
  }

  void vec3(const json& j, const std::string& key, const std::string& path, Vec3& out, int n = 3) {
    const json* v = find(j, key);
    if (!v) return;
    if (!v->is_array() || v->size() < static_cast<size_t>(n) || v->size() > 3)
      return fail(path, "must be an array of " + std::to_string(n) + " numbers");
    Vec3 r = Vec3::Zero();
    for (size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) return fail(path, "must contain numbers");
      r[static_cast<Eigen::Index>(i)] = (*v)[i].get<double>();
    }
    out = r;
  }

  void pid_table(const json& j, const std::string& key, const std::string& path, std::map<std::string, PidGains>& out) {
    const json* v = find(j, key);
    if (!v) return;
    if (!v->is_object()) return fail(path, "must be an object of [K, I, D] triples");
    for (const auto& [name, g] : v->items()) {
      const std::string p = path + "." + name;
      if (!g.is_array() || g.size() != 3) {
        fail(p, "must be [K, I, D]");
        continue;
      }
      static const char* labels[] = {"K", "I", "D"};
      PidGains pg;
      double* dst[] = {&pg.K, &pg.I, &pg.D};
      bool ok = true;
      for (size_t k = 0; k < 3; ++k) {
        if (!g[k].is_number()) {
          fail(p + "." + labels[k], "must be a number");
          ok = false;
          continue;
        }
        *dst[k] = g[k].get<double>();
        if (*dst[k] < 0.0) {
          fail(p + "." + labels[k], "gain must be non-negative");
          ok = false;
        }
      }
      if (ok) out[name] = pg;
    }
  }

  void torque_table(const json& j, const std::string& key, const std::string& path,
                    std::map<std::string, TorqueGains>& out) {
    const json* v = find(j, key);
    if (!v) return;
    if (!v->is_object()) return fail(path, "must be an object of [K_P, K_I] pairs");
    for (const auto& [name, g] : v->items()) {
      const std::string p = path + "." + name;
      if (!g.is_array() || g.size() != 2 || !g[0].is_number() || !g[1].is_number()) {
        fail(p, "must be [K_P, K_I]");
        continue;
      }
      const TorqueGains tg{g[0].get<double>(), g[1].get<double>()};
      if (tg.Kp < 0.0 || tg.Ki < 0.0) {
        fail(p, "torque gains must be non-negative");
        continue;
      }
      out[name] = tg;
    }
  }
};

}  // namespace detail

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> n{"split_terrain", "stepping", "undirected_walking"};
  return n;
}

/// Builds a validated configuration from a JSON document. `base_dir`
/// resolves a relative model path.
inline ScenarioConfig config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  detail::Reader r;
  ScenarioConfig c;
  c.resolved = doc;
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object", {"<root>"});

  r.get(doc, "scenario", "scenario", c.scenario);
  if (std::find(scenario_names().begin(), scenario_names().end(), c.scenario) == scenario_names().end())
    r.fail("scenario", "must be one of split_terrain, stepping, undirected_walking");
  std::string model;
  r.get(doc, "model", "model", model);
  if (model.empty()) r.fail("model", "is required");
  else c.model = std::filesystem::path(model).is_absolute() ? std::filesystem::path(model) : base_dir / model;
  r.get(doc, "seed", "seed", c.seed);
  r.number(doc, "duration", "duration", c.duration, 0.0, true);
  r.get(doc, "steps", "steps", c.steps);
  if (c.steps < 0) r.fail("steps", "must be non-negative");

  if (const json* s = r.find(doc, "sim")) {
    r.number(*s, "dt", "sim.dt", c.dt, 0.0, true);
    r.number(*s, "control_dt", "sim.control_dt", c.control_dt, 0.0, true);
  }
  if (!(c.dt >= 1e-5 && c.dt <= 1e-3)) r.fail("sim.dt", "must lie in [1e-5, 1e-3]");
  const double ratio = c.control_dt / c.dt;
  if (!(ratio >= 1.0) || std::abs(ratio - std::round(ratio)) > 1e-9)
    r.fail("sim.control_dt", "must be a positive multiple of sim.dt");

  if (const json* t = r.find(doc, "terrain")) {
    std::string type = "flat";
    r.get(*t, "type", "terrain.type", type);
    if (type == "flat") c.terrain.kind = Terrain::Kind::Flat;
    else if (type == "wedges") c.terrain.kind = Terrain::Kind::Wedges;
    else r.fail("terrain.type", "must be flat or wedges");
    double deg = 45.0;
    r.number(*t, "angle_deg", "terrain.angle_deg", deg, 0.0, true);
    if (deg >= 89.0) r.fail("terrain.angle_deg", "must be below 89");
    c.terrain.angle = deg * M_PI / 180.0;
    r.number(*t, "gap", "terrain.gap", c.terrain.gap, 0.0);
    r.number(*t, "height", "terrain.height", c.terrain.height);
    r.number(*t, "mu", "terrain.mu", c.mu, 0.0, true);
  }

  if (const json* s = r.find(doc, "stance")) {
    r.number(*s, "half_stance", "stance.half_stance", c.half_stance);
    r.number(*s, "lateral", "stance.lateral", c.lateral, 0.0);
    r.number(*s, "hip_height", "stance.hip_height", c.hip_height, 0.0, true);
  }
  if (const json* s = r.find(doc, "initial")) r.vec3(*s, "com_velocity", "initial.com_velocity", c.initial_velocity, 1);

  if (const json* a = r.find(doc, "actuator")) {
    std::string mode = "ideal";
    r.get(*a, "mode", "actuator.mode", mode);
    if (mode == "ideal") c.actuator.mode = ActuatorMode::Ideal;
    else if (mode == "sea_lag") c.actuator.mode = ActuatorMode::SeaLag;
    else r.fail("actuator.mode", "must be ideal or sea_lag");
    r.number(*a, "motor_lag", "actuator.motor_lag", c.actuator.motor_lag, 0.0, true);
    r.number(*a, "dry_friction", "actuator.dry_friction", c.actuator.dry_friction, 0.0);
  }
  if (const json* tg = r.find(doc, "torque_gains")) {
    r.torque_table(*tg, "stance", "torque_gains.stance", c.stance_torque);
    r.torque_table(*tg, "swing", "torque_gains.swing", c.swing_torque);
  }

  if (const json* k = r.find(doc, "controller")) {
    r.get(*k, "omit_coriolis", "controller.omit_coriolis", c.omit_coriolis);
    r.get(*k, "rotor_inertia", "controller.rotor_inertia", c.rotor_inertia);
    r.get(*k, "transitions", "controller.transitions", c.transitions);
    r.number(*k, "integral_limit", "controller.integral_limit", c.integral_limit, 0.0);
    r.get(*k, "lock_base_x", "controller.lock_base_x", c.lock_base_x);
  }

  if (const json* g = r.find(doc, "gains")) {
    r.pid_table(*g, "dual", "gains.dual", c.dual_gains);
    r.pid_table(*g, "single", "gains.single", c.single_gains);
  }
  if (c.dual_gains.empty()) r.fail("gains.dual", "is required");
  if (c.scenario != "split_terrain" && c.single_gains.empty()) r.fail("gains.single", "is required for stepping");

  if (const json* f = r.find(doc, "internal_force")) {
    r.get(*f, "enabled", "internal_force.enabled", c.internal_enabled);
    r.number(*f, "ref", "internal_force.ref", c.internal_ref);
    r.number(*f, "K_F", "internal_force.K_F", c.internal_KF, 0.0);
    r.get(*f, "feedback", "internal_force.feedback", c.internal_feedback);
  }

  if (const json* p = r.find(doc, "phases")) {
    r.number(*p, "transition", "phases.transition", c.plan.transition, 0.0, true);
    r.number(*p, "lifting", "phases.lifting", c.plan.lifting, 0.0, true);
    r.number(*p, "landing", "phases.landing", c.plan.landing, 0.0, true);
    r.number(*p, "dual", "phases.dual", c.plan.dual, 0.0, true);
    r.number(*p, "initial_dual", "phases.initial_dual", c.initial_dual, 0.0);
  }
  if (const json* p = r.find(doc, "planner")) {
    r.get(*p, "enabled", "planner.enabled", c.planner_enabled);
    r.number(*p, "t_reversal", "planner.t_reversal", c.plan.t_reversal, 0.0, true);
    r.number(*p, "impact_bias_x", "planner.impact_bias_x", c.plan.impact_bias_x);
    r.number(*p, "impact_bias_y", "planner.impact_bias_y", c.plan.impact_bias_y);
    r.number(*p, "trigger_fraction", "planner.trigger_fraction", c.plan.trigger_fraction, 0.0);
    if (c.plan.trigger_fraction > 1.0) r.fail("planner.trigger_fraction", "must be <= 1");
    r.number(*p, "ydot_max", "planner.ydot_max", c.plan.ydot_max, 0.0, true);
    r.number(*p, "ydot_min", "planner.ydot_min", c.plan.ydot_min, 0.0, true);
    if (!(c.plan.ydot_max > c.plan.ydot_min)) r.fail("planner.ydot_max", "must exceed planner.ydot_min");
    r.number(*p, "max_extension", "planner.max_extension", c.plan.max_extension, 0.0);
    r.number(*p, "reach_x", "planner.reach_x", c.plan.reach_x, 0.0, true);
    r.number(*p, "reach_y", "planner.reach_y", c.plan.reach_y, 0.0, true);
    r.number(*p, "min_landing", "planner.min_landing", c.min_landing, 0.0, true);
    try {
      c.plan.validate();
    } catch (const PlannerError& e) {
      r.fail("planner", e.what());
    }
    if (const json* og = r.find(*p, "observer_gain")) {
      if (!og->is_array() || og->size() != 2 || !(*og)[0].is_number() || !(*og)[1].is_number()) {
        r.fail("planner.observer_gain", "must be [position gain, velocity gain]");
      } else {
        c.observer_gain_x = (*og)[0].get<double>();
        c.observer_gain_v = (*og)[1].get<double>();
        if (!(c.observer_gain_x > 0 && c.observer_gain_x <= 1 && c.observer_gain_v > 0 && c.observer_gain_v <= 1))
          r.fail("planner.observer_gain", "gains must lie in (0, 1]");
      }
    }
  }

  if (const json* s = r.find(doc, "swing")) {
    r.number(*s, "apex", "swing.apex", c.apex, 0.0, true);
    r.number(*s, "touchdown_speed", "swing.touchdown_speed", c.touchdown_speed, 0.0);
    r.get(*s, "first", "swing.first", c.first_swing);
    if (c.first_swing != "right" && c.first_swing != "left") r.fail("swing.first", "must be right or left");
  }

  if (const json* cr = r.find(doc, "com_reference")) {
    r.get(*cr, "type", "com_reference.type", c.com_ref.type);
    if (c.com_ref.type != "hold" && c.com_ref.type != "ellipse") r.fail("com_reference.type", "must be hold or ellipse");
    r.number(*cr, "radius_x", "com_reference.radius_x", c.com_ref.radius_x, 0.0);
    r.number(*cr, "radius_z", "com_reference.radius_z", c.com_ref.radius_z, 0.0);
    r.number(*cr, "period", "com_reference.period", c.com_ref.period, 0.0, true);
    r.number(*cr, "ramp", "com_reference.ramp", c.com_ref.ramp, 0.0);
  }

  if (const json* d = r.find(doc, "disturbances")) {
    if (!d->is_array()) r.fail("disturbances", "must be an array");
    else
      for (size_t i = 0; i < d->size(); ++i) {
        const std::string p = "disturbances[" + std::to_string(i) + "]";
        Push push;
        push.body = "torso";
        r.number((*d)[i], "start", p + ".start", push.start, 0.0);
        r.number((*d)[i], "duration", p + ".duration", push.duration, 0.0, true);
        r.vec3((*d)[i], "force", p + ".force", push.force);
        r.get((*d)[i], "body", p + ".body", push.body);
        r.vec3((*d)[i], "offset", p + ".offset", push.offset);
        c.pushes.push_back(push);
      }
  }

  if (const json* f = r.find(doc, "fall")) {
    r.number(*f, "com_min", "fall.com_min", c.com_min);
    r.number(*f, "pitch_max", "fall.pitch_max", c.pitch_max, 0.0, true);
  }
  if (const json* m = r.find(doc, "metrics")) r.number(*m, "settle", "metrics.settle", c.settle, 0.0);

  if (const json* e = r.find(doc, "estimator")) {
    r.get(*e, "enabled", "estimator.enabled", c.estimator.enabled);
    r.get(*e, "latency_ticks", "estimator.latency_ticks", c.estimator.latency_ticks);
    if (c.estimator.latency_ticks < 0) r.fail("estimator.latency_ticks", "must be non-negative");
    r.number(*e, "mocap_rate", "estimator.mocap_rate", c.estimator.mocap_rate, 0.0, true);
    r.vec3(*e, "gyro_bias", "estimator.gyro_bias", c.estimator.gyro_bias);
    r.number(*e, "gyro_noise", "estimator.gyro_noise", c.estimator.gyro_noise, 0.0);
    r.number(*e, "led_noise", "estimator.led_noise", c.estimator.led_noise, 0.0);
    r.number(*e, "p_visible", "estimator.p_visible", c.estimator.p_visible, 0.0);
    if (c.estimator.p_visible > 1.0) r.fail("estimator.p_visible", "must be <= 1");
  }
  if (const json* l = r.find(doc, "log")) {
    r.get(*l, "decimation", "log.decimation", c.log_decimation);
    if (c.log_decimation < 1) r.fail("log.decimation", "must be >= 1");
  }

  if (!r.errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : r.errors) msg += "\n  " + e;
    throw ConfigError(msg, r.paths);
  }
  return c;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file " + path.string(), {path.string()});
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what(), {path.string()});
  }
}

inline ScenarioConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {}) {
  json doc = read_json_file(path);
  for (const auto& o : overrides) apply_override(doc, o);
  return config_from_json(doc, path.parent_path());
}

}  // namespace pointfoot::sim

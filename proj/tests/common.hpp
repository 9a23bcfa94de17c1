#pragma once

#include "pointfoot/model/dynamics.hpp"
#include "pointfoot/model/inverse_kinematics.hpp"

#include <random>
#include <string>

namespace pointfoot::testing {

inline std::string config_path(const std::string& rel) { return std::string(POINTFOOT_CONFIG_DIR) + "/" + rel; }

inline const model::RobotModel& planar_model() {
  static const model::RobotModel m = model::load_model(config_path("models/hume_planar.json"));
  return m;
}

inline const model::RobotModel& spatial_model() {
  static const model::RobotModel m = model::load_model(config_path("models/hume_spatial.json"));
  return m;
}

/// Random state with joint angles kept away from the straight-knee singularity.
inline model::GeneralizedState random_state(const model::RobotModel& m, std::mt19937& rng, double vel_scale = 1.0) {
  std::uniform_real_distribution<double> pos(-0.5, 0.5), vel(-vel_scale, vel_scale), knee(0.3, 1.4);
  model::GeneralizedState s;
  s.q = VecX(m.dofs());
  s.qdot = VecX(m.dofs());
  for (int i = 0; i < m.dofs(); ++i) {
    const auto& b = m.body(i);
    const bool is_knee = b.name.find("shank") != std::string::npos;
    s.q[i] = is_knee ? knee(rng) : pos(rng);
    s.qdot[i] = vel(rng);
  }
  return s;
}

inline VecX unit(int n, int k) {
  VecX e = VecX::Zero(n);
  e[k] = 1.0;
  return e;
}

/// Both feet on the ground plane z = 0 at x = +-half_stance, torso upright
/// with the hip joint at `hip_height`.
inline VecX dual_stance(const model::RobotModel& m, double half_stance = 0.1, double hip_height = 0.8) {
  VecX q = VecX::Zero(m.dofs());
  q[m.base_coordinate("z")] = hip_height;
  for (int i = 0; i < m.dofs(); ++i) {
    const auto& n = m.body(i).name;
    if (n.find("thigh") != std::string::npos) q[i] = -0.4;
    if (n.find("shank") != std::string::npos) q[i] = 0.8;
  }
  const double lateral = m.planar() ? 0.0 : 0.1;
  model::solve_leg_ik(m, q, "right_foot", Vec3(half_stance, -lateral, 0.0));
  model::solve_leg_ik(m, q, "left_foot", Vec3(-half_stance, lateral, 0.0));
  return q;
}

}  // namespace pointfoot::testing

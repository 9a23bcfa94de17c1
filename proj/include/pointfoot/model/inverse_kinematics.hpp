#pragma once

#include "pointfoot/model/dynamics.hpp"

#include <algorithm>

namespace pointfoot::model {

/// Actuated joints on the chain from the base to a contact point.
inline std::vector<int> leg_joints(const RobotModel& m, const std::string& contact) {
  std::vector<int> idx;
  for (int j = m.contact(contact).body; j >= 0 && !m.body(j).virtual_base; j = m.body(j).parent) idx.push_back(j);
  std::reverse(idx.begin(), idx.end());
  return idx;
}

/// Moves the joints of one leg (base fixed) so the contact point reaches
/// `target` in world coordinates. Damped Gauss-Newton from the current q,
/// so the starting knee sign selects the solution branch. Returns the final
/// position error.
inline double solve_leg_ik(const RobotModel& m, VecX& q, const std::string& contact, const Vec3& target,
                           int max_iter = 100, double tol = 1e-12) {
  const auto joints = leg_joints(m, contact);
  const auto& c = m.contact(contact);
  const auto axes = m.point_axes();
  const VecX zero = VecX::Zero(m.dofs());
  double err = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const Kinematics kin(m, q, zero);
    const Vec3 e3 = target - kin.point_position(c.body, c.offset);
    const MatX J3 = kin.point_jacobian3(c.body, c.offset);
    VecX e(static_cast<Eigen::Index>(axes.size()));
    MatX J(e.size(), static_cast<Eigen::Index>(joints.size()));
    for (size_t r = 0; r < axes.size(); ++r) {
      e[static_cast<Eigen::Index>(r)] = e3[axes[r]];
      for (size_t k = 0; k < joints.size(); ++k)
        J(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = J3(axes[r], joints[k]);
    }
    err = e.norm();
    if (err < tol) break;
    const MatX JJt = J * J.transpose() + 1e-10 * MatX::Identity(e.size(), e.size());
    const VecX dq = J.transpose() * JJt.ldlt().solve(e);
    for (size_t k = 0; k < joints.size(); ++k) q[joints[k]] += dq[static_cast<Eigen::Index>(k)];
  }
  return err;
}

}  // namespace pointfoot::model

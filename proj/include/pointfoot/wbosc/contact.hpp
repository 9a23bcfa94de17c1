#pragma once

#include "pointfoot/core.hpp"
#include "pointfoot/model/dynamics.hpp"

#include <string>
#include <vector>

namespace pointfoot::wbosc {

using model::DynamicsTerms;
using model::Kinematics;
using model::RobotModel;

/// One block of constraint rows (a point contact or a locked coordinate).
struct ConstraintBlock {
  std::string name;
  MatX J;
  VecX Jdot_qdot;
};

/// Active constraints with their dynamically consistent operators.
struct ContactSet {
  std::vector<std::string> names;
  std::vector<int> offsets;  ///< first row of each block in the stacked Jacobian
  std::vector<int> sizes;
  MatX J;          ///< stacked support Jacobian J_s
  VecX Jdot_qdot;  ///< stacked drift term
  MatX Ainv;
  MatX Lambda;  ///< [J_s A^-1 J_s^T]^-1
  MatX Jbar;    ///< A^-1 J_s^T Lambda_s
  MatX N;       ///< I - Jbar J_s

  int rows() const { return static_cast<int>(J.rows()); }
  bool empty() const { return J.rows() == 0; }
  int block(const std::string& n) const {
    for (size_t i = 0; i < names.size(); ++i)
      if (names[i] == n) return static_cast<int>(i);
    return -1;
  }
};

/// Contact set is rejected when J A^-1 J^T is worse conditioned than this.
inline constexpr double kMaxContactCondition = 1e10;

inline ConstraintBlock point_constraint(const RobotModel& m, const Kinematics& kin, const std::string& contact) {
  const auto& c = m.contact(contact);
  return {contact, model::select_point_rows(m, kin.point_jacobian3(c.body, c.offset)),
          model::select_point_rows(m, kin.point_bias_acceleration3(c.body, c.offset))};
}

inline ConstraintBlock coordinate_lock(const RobotModel& m, int coordinate, std::string name = "lock") {
  ConstraintBlock b{std::move(name), MatX::Zero(1, m.dofs()), VecX::Zero(1)};
  b.J(0, coordinate) = 1.0;
  return b;
}

inline ContactSet build_contact_set(const DynamicsTerms& terms, const std::vector<ConstraintBlock>& blocks) {
  const Eigen::Index n = terms.A.rows();
  ContactSet cs;
  int rows = 0;
  for (const auto& b : blocks) {
    if (b.J.cols() != n) throw ModelError("constraint '" + b.name + "' has wrong column count");
    cs.names.push_back(b.name);
    cs.offsets.push_back(rows);
    cs.sizes.push_back(static_cast<int>(b.J.rows()));
    rows += static_cast<int>(b.J.rows());
  }
  cs.J.resize(rows, n);
  cs.Jdot_qdot.resize(rows);
  for (size_t i = 0; i < blocks.size(); ++i) {
    cs.J.middleRows(cs.offsets[i], cs.sizes[i]) = blocks[i].J;
    cs.Jdot_qdot.segment(cs.offsets[i], cs.sizes[i]) = blocks[i].Jdot_qdot;
  }
  Eigen::LLT<MatX> llt(terms.A);
  if (llt.info() != Eigen::Success) throw ModelError("inertia matrix is not positive definite");
  cs.Ainv = llt.solve(MatX::Identity(n, n));
  if (rows == 0) {
    cs.Lambda.resize(0, 0);
    cs.Jbar = MatX::Zero(n, 0);
    cs.N = MatX::Identity(n, n);
    return cs;
  }
  const MatX Phi = cs.J * cs.Ainv * cs.J.transpose();
  VecX ev;
  const double cond = linalg::spd_condition(Phi, &ev);
  if (!(cond < kMaxContactCondition)) {
    throw SingularContactError("support Jacobian is rank deficient (condition " + std::to_string(cond) +
                                   "), singular values " + format_vector(ev),
                               ev);
  }
  cs.Lambda = Phi.ldlt().solve(MatX::Identity(rows, rows));
  cs.Lambda = 0.5 * (cs.Lambda + cs.Lambda.transpose());
  cs.Jbar = cs.Ainv * cs.J.transpose() * cs.Lambda;
  cs.N = MatX::Identity(n, n) - cs.Jbar * cs.J;
  return cs;
}

struct ConstrainedAcceleration {
  VecX qddot;
  VecX lambda;  ///< force exerted by the robot on each constraint
};

/// Solves A qdd + b + g + J^T lambda = U^T tau + f_ext with J qdd + Jdot qdot = 0.
/// `generalized_external` is an optional additional generalized force.
inline ConstrainedAcceleration constrained_forward_dynamics(const DynamicsTerms& terms, const ContactSet& cs,
                                                            const VecX& tau_control,
                                                            const VecX& generalized_external = VecX()) {
  if (tau_control.size() != terms.U.rows()) throw ModelError("torque vector has wrong size");
  VecX rhs = terms.U.transpose() * tau_control - terms.b - terms.g;
  if (generalized_external.size() > 0) rhs += generalized_external;
  ConstrainedAcceleration out;
  if (cs.empty()) {
    out.qddot = cs.Ainv * rhs;
    out.lambda.resize(0);
    return out;
  }
  out.lambda = cs.Jbar.transpose() * rhs + cs.Lambda * cs.Jdot_qdot;
  out.qddot = cs.Ainv * (rhs - cs.J.transpose() * out.lambda);
  return out;
}

}  // namespace pointfoot::wbosc

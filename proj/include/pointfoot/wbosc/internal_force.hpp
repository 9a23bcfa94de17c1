#pragma once

// Tension between two point contacts and its feedback regulation.

#include "pointfoot/wbosc/projection.hpp"

namespace pointfoot::wbosc {

using RowVec6 = Eigen::Matrix<double, 1, 6>;

/// Minimum foot separation for a defined tension direction (m).
inline constexpr double kMinContactSeparation = 1e-6;

/// W_int = S_t R_t Delta_t for stacked reactions (f_R; f_L). Delta_t takes
/// the difference f_R - f_L, R_t rotates it into the frame whose x axis
/// runs from the left to the right contact, and S_t keeps that tension row.
inline RowVec6 build_W_int(const Vec3& P_R, const Vec3& P_L) {
  const Vec3 d = P_R - P_L;
  const double len = d.norm();
  if (!(len > kMinContactSeparation))
    throw DegenerateGeometryError("contact points coincide (separation " + std::to_string(len) + " m)");
  const Vec3 xh = d / len;
  Vec3 yh(-xh.y(), xh.x(), 0.0);
  if (yh.norm() > 1e-12) yh.normalize(); else yh = Vec3::UnitY();
  Mat3 Rt;
  Rt.row(0) = xh.transpose();
  Rt.row(1) = yh.transpose();
  Rt.row(2) = xh.cross(yh).transpose();
  Eigen::Matrix<double, 3, 6> Dt;
  Dt << Mat3::Identity(), -Mat3::Identity();
  Eigen::Matrix<double, 1, 3> St(1.0, 0.0, 0.0);
  return St * Rt * Dt;
}

/// Lays a 1x6 W_int onto the rows of a contact set, picking the (x, z) or
/// (x, y, z) rows of the two contacts and leaving other constraint rows zero.
inline MatX internal_force_matrix(const RobotModel& m, const ContactSet& cs, const RowVec6& W6,
                                  const std::string& right, const std::string& left) {
  const int r = cs.block(right), l = cs.block(left);
  if (r < 0 || l < 0)
    throw InternalForceError("internal force needs both '" + right + "' and '" + left + "' in contact");
  MatX W = MatX::Zero(1, cs.rows());
  const auto axes = m.point_axes();
  for (size_t k = 0; k < axes.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    W(0, cs.offsets[static_cast<size_t>(r)] + kk) = W6(axes[k]);
    W(0, cs.offsets[static_cast<size_t>(l)] + kk) = W6(3 + axes[k]);
  }
  return W;
}

/// Reduced internal-force Jacobian and bias terms.
struct InternalForceModel {
  MatX W;        ///< extraction matrix over the contact-set rows
  MatX Jbar_il;  ///< L* U Jbar_s W^T (n_act x n_int)
  MatX J_il;     ///< left pseudo-inverse of Jbar_il
  VecX mu_i;
  VecX p_i;
};

inline InternalForceModel internal_force_model(const DynamicsTerms& terms, const ContactSet& cs,
                                               const Projection& pr, const MatX& W, bool omit_coriolis) {
  if (W.cols() != cs.rows()) throw InternalForceError("W_int does not match the contact rows");
  InternalForceModel im;
  im.W = W;
  im.Jbar_il = pr.Lstar * terms.U * cs.Jbar * W.transpose();
  const MatX gram = im.Jbar_il.transpose() * im.Jbar_il;
  VecX ev;
  if (!(linalg::spd_condition(gram, &ev) < kMaxContactCondition))
    throw DegenerateGeometryError("internal-force Jacobian is rank deficient, eigenvalues " + format_vector(ev));
  im.J_il = gram.ldlt().solve(im.Jbar_il.transpose());
  const VecX b = omit_coriolis ? VecX::Zero(terms.b.size()) : terms.b;
  im.mu_i = W * (cs.Jbar.transpose() * b - cs.Lambda * cs.Jdot_qdot);
  im.p_i = W * (cs.Jbar.transpose() * terms.g);
  return im;
}

/// Internal forces induced by the task torques J*^T F_task.
inline VecX task_induced_internal_force(const InternalForceModel& im, const DynamicsTerms& terms,
                                        const ContactSet& cs, const VecX& tau_task) {
  return im.W * cs.Jbar.transpose() * terms.U.transpose() * tau_task;
}

/// Internal force implied by sensed joint torques.
inline VecX actual_internal_force(const MatX& W, const ContactSet& cs, const DynamicsTerms& terms,
                                  const VecX& tau_sensor) {
  if (cs.rows() == 0 || W.cols() != cs.rows())
    throw InternalForceError("internal force is only defined with both contacts active");
  return W * predicted_reaction(terms, cs, tau_sensor);
}

/// Gamma_int = J_il^T (F_ref - F_int,t + mu_i + p_i + K_F (F_ref - F_act)).
inline VecX internal_torque(const InternalForceModel& im, const VecX& F_ref, const VecX& F_int_task,
                            const VecX& F_act, double K_F) {
  const VecX target = F_ref - F_int_task + im.mu_i + im.p_i + K_F * (F_ref - F_act);
  return im.J_il.transpose() * target;
}

}  // namespace pointfoot::wbosc

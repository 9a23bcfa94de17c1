#pragma once

// Contact-consistent operators for under-actuated whole-body control.

#include "pointfoot/wbosc/contact.hpp"

#include <algorithm>
#include <cmath>

namespace pointfoot::wbosc {

/// Operators built from (U N_s). Phi = U N_s A^-1 N_s^T U^T is rank deficient
/// whenever contacts remove actuated freedom, so its inverse is the damped
/// pseudo-inverse of linalg::pinv_psd.
struct Projection {
  MatX UNs;       ///< U N_s
  MatX Phi;       ///< U N_s A^-1 N_s^T U^T
  MatX Phi_pinv;
  MatX UNs_bar;   ///< dynamically consistent inverse of U N_s (n_dofs x n_act)
  MatX Lstar;     ///< I - U N_s UNs_bar, projector onto internal-force torques
};

inline Projection make_projection(const DynamicsTerms& terms, const ContactSet& cs) {
  Projection p;
  p.UNs = terms.U * cs.N;
  // A^-1 N_s^T = N_s A^-1 and N_s A^-1 N_s^T = N_s A^-1.
  const MatX AinvNsT = cs.N * cs.Ainv;
  p.Phi = terms.U * AinvNsT * terms.U.transpose();
  p.Phi = 0.5 * (p.Phi + p.Phi.transpose());
  p.Phi_pinv = linalg::pinv_psd(p.Phi);
  p.UNs_bar = AinvNsT * terms.U.transpose() * p.Phi_pinv;
  // U N_s UNs_bar = Phi Phi^+, so L* comes straight from the eigenbasis of Phi.
  // Forming the product instead loses eps / s_min when Phi has a small but
  // non-zero eigenvalue.
  if (p.Phi.size() == 0) {
    p.Lstar = p.Phi;
    return p;
  }
  Eigen::SelfAdjointEigenSolver<MatX> es(p.Phi);
  VecX keep(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < keep.size(); ++i) {
    const double v = std::max(es.eigenvalues()[i], 0.0);
    keep[i] = v > linalg::kPinvThreshold ? 0.0 : 1.0 - v * v / (v * v + linalg::kPinvDamping);
  }
  p.Lstar = es.eigenvectors() * keep.asDiagonal() * es.eigenvectors().transpose();
  return p;
}

/// J* = J UNs_bar: maps actuated velocities to task velocities.
inline MatX task_jacobian_star(const MatX& J, const Projection& p) {
  if (J.cols() != p.UNs_bar.rows())
    throw ModelError("task Jacobian has " + std::to_string(J.cols()) + " columns, model has " +
                     std::to_string(p.UNs_bar.rows()) + " dofs");
  return J * p.UNs_bar;
}

/// Operational-space model of a (stacked) task under the current contacts.
struct TaskSpaceModel {
  MatX Jstar;
  MatX Lambda;  ///< [J* Phi J*^T]^-1
  VecX mu;      ///< velocity-dependent forces
  VecX p;       ///< gravity forces
  double condition = 1.0;
};

/// Rejects a task set whose inverse inertia is worse conditioned than this.
inline constexpr double kMaxTaskCondition = 1e10;

inline TaskSpaceModel task_space_model(const DynamicsTerms& terms, const ContactSet& cs, const Projection& pr,
                                       const MatX& J, const VecX& Jdot_qdot) {
  TaskSpaceModel m;
  m.Jstar = task_jacobian_star(J, pr);
  const Eigen::Index k = J.rows();
  if (Jdot_qdot.size() != k) throw ModelError("task drift term has wrong size");
  if (k == 0) {
    m.Lambda.resize(0, 0);
    m.mu.resize(0);
    m.p.resize(0);
    return m;
  }
  const MatX inv_lambda = m.Jstar * pr.Phi * m.Jstar.transpose();
  VecX ev;
  m.condition = linalg::spd_condition(inv_lambda, &ev);
  // Also compare against the unconstrained task inertia so a task that the
  // contacts lock completely (J* ~ 0) is caught even if J* Phi J*^T is
  // uniformly tiny.
  const MatX free_inv = J * cs.Ainv * J.transpose();
  const double scale = Eigen::SelfAdjointEigenSolver<MatX>(free_inv, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  if (ev.size() > 0) m.condition = std::max(m.condition, ev[0] > 0.0 ? scale / ev[0] : INFINITY);
  if (!(m.condition < kMaxTaskCondition)) {
    throw IllConditionedTaskError(
        "task inertia is ill-conditioned (condition " + std::to_string(m.condition) + ")", m.condition);
  }
  m.Lambda = inv_lambda.ldlt().solve(MatX::Identity(k, k));
  const MatX JAinvNsT = J * cs.N * cs.Ainv;
  VecX drift = JAinvNsT * terms.b - Jdot_qdot;
  if (!cs.empty()) drift += J * cs.Jbar * cs.Jdot_qdot;
  m.mu = m.Lambda * drift;
  m.p = m.Lambda * (JAinvNsT * terms.g);
  return m;
}

/// F = Lambda* u + mu* + p* (+ feedforward and external-force terms).
inline VecX task_force(const TaskSpaceModel& m, const VecX& u, bool omit_coriolis, const VecX& extra = VecX()) {
  if (u.size() != m.Lambda.rows()) throw ModelError("task command has wrong size");
  VecX F = m.Lambda * u + m.p;
  if (!omit_coriolis) F += m.mu;
  if (extra.size() > 0) F += extra;
  return F;
}

/// Constraint force the robot would exert under actuated torque tau
/// (second row of the augmented constrained dynamics).
inline VecX predicted_reaction(const DynamicsTerms& terms, const ContactSet& cs, const VecX& tau) {
  if (cs.empty()) return VecX(0);
  return cs.Jbar.transpose() * (terms.U.transpose() * tau - terms.b - terms.g) + cs.Lambda * cs.Jdot_qdot;
}

}  // namespace pointfoot::wbosc

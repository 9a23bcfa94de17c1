#pragma once

// Floating-base rigid-body kinematics and dynamics. Everything is expressed
// in world coordinates at the world origin (spatial vectors are
// [angular; linear]), which removes all frame transforms from the composite
// rigid body and recursive Newton-Euler passes.

#include "pointfoot/core.hpp"
#include "pointfoot/model/robot_model.hpp"

#include <Eigen/Geometry>

namespace pointfoot::model {

struct GeneralizedState {
  VecX q;
  VecX qdot;
  double time = 0.0;
};

struct DynamicsTerms {
  MatX A;  ///< inertia matrix
  VecX b;  ///< Coriolis/centrifugal generalized force
  VecX g;  ///< gravity generalized force
  MatX U;  ///< under-actuation selection
};

namespace spatial {

inline Vec6 cross_motion(const Vec6& v, const Vec6& m) {
  Vec6 r;
  r.head<3>() = v.head<3>().cross(m.head<3>());
  r.tail<3>() = v.head<3>().cross(m.tail<3>()) + v.tail<3>().cross(m.head<3>());
  return r;
}

inline Vec6 cross_force(const Vec6& v, const Vec6& f) {
  Vec6 r;
  r.head<3>() = v.head<3>().cross(f.head<3>()) + v.tail<3>().cross(f.tail<3>());
  r.tail<3>() = v.head<3>().cross(f.tail<3>());
  return r;
}

/// Spatial inertia at the world origin of a body with mass m, world COM c
/// and world-aligned rotational inertia ic about the COM.
inline Mat6 inertia_at_origin(double m, const Vec3& c, const Mat3& ic) {
  const Mat3 cx = skew(c);
  Mat6 I;
  I.topLeftCorner<3, 3>() = ic + m * cx * cx.transpose();
  I.topRightCorner<3, 3>() = m * cx;
  I.bottomLeftCorner<3, 3>() = m * cx.transpose();
  I.bottomRightCorner<3, 3>() = m * Mat3::Identity();
  return I;
}

}  // namespace spatial

/// Forward kinematics of every body for one (q, qdot) pair, with the
/// velocity-product accelerations needed for Jdot*qdot terms.
class Kinematics {
 public:
  Kinematics(const RobotModel& model, const VecX& q, const VecX& qdot) : model_(&model) {
    model.check_state(q, qdot);
    const int n = model.dofs();
    R_.resize(static_cast<size_t>(n));
    p_.resize(static_cast<size_t>(n));
    S_.resize(static_cast<size_t>(n));
    v_.resize(static_cast<size_t>(n));
    abias_.resize(static_cast<size_t>(n));
    com_.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      const Body& b = model.body(i);
      Mat3 Rp = Mat3::Identity();
      Vec3 pp = Vec3::Zero();
      Vec6 vp = Vec6::Zero(), ap = Vec6::Zero();
      if (b.parent >= 0) {
        const auto par = static_cast<size_t>(b.parent);
        Rp = R_[par];
        pp = p_[par];
        vp = v_[par];
        ap = abias_[par];
      }
      const Mat3 Rj = Rp * b.joint_rotation;
      const Vec3 oj = pp + Rp * b.joint_offset;
      const Vec3 a = Rj * b.axis;
      Vec6 S;
      const auto k = static_cast<size_t>(i);
      if (b.joint == JointKind::Revolute) {
        R_[k] = Rj * Eigen::AngleAxisd(q[i], b.axis).toRotationMatrix();
        p_[k] = oj;
        S << a, oj.cross(a);
      } else {
        R_[k] = Rj;
        p_[k] = oj + a * q[i];
        S << Vec3::Zero(), a;
      }
      S_[k] = S;
      v_[k] = vp + S * qdot[i];
      abias_[k] = ap + spatial::cross_motion(v_[k], S) * qdot[i];
      com_[k] = p_[k] + R_[k] * b.com;
    }
  }

  const RobotModel& model() const { return *model_; }
  const Mat3& rotation(int i) const { return R_[static_cast<size_t>(i)]; }
  const Vec3& origin(int i) const { return p_[static_cast<size_t>(i)]; }
  const Vec6& motion_subspace(int i) const { return S_[static_cast<size_t>(i)]; }
  const Vec6& velocity(int i) const { return v_[static_cast<size_t>(i)]; }
  const Vec3& body_com(int i) const { return com_[static_cast<size_t>(i)]; }

  Vec3 point_position(int body, const Vec3& offset) const { return origin(body) + rotation(body) * offset; }

  /// Full 3-row world Jacobian of a body-fixed point.
  MatX point_jacobian3(int body, const Vec3& offset) const {
    check_body(body);
    const Vec3 P = point_position(body, offset);
    MatX J = MatX::Zero(3, model_->dofs());
    for (int j = body; j >= 0; j = model_->body(j).parent) {
      const Vec6& S = motion_subspace(j);
      J.col(j) = S.tail<3>() + S.head<3>().cross(P);
    }
    return J;
  }

  /// Jdot*qdot of a body-fixed point (classical acceleration at zero qddot).
  Vec3 point_bias_acceleration3(int body, const Vec3& offset) const {
    check_body(body);
    const Vec3 P = point_position(body, offset);
    const Vec6& v = velocity(body);
    const Vec6& a = abias_[static_cast<size_t>(body)];
    const Vec3 vp = v.tail<3>() + v.head<3>().cross(P);
    return a.tail<3>() + a.head<3>().cross(P) + v.head<3>().cross(vp);
  }

  Vec3 point_velocity3(int body, const Vec3& offset) const {
    const Vec3 P = point_position(body, offset);
    const Vec6& v = velocity(body);
    return v.tail<3>() + v.head<3>().cross(P);
  }

  Vec3 com() const {
    Vec3 c = Vec3::Zero();
    for (int i = 0; i < model_->dofs(); ++i) c += model_->body(i).mass * body_com(i);
    return c / model_->total_mass();
  }

  MatX com_jacobian3() const {
    MatX J = MatX::Zero(3, model_->dofs());
    for (int i = 0; i < model_->dofs(); ++i) {
      const double m = model_->body(i).mass;
      if (m > 0.0) J += m * point_jacobian3(i, model_->body(i).com);
    }
    return J / model_->total_mass();
  }

  Vec3 com_bias_acceleration3() const {
    Vec3 a = Vec3::Zero();
    for (int i = 0; i < model_->dofs(); ++i) {
      const double m = model_->body(i).mass;
      if (m > 0.0) a += m * point_bias_acceleration3(i, model_->body(i).com);
    }
    return a / model_->total_mass();
  }

  Mat6 spatial_inertia(int i) const {
    const Body& b = model_->body(i);
    const Mat3& R = rotation(i);
    return spatial::inertia_at_origin(b.mass, body_com(i), R * b.inertia * R.transpose());
  }

 private:
  void check_body(int body) const {
    if (body < 0 || body >= model_->dofs()) throw ModelError("unknown body id " + std::to_string(body));
  }

  const RobotModel* model_;
  std::vector<Mat3> R_;
  std::vector<Vec3> p_;
  std::vector<Vec6> S_;
  std::vector<Vec6> v_;
  std::vector<Vec6> abias_;
  std::vector<Vec3> com_;
};

/// Keeps the rows of a 3-row point quantity that exist in the model's mode.
inline MatX select_point_rows(const RobotModel& model, const MatX& m3) {
  if (!model.planar()) return m3;
  MatX r(2, m3.cols());
  r.row(0) = m3.row(0);
  r.row(1) = m3.row(2);
  return r;
}

inline VecX select_point_rows(const RobotModel& model, const Vec3& v3) {
  if (!model.planar()) return v3;
  return Eigen::Vector2d(v3.x(), v3.z());
}

/// Composite-rigid-body inertia matrix.
inline MatX mass_matrix(const RobotModel& model, const Kinematics& kin, bool include_rotor_inertia) {
  const int n = model.dofs();
  std::vector<Mat6> Ic(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) Ic[static_cast<size_t>(i)] = kin.spatial_inertia(i);
  for (int i = n - 1; i >= 0; --i) {
    const int p = model.body(i).parent;
    if (p >= 0) Ic[static_cast<size_t>(p)] += Ic[static_cast<size_t>(i)];
  }
  MatX A = MatX::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const Vec6 F = Ic[static_cast<size_t>(i)] * kin.motion_subspace(i);
    A(i, i) = kin.motion_subspace(i).dot(F);
    for (int j = model.body(i).parent; j >= 0; j = model.body(j).parent) {
      A(i, j) = A(j, i) = kin.motion_subspace(j).dot(F);
    }
  }
  if (include_rotor_inertia) {
    for (int i : model.actuated_indices()) A(i, i) += model.body(i).rotor_inertia;
  }
  return A;
}

inline MatX mass_matrix(const RobotModel& model, const GeneralizedState& state, bool include_rotor_inertia) {
  return mass_matrix(model, Kinematics(model, state.q, state.qdot), include_rotor_inertia);
}

/// Recursive Newton-Euler inverse dynamics: returns A*qddot + b (+ g when
/// gravity is on). Rotor inertia is not part of this path.
inline VecX inverse_dynamics(const RobotModel& model, const Kinematics& kin, const VecX& qdot, const VecX& qddot,
                             bool gravity) {
  const int n = model.dofs();
  std::vector<Vec6> a(static_cast<size_t>(n)), f(static_cast<size_t>(n)), vel(static_cast<size_t>(n));
  Vec6 a0 = Vec6::Zero();
  if (gravity) a0(5) = kGravity;
  for (int i = 0; i < n; ++i) {
    const int p = model.body(i).parent;
    const Vec6& ap = p >= 0 ? a[static_cast<size_t>(p)] : a0;
    const Vec6& S = kin.motion_subspace(i);
    // velocities come from the qdot argument, not the one kin was built with
    vel[static_cast<size_t>(i)] = (p >= 0 ? vel[static_cast<size_t>(p)] : Vec6::Zero().eval()) + S * qdot[i];
    const Vec6& v = vel[static_cast<size_t>(i)];
    a[static_cast<size_t>(i)] = ap + S * qddot[i] + spatial::cross_motion(v, S) * qdot[i];
    const Mat6 I = kin.spatial_inertia(i);
    f[static_cast<size_t>(i)] = I * a[static_cast<size_t>(i)] + spatial::cross_force(v, I * v);
  }
  VecX tau(n);
  for (int i = n - 1; i >= 0; --i) {
    tau[i] = kin.motion_subspace(i).dot(f[static_cast<size_t>(i)]);
    const int p = model.body(i).parent;
    if (p >= 0) f[static_cast<size_t>(p)] += f[static_cast<size_t>(i)];
  }
  return tau;
}

/// Coriolis/centrifugal (b) and gravity (g) generalized forces.
inline std::pair<VecX, VecX> bias_forces(const RobotModel& model, const Kinematics& kin, const VecX& qdot) {
  const VecX zero = VecX::Zero(model.dofs());
  VecX g = inverse_dynamics(model, kin, zero, zero, true);
  VecX bg = inverse_dynamics(model, kin, qdot, zero, true);
  return {bg - g, g};
}

inline std::pair<VecX, VecX> bias_forces(const RobotModel& model, const GeneralizedState& state) {
  return bias_forces(model, Kinematics(model, state.q, state.qdot), state.qdot);
}

inline DynamicsTerms dynamics_terms(const RobotModel& model, const Kinematics& kin, const VecX& qdot,
                                    bool include_rotor_inertia) {
  DynamicsTerms t;
  t.A = mass_matrix(model, kin, include_rotor_inertia);
  std::tie(t.b, t.g) = bias_forces(model, kin, qdot);
  t.U = model.selection();
  return t;
}

/// Point Jacobian (2 rows planar, 3 rows spatial).
inline MatX point_jacobian(const RobotModel& model, const GeneralizedState& state, int body, const Vec3& offset) {
  Kinematics kin(model, state.q, state.qdot);
  return select_point_rows(model, kin.point_jacobian3(body, offset));
}

inline double kinetic_energy(const MatX& A, const VecX& qdot) { return 0.5 * qdot.dot(A * qdot); }

inline double potential_energy(const RobotModel& model, const Kinematics& kin) {
  double V = 0.0;
  for (int i = 0; i < model.dofs(); ++i) V += model.body(i).mass * kGravity * kin.body_com(i).z();
  return V;
}

}  // namespace pointfoot::model

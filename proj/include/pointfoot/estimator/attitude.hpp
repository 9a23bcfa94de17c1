#pragma once

// Affine least-squares fit of a marker pattern and projection onto rotations.

#include "pointfoot/core.hpp"

#include <Eigen/Geometry>

#include <array>
#include <cmath>

namespace pointfoot::estimator {

using Quat = Eigen::Quaterniond;

inline constexpr int kLedCount = 7;
using Regressor = Eigen::Matrix<double, 3 * kLedCount, 12>;
using Theta = Eigen::Matrix<double, 12, 1>;
using LedVector = Eigen::Matrix<double, 3 * kLedCount, 1>;
using VisibleMask = std::array<bool, kLedCount>;

/// Marker positions in the body frame, recentred so their mean is zero.
struct LedPattern {
  std::array<Vec3, kLedCount> z;

  static LedPattern from_points(const std::array<Vec3, kLedCount>& pts) {
    Vec3 c = Vec3::Zero();
    for (const auto& p : pts) c += p;
    c /= kLedCount;
    LedPattern lp;
    for (int i = 0; i < kLedCount; ++i) lp.z[static_cast<size_t>(i)] = pts[static_cast<size_t>(i)] - c;
    return lp;
  }

  /// Six markers at +-a on the body axes plus one at the centre. Its second
  /// moment is 2a^2 I, which makes the half-life calibration exact.
  static LedPattern octahedron(double a = 0.1) {
    return from_points({Vec3(a, 0, 0), Vec3(-a, 0, 0), Vec3(0, a, 0), Vec3(0, -a, 0), Vec3(0, 0, a), Vec3(0, 0, -a),
                        Vec3::Zero()});
  }

  Mat3 second_moment() const {
    Mat3 Z = Mat3::Zero();
    for (const auto& p : z) Z += p * p.transpose();
    return Z;
  }
};

/// theta = (x; vec(A)) with vec stacking the rows of A, so row i of the
/// regressor block for marker k is [e_i^T, e_0 z_k^T, e_1 z_k^T, e_2 z_k^T].
inline Theta theta_from(const Vec3& x, const Mat3& A) {
  Theta t;
  t.head<3>() = x;
  for (int r = 0; r < 3; ++r) t.segment<3>(3 + 3 * r) = A.row(r).transpose();
  return t;
}

inline Mat3 matrix_part(const Theta& t) {
  Mat3 A;
  for (int r = 0; r < 3; ++r) A.row(r) = t.segment<3>(3 + 3 * r).transpose();
  return A;
}

inline Regressor build_regressor(const LedPattern& p) {
  Regressor R = Regressor::Zero();
  for (int k = 0; k < kLedCount; ++k) {
    R.block<3, 3>(3 * k, 0) = Mat3::Identity();
    for (int j = 0; j < 3; ++j) R.block<1, 3>(3 * k + j, 3 + 3 * j) = p.z[static_cast<size_t>(k)].transpose();
  }
  return R;
}

/// Ordinary least-squares affine fit with every marker visible.
inline Theta solve_unregularized(const Regressor& R, const LedVector& y) {
  const Eigen::Matrix<double, 12, 12> N = R.transpose() * R;
  Eigen::JacobiSVD<Eigen::Matrix<double, 12, 12>> svd(N);
  const auto& s = svd.singularValues();
  if (s(11) <= 1e-12 * s(0)) throw EstimatorError("marker pattern is degenerate (normal matrix is singular)");
  return N.ldlt().solve(R.transpose() * y);
}

struct RegularizationWeights {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

/// lambda2 set to the mean eigenvalue of the pattern's second moment, which
/// halves a prior error on vec(A) per full-visibility update when the second
/// moment is isotropic; lambda1 = 1e-6 lambda2.
inline RegularizationWeights half_life_weights(const LedPattern& p) {
  const double l2 = p.second_moment().trace() / 3.0;
  return {1e-6 * l2, l2};
}

/// Regularized fit: the visible marker rows plus twelve prior rows weighted
/// by diag(lambda1 I3, lambda2 I9).
inline Theta solve_regularized(const Regressor& R, const LedVector& y, const VisibleMask& visible, const Theta& prior,
                               const RegularizationWeights& w) {
  Eigen::Matrix<double, 12, 12> N = Eigen::Matrix<double, 12, 12>::Zero();
  Theta rhs = Theta::Zero();
  for (int k = 0; k < kLedCount; ++k) {
    if (!visible[static_cast<size_t>(k)]) continue;
    const auto Rk = R.middleRows<3>(3 * k);
    N += Rk.transpose() * Rk;
    rhs += Rk.transpose() * y.segment<3>(3 * k);
  }
  Theta wd;
  wd << Vec3::Constant(w.lambda1), VecX::Constant(9, w.lambda2);
  N.diagonal() += wd;
  rhs += wd.cwiseProduct(prior);
  if (!(w.lambda1 > 0.0 && w.lambda2 > 0.0)) {
    // without regularization the solve needs full visibility
    Eigen::FullPivLU<Eigen::Matrix<double, 12, 12>> lu(N);
    if (lu.rank() < 12) throw EstimatorError("regularized fit is singular: positive weights are required");
    return lu.solve(rhs);
  }
  return N.ldlt().solve(rhs);
}

/// Unit quaternion whose rotation matrix is closest to A in the Frobenius
/// norm: dominant eigenvector of the symmetric 4x4 matrix K built from A,
/// with components ordered (w, x, y, z). Sign fixed so that w >= 0.
inline Quat closest_quaternion(const Mat3& A) {
  Eigen::Matrix4d K;
  K << A(0, 0) + A(1, 1) + A(2, 2), A(2, 1) - A(1, 2), A(0, 2) - A(2, 0), A(1, 0) - A(0, 1),
      A(2, 1) - A(1, 2), A(0, 0) - A(1, 1) - A(2, 2), A(0, 1) + A(1, 0), A(0, 2) + A(2, 0),
      A(0, 2) - A(2, 0), A(0, 1) + A(1, 0), A(1, 1) - A(0, 0) - A(2, 2), A(1, 2) + A(2, 1),
      A(1, 0) - A(0, 1), A(0, 2) + A(2, 0), A(1, 2) + A(2, 1), A(2, 2) - A(0, 0) - A(1, 1);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(K);
  Vec4 v = es.eigenvectors().col(3);
  if (v(0) < 0.0) v = -v;
  Quat q(v(0), v(1), v(2), v(3));
  q.normalize();
  return q;
}

/// Advances an orientation by a body-frame angular rate held over dt.
inline Quat integrate_imu(const Quat& q, const Vec3& omega, double dt) {
  if (!(dt > 0.0)) throw EstimatorError("integration step must be positive");
  const double angle = omega.norm() * dt;
  Quat dq = Quat::Identity();
  if (angle > 0.0) dq = Quat(Eigen::AngleAxisd(angle, omega.normalized()));
  Quat out = q * dq;
  out.normalize();
  return out;
}

/// Rotation angle between two orientations (rad).
inline double angle_between(const Quat& a, const Quat& b) { return a.angularDistance(b); }

}  // namespace pointfoot::estimator

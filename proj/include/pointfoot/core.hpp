#pragma once

#include <Eigen/Dense>

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pointfoot {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline constexpr double kGravity = 9.81;

/// Base class for every error raised by the library. `kind()` is a short
/// machine-readable tag used in logs and run summaries.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct ModelError : Error {
  explicit ModelError(const std::string& w) : Error("model", w) {}
};

struct SingularContactError : Error {
  SingularContactError(const std::string& w, VecX sv)
      : Error("singular-contact", w), singular_values(std::move(sv)) {}
  VecX singular_values;
};

struct IllConditionedTaskError : Error {
  IllConditionedTaskError(const std::string& w, double cond)
      : Error("ill-conditioned-task", w), condition_number(cond) {}
  double condition_number;
};

struct DegenerateGeometryError : Error {
  explicit DegenerateGeometryError(const std::string& w) : Error("degenerate-geometry", w) {}
};

struct InternalForceError : Error {
  explicit InternalForceError(const std::string& w) : Error("undefined-internal-force", w) {}
};

struct TransitionError : Error {
  explicit TransitionError(const std::string& w) : Error("transition-setup", w) {}
};

struct EstimatorError : Error {
  explicit EstimatorError(const std::string& w) : Error("estimator", w) {}
};

struct PlannerError : Error {
  PlannerError(const std::string& w, std::string ax = {})
      : Error("planner", w), axis(std::move(ax)) {}
  std::string axis;
};

struct ConfigError : Error {
  ConfigError(const std::string& w, std::vector<std::string> p = {})
      : Error("config", w), paths(std::move(p)) {}
  std::vector<std::string> paths;
};

struct SimulationDivergedError : Error {
  SimulationDivergedError(const std::string& w, VecX q_dump, VecX qdot_dump)
      : Error("simulation-diverged", w), q(std::move(q_dump)), qdot(std::move(qdot_dump)) {}
  VecX q, qdot;
};

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

inline std::string format_vector(const VecX& v) {
  std::ostringstream os;
  os << "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << "]";
  return os.str();
}

namespace linalg {

/// Singular values at or below this are treated as rank-deficient directions.
inline constexpr double kPinvThreshold = 1e-6;
/// Damping applied to those directions: s / (s^2 + eps).
inline constexpr double kPinvDamping = 1e-8;

/// SVD pseudo-inverse; singular values below kPinvThreshold are damped
/// instead of inverted so near-singular stances degrade smoothly.
inline MatX pinv(const MatX& m) {
  if (m.size() == 0) return MatX::Zero(m.cols(), m.rows());
  Eigen::JacobiSVD<MatX> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VecX& s = svd.singularValues();
  VecX sinv(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    sinv[i] = s[i] > kPinvThreshold ? 1.0 / s[i] : s[i] / (s[i] * s[i] + kPinvDamping);
  }
  return svd.matrixV() * sinv.asDiagonal() * svd.matrixU().transpose();
}

/// Pseudo-inverse of a symmetric positive semi-definite matrix via
/// eigen-decomposition; same thresholding rule as pinv().
inline MatX pinv_psd(const MatX& m) {
  if (m.size() == 0) return m;
  Eigen::SelfAdjointEigenSolver<MatX> es(0.5 * (m + m.transpose()));
  const VecX& s = es.eigenvalues();
  VecX sinv(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double v = std::max(s[i], 0.0);
    sinv[i] = v > kPinvThreshold ? 1.0 / v : v / (v * v + kPinvDamping);
  }
  return es.eigenvectors() * sinv.asDiagonal() * es.eigenvectors().transpose();
}

/// Ratio of largest to smallest eigenvalue of a symmetric matrix (inf if not PD).
inline double spd_condition(const MatX& m, VecX* eigenvalues = nullptr) {
  Eigen::SelfAdjointEigenSolver<MatX> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  const VecX& s = es.eigenvalues();
  if (eigenvalues) *eigenvalues = s;
  if (s.size() == 0) return 1.0;
  if (s[0] <= 0.0) return std::numeric_limits<double>::infinity();
  return s[s.size() - 1] / s[0];
}

}  // namespace linalg
}  // namespace pointfoot

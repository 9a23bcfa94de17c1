#pragma once

// Rigid-contact plant: RK4 on the constrained forward dynamics, post-step
// projection onto the active constraints, plastic touchdown and
// unilateral/friction detachment.

#include "pointfoot/model/dynamics.hpp"
#include "pointfoot/wbosc/contact.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace pointfoot::sim {

using model::RobotModel;

/// Flat ground or two planes rising at +-angle away from a valley along x.
struct Terrain {
  enum class Kind { Flat, Wedges };
  Kind kind = Kind::Flat;
  double height = 0.0;
  double angle = M_PI / 4;  ///< wedge inclination (rad)
  double gap = 0.0;         ///< half-width of the flat valley floor (m)

  double h(const Vec3& p) const {
    if (kind == Kind::Flat) return height;
    return height + std::tan(angle) * std::max(std::abs(p.x()) - gap, 0.0);
  }

  Vec3 normal(const Vec3& p) const {
    if (kind == Kind::Flat || std::abs(p.x()) <= gap) return Vec3::UnitZ();
    const double s = p.x() > 0 ? -1.0 : 1.0;
    return Vec3(s * std::sin(angle), 0.0, std::cos(angle));
  }

  /// Signed distance along the local normal (negative below the surface).
  double gap_distance(const Vec3& p) const { return (p.z() - h(p)) * normal(p).z(); }
};

/// Rectangular force pulse applied at a body point.
struct Push {
  double start = 0.0;
  double duration = 0.0;
  Vec3 force = Vec3::Zero();
  std::string body;
  Vec3 offset = Vec3::Zero();

  bool active(double t) const { return t >= start && t < start + duration; }
};

struct WorldOptions {
  double dt = 1e-4;
  double mu = 1.0;
  Terrain terrain;
  std::vector<Push> pushes;
  bool rotor_inertia = true;
  double max_qdot = 1e3;
  double unilateral_tol = 1e-9;
  bool touchdown = true;  ///< detect and apply plastic touchdown

  void validate() const {
    if (!(dt >= 1e-5 && dt <= 1e-3)) throw ConfigError("simulation dt must lie in [1e-5, 1e-3]", {"sim.dt"});
    if (!(mu > 0.0)) throw ConfigError("friction coefficient must be positive", {"terrain.mu"});
  }
};

enum class EventKind { Touchdown, LiftOff, Slip };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Touchdown: return "touchdown";
    case EventKind::LiftOff: return "lift-off";
    default: return "slip";
  }
}

struct WorldEvent {
  EventKind kind;
  std::string contact;
  double t = 0.0;
  double friction_ratio = 0.0;  ///< |tangential| / normal at detachment
  VecX impulse;                 ///< touchdown: constraint impulse on every active row
};

struct ActiveContact {
  std::string name;
  Vec3 anchor;
};

struct CoordinateLock {
  int coordinate;
  double value;
};

struct ContactForce {
  std::string name;
  Vec3 reaction;  ///< force of the ground on the robot (world)
  double normal = 0.0;
  double tangential = 0.0;
};

class World {
 public:
  World(const RobotModel& m, WorldOptions opt, VecX q, VecX qdot)
      : m_(&m), opt_(std::move(opt)), q_(std::move(q)), qdot_(std::move(qdot)) {
    opt_.validate();
    m.check_state(q_, qdot_);
    for (const auto& p : opt_.pushes) m.body_index(p.body);
  }

  const RobotModel& model() const { return *m_; }
  const WorldOptions& options() const { return opt_; }
  const VecX& q() const { return q_; }
  const VecX& qdot() const { return qdot_; }
  double time() const { return t_; }
  const std::vector<ActiveContact>& contacts() const { return contacts_; }
  const std::vector<CoordinateLock>& locks() const { return locks_; }
  const std::vector<ContactForce>& contact_forces() const { return forces_; }

  bool in_contact(const std::string& name) const {
    for (const auto& c : contacts_)
      if (c.name == name) return true;
    return false;
  }

  std::vector<std::string> contact_names() const {
    std::vector<std::string> n;
    for (const auto& c : contacts_) n.push_back(c.name);
    return n;
  }

  /// Pins a contact point where it currently is.
  void add_contact(const std::string& name) {
    if (in_contact(name)) return;
    const auto& c = m_->contact(name);
    const model::Kinematics kin(*m_, q_, qdot_);
    contacts_.push_back({name, kin.point_position(c.body, c.offset)});
  }

  void remove_contact(const std::string& name) {
    std::erase_if(contacts_, [&](const ActiveContact& c) { return c.name == name; });
  }

  void add_lock(int coordinate) {
    if (coordinate < 0 || coordinate >= m_->dofs()) throw ModelError("lock coordinate out of range");
    locks_.push_back({coordinate, q_[coordinate]});
  }

  void set_state(const VecX& q, const VecX& qdot) {
    m_->check_state(q, qdot);
    q_ = q;
    qdot_ = qdot;
  }

  /// Constraint rows of the active contacts and locks at (q, qdot).
  std::vector<wbosc::ConstraintBlock> constraint_blocks(const model::Kinematics& kin) const {
    std::vector<wbosc::ConstraintBlock> blocks;
    for (const auto& c : contacts_) blocks.push_back(wbosc::point_constraint(*m_, kin, c.name));
    for (const auto& l : locks_) blocks.push_back(wbosc::coordinate_lock(*m_, l.coordinate, "lock"));
    return blocks;
  }

  /// Constrained accelerations and reactions at an arbitrary state.
  wbosc::ConstrainedAcceleration accelerations(const VecX& q, const VecX& qdot, const VecX& tau, double t) const {
    const model::Kinematics kin(*m_, q, qdot);
    const auto terms = model::dynamics_terms(*m_, kin, qdot, opt_.rotor_inertia);
    const auto cs = wbosc::build_contact_set(terms, constraint_blocks(kin));
    return wbosc::constrained_forward_dynamics(terms, cs, tau, external_force(kin, t));
  }

  double kinetic_energy() const {
    const model::Kinematics kin(*m_, q_, qdot_);
    return model::kinetic_energy(model::mass_matrix(*m_, kin, opt_.rotor_inertia), qdot_);
  }
  double potential_energy() const { return model::potential_energy(*m_, model::Kinematics(*m_, q_, qdot_)); }
  double energy() const { return kinetic_energy() + potential_energy(); }

  /// Advances one step with `tau` held constant; returns contact events.
  std::vector<WorldEvent> step(const VecX& tau) {
    std::vector<WorldEvent> events;
    check_contacts(tau, events);
    rk4(tau);
    project();
    if (opt_.touchdown) detect_touchdown(events);
    t_ += opt_.dt;
    if (!q_.allFinite() || !qdot_.allFinite() || qdot_.norm() > opt_.max_qdot)
      throw SimulationDivergedError("simulation diverged at t = " + std::to_string(t_) + " (|qdot| = " +
                                        std::to_string(qdot_.norm()) + ")",
                                    q_, qdot_);
    return events;
  }

  /// Plastic impact onto the current constraint set: qdot+ = N qdot-, with the
  /// constraint impulse Lambda J qdot- (robot on ground) returned.
  VecX apply_plastic_impact() {
    const model::Kinematics kin(*m_, q_, qdot_);
    const auto terms = model::dynamics_terms(*m_, kin, qdot_, opt_.rotor_inertia);
    const auto cs = wbosc::build_contact_set(terms, constraint_blocks(kin));
    if (cs.empty()) return VecX();
    const VecX impulse = cs.Lambda * (cs.J * qdot_);
    qdot_ = cs.N * qdot_;
    return impulse;
  }

 private:
  VecX external_force(const model::Kinematics& kin, double t) const {
    VecX f = VecX::Zero(m_->dofs());
    for (const auto& p : opt_.pushes) {
      if (!p.active(t)) continue;
      f += kin.point_jacobian3(m_->body_index(p.body), p.offset).transpose() * p.force;
    }
    return f;
  }

  Vec3 embed(const VecX& rows) const {
    Vec3 v = Vec3::Zero();
    const auto axes = m_->point_axes();
    for (size_t k = 0; k < axes.size(); ++k) v[axes[k]] = rows[static_cast<Eigen::Index>(k)];
    return v;
  }

  void check_contacts(const VecX& tau, std::vector<WorldEvent>& events) {
    forces_.clear();
    if (contacts_.empty()) return;
    const auto acc = accelerations(q_, qdot_, tau, t_);
    std::vector<std::string> drop;
    const int pr = m_->point_rows();
    for (size_t i = 0; i < contacts_.size(); ++i) {
      const Vec3 R = -embed(acc.lambda.segment(static_cast<Eigen::Index>(i) * pr, pr));
      const Vec3 n = opt_.terrain.normal(contacts_[i].anchor);
      const double N = R.dot(n);
      const double T = (R - N * n).norm();
      forces_.push_back({contacts_[i].name, R, N, T});
      if (N < -opt_.unilateral_tol) {
        events.push_back({EventKind::LiftOff, contacts_[i].name, t_, N != 0 ? T / std::abs(N) : 0.0, {}});
        drop.push_back(contacts_[i].name);
      } else if (T > opt_.mu * std::max(N, 0.0) + opt_.unilateral_tol) {
        events.push_back({EventKind::Slip, contacts_[i].name, t_, N > 0 ? T / N : INFINITY, {}});
        drop.push_back(contacts_[i].name);
      }
    }
    for (const auto& d : drop) remove_contact(d);
  }

  void rk4(const VecX& tau) {
    const double h = opt_.dt;
    auto f = [&](const VecX& q, const VecX& v, double t) { return accelerations(q, v, tau, t).qddot; };
    const VecX a1 = f(q_, qdot_, t_);
    const VecX q2 = q_ + 0.5 * h * qdot_, v2 = qdot_ + 0.5 * h * a1;
    const VecX a2 = f(q2, v2, t_ + 0.5 * h);
    const VecX q3 = q_ + 0.5 * h * v2, v3 = qdot_ + 0.5 * h * a2;
    const VecX a3 = f(q3, v3, t_ + 0.5 * h);
    const VecX q4 = q_ + h * v3, v4 = qdot_ + h * a3;
    const VecX a4 = f(q4, v4, t_ + h);
    q_ += h / 6.0 * (qdot_ + 2 * v2 + 2 * v3 + v4);
    qdot_ += h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4);
  }

  /// Position residual of the active constraints and its Jacobian.
  std::pair<VecX, MatX> residual(const VecX& q) const {
    const model::Kinematics kin(*m_, q, VecX::Zero(m_->dofs()));
    const auto blocks = constraint_blocks(kin);
    int rows = 0;
    for (const auto& b : blocks) rows += static_cast<int>(b.J.rows());
    VecX phi(rows);
    MatX J(rows, m_->dofs());
    int r = 0;
    const auto axes = m_->point_axes();
    for (const auto& c : contacts_) {
      const auto& cp = m_->contact(c.name);
      const Vec3 d = kin.point_position(cp.body, cp.offset) - c.anchor;
      for (int ax : axes) phi[r++] = d[ax];
    }
    for (const auto& l : locks_) phi[r++] = q[l.coordinate] - l.value;
    r = 0;
    for (const auto& b : blocks) {
      J.middleRows(r, b.J.rows()) = b.J;
      r += static_cast<int>(b.J.rows());
    }
    return {phi, J};
  }

  void project() {
    if (contacts_.empty() && locks_.empty()) return;
    for (int it = 0; it < 3; ++it) {
      const auto [phi, J] = residual(q_);
      if (phi.cwiseAbs().maxCoeff() < 1e-13) break;
      q_ -= J.transpose() * (J * J.transpose()).ldlt().solve(phi);
    }
    apply_plastic_impact();
  }

  void detect_touchdown(std::vector<WorldEvent>& events) {
    const model::Kinematics kin(*m_, q_, qdot_);
    bool any = false;
    std::vector<std::string> landed;
    for (const auto& cp : m_->contact_points()) {
      if (in_contact(cp.name)) continue;
      const Vec3 p = kin.point_position(cp.body, cp.offset);
      const Vec3 v = kin.point_velocity3(cp.body, cp.offset);
      const Vec3 n = opt_.terrain.normal(p);
      if (opt_.terrain.gap_distance(p) >= 0.0 || v.dot(n) >= 0.0) continue;
      Vec3 anchor = p;
      anchor.z() = opt_.terrain.h(p);
      contacts_.push_back({cp.name, anchor});
      landed.push_back(cp.name);
      any = true;
    }
    if (!any) return;
    for (int it = 0; it < 3; ++it) {
      const auto [phi, J] = residual(q_);
      if (phi.cwiseAbs().maxCoeff() < 1e-13) break;
      q_ -= J.transpose() * (J * J.transpose()).ldlt().solve(phi);
    }
    const VecX impulse = apply_plastic_impact();
    for (const auto& n : landed) events.push_back({EventKind::Touchdown, n, t_ + opt_.dt, 0.0, impulse});
  }

  const RobotModel* m_;
  WorldOptions opt_;
  VecX q_, qdot_;
  double t_ = 0.0;
  std::vector<ActiveContact> contacts_;
  std::vector<CoordinateLock> locks_;
  std::vector<ContactForce> forces_;
};

}  // namespace pointfoot::sim

#pragma once

#include "pointfoot/core.hpp"
#include "pointfoot/model/dynamics.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace pointfoot::wbosc {

enum class TaskKind { ComHeight, ComPlanar, BodyPitch, BodyRoll, FootPosition };

inline std::string to_string(TaskKind k) {
  switch (k) {
    case TaskKind::ComHeight: return "com-height";
    case TaskKind::ComPlanar: return "com-planar-position";
    case TaskKind::BodyPitch: return "body-pitch";
    case TaskKind::BodyRoll: return "body-roll";
    case TaskKind::FootPosition: return "foot-position";
  }
  return "?";
}

/// Per-row PID gains on acceleration: u = a_ref + K e + I int(e) + D edot.
struct TaskGains {
  VecX K, I, D;
};

struct TaskReference {
  VecX pos, vel, acc;
};

/// An operational task. `axes` picks world axes (0=x, 1=y, 2=z) for the
/// COM-planar and foot tasks; other kinds are scalar.
struct Task {
  std::string name;
  TaskKind kind = TaskKind::ComHeight;
  std::string contact;  ///< foot tasks: model contact-point name
  std::vector<int> axes;
  TaskGains gains;
  TaskReference ref;
  VecX integral;
  double integral_limit = 0.05;
  VecX feedforward;  ///< F_task^d added to the task force, empty if none

  int dim() const {
    switch (kind) {
      case TaskKind::ComPlanar:
      case TaskKind::FootPosition: return static_cast<int>(axes.size());
      default: return 1;
    }
  }

  void reset_integral() { integral = VecX::Zero(dim()); }

  void validate() const {
    const auto n = static_cast<Eigen::Index>(dim());
    if (gains.K.size() != n || gains.I.size() != n || gains.D.size() != n)
      throw ModelError("task '" + name + "': gain vectors must have " + std::to_string(n) + " entries");
    if ((gains.K.array() < 0).any() || (gains.I.array() < 0).any() || (gains.D.array() < 0).any())
      throw ModelError("task '" + name + "': gains must be non-negative");
  }
};

inline Task make_task(std::string name, TaskKind kind, std::vector<int> axes = {}, std::string contact = {}) {
  Task t;
  t.name = std::move(name);
  t.kind = kind;
  t.axes = std::move(axes);
  t.contact = std::move(contact);
  const Eigen::Index n = t.dim();
  t.gains = {VecX::Zero(n), VecX::Zero(n), VecX::Zero(n)};
  t.ref = {VecX::Zero(n), VecX::Zero(n), VecX::Zero(n)};
  t.integral = VecX::Zero(n);
  return t;
}

/// Task position, velocity, Jacobian and Jdot*qdot at one state.
struct TaskKinematics {
  VecX x, xdot;
  MatX J;
  VecX Jdot_qdot;
};

inline TaskKinematics evaluate_task(const Task& task, const model::RobotModel& m, const model::Kinematics& kin,
                                    const VecX& q, const VecX& qdot) {
  TaskKinematics tk;
  auto pick = [&](const Vec3& p3, const MatX& J3, const Vec3& a3) {
    const auto n = static_cast<Eigen::Index>(task.axes.size());
    tk.x.resize(n);
    tk.J.resize(n, m.dofs());
    tk.Jdot_qdot.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const int ax = task.axes[static_cast<size_t>(r)];
      if (ax < 0 || ax > 2 || (m.planar() && ax == 1))
        throw ModelError("task '" + task.name + "': axis " + std::to_string(ax) + " not available in this mode");
      tk.x[r] = p3[ax];
      tk.J.row(r) = J3.row(ax);
      tk.Jdot_qdot[r] = a3[ax];
    }
  };
  auto coordinate = [&](int idx) {
    tk.x = VecX::Constant(1, q[idx]);
    tk.J = MatX::Zero(1, m.dofs());
    tk.J(0, idx) = 1.0;
    tk.Jdot_qdot = VecX::Zero(1);
  };
  switch (task.kind) {
    case TaskKind::ComHeight: {
      const Vec3 c = kin.com();
      const MatX J3 = kin.com_jacobian3();
      const Vec3 a3 = kin.com_bias_acceleration3();
      tk.x = VecX::Constant(1, c.z());
      tk.J = J3.row(2);
      tk.Jdot_qdot = VecX::Constant(1, a3.z());
      break;
    }
    case TaskKind::ComPlanar:
      pick(kin.com(), kin.com_jacobian3(), kin.com_bias_acceleration3());
      break;
    case TaskKind::BodyPitch: coordinate(m.base_coordinate("pitch")); break;
    case TaskKind::BodyRoll: coordinate(m.base_coordinate("roll")); break;
    case TaskKind::FootPosition: {
      const auto& c = m.contact(task.contact);
      pick(kin.point_position(c.body, c.offset), kin.point_jacobian3(c.body, c.offset),
           kin.point_bias_acceleration3(c.body, c.offset));
      break;
    }
  }
  tk.xdot = tk.J * qdot;
  return tk;
}

/// PID acceleration command for one task.
inline VecX acceleration_command(const Task& task, const TaskKinematics& tk) {
  const VecX e = task.ref.pos - tk.x;
  const VecX edot = task.ref.vel - tk.xdot;
  VecX u = task.ref.acc + task.gains.K.cwiseProduct(e) + task.gains.D.cwiseProduct(edot);
  if (task.integral.size() == e.size()) u += task.gains.I.cwiseProduct(task.integral);
  return u;
}

/// Accumulates the position error, clamped at +-integral_limit.
inline void integrate_error(Task& task, const TaskKinematics& tk, double dt) {
  if (task.integral.size() != tk.x.size()) task.reset_integral();
  task.integral += (task.ref.pos - tk.x) * dt;
  task.integral = task.integral.cwiseMax(-task.integral_limit).cwiseMin(task.integral_limit);
}

/// Concatenated kinematics of a task list (flat task stacking).
struct StackedTasks {
  MatX J;
  VecX Jdot_qdot;
  VecX u;
  VecX feedforward;
  std::vector<int> offsets;
};

inline StackedTasks stack_tasks(const std::vector<Task>& tasks, const std::vector<TaskKinematics>& tks, int dofs) {
  StackedTasks s;
  int rows = 0;
  for (const auto& t : tasks) {
    s.offsets.push_back(rows);
    rows += t.dim();
  }
  s.J.resize(rows, dofs);
  s.Jdot_qdot.resize(rows);
  s.u.resize(rows);
  s.feedforward = VecX::Zero(rows);
  for (size_t i = 0; i < tasks.size(); ++i) {
    const int o = s.offsets[i], d = tasks[i].dim();
    s.J.middleRows(o, d) = tks[i].J;
    s.Jdot_qdot.segment(o, d) = tks[i].Jdot_qdot;
    s.u.segment(o, d) = acceleration_command(tasks[i], tks[i]);
    if (tasks[i].feedforward.size() == d) s.feedforward.segment(o, d) = tasks[i].feedforward;
  }
  return s;
}

}  // namespace pointfoot::wbosc

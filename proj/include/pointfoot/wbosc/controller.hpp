#pragma once

// Whole-body command tau = J*^T F_task + L*^T Gamma_int and the torque
// blending used around contact switches.

#include "pointfoot/wbosc/internal_force.hpp"
#include "pointfoot/wbosc/task.hpp"

#include <map>
#include <optional>

namespace pointfoot::wbosc {

struct ControllerOptions {
  bool omit_coriolis = false;
  bool rotor_inertia = true;
};

struct InternalForceSetting {
  std::string right = "right_foot";
  std::string left = "left_foot";
  double ref = 0.0;  ///< desired tension (N), positive pushes the feet apart
  double K_F = 0.0;
  bool feedback = true;  ///< use sensed torques for F_act
};

/// Everything the controller needs for one tick.
struct CommandRequest {
  const RobotModel* model = nullptr;
  VecX q, qdot;
  std::vector<std::string> contacts;      ///< active point contacts
  std::vector<ConstraintBlock> extra;     ///< additional constraints (coordinate locks)
  std::vector<Task>* tasks = nullptr;
  std::optional<InternalForceSetting> internal;
  VecX tau_sensor;                        ///< last delivered torque, for F_act
  std::map<std::string, VecX> f_ext;      ///< added to foot-task forces, keyed by contact name
};

struct CommandResult {
  VecX tau;
  VecX tau_task;
  VecX tau_int;
  VecX F_task;
  VecX u;
  std::vector<TaskKinematics> task_kinematics;
  double F_int_ref = 0.0, F_int_act = 0.0, F_int_task = 0.0;
  bool internal_active = false;
  VecX lambda_pred;  ///< reaction predicted for the commanded torque
  ContactSet contacts;
  DynamicsTerms terms;
};

inline CommandResult whole_body_command(const CommandRequest& req, const ControllerOptions& opt) {
  if (!req.model) throw ModelError("command request without model");
  const RobotModel& m = *req.model;
  const Kinematics kin(m, req.q, req.qdot);
  CommandResult out;
  out.terms = model::dynamics_terms(m, kin, req.qdot, opt.rotor_inertia);
  std::vector<ConstraintBlock> blocks;
  for (const auto& c : req.contacts) blocks.push_back(point_constraint(m, kin, c));
  for (const auto& e : req.extra) blocks.push_back(e);
  out.contacts = build_contact_set(out.terms, blocks);
  const ContactSet& cs = out.contacts;
  const Projection pr = make_projection(out.terms, cs);
  const Eigen::Index na = m.actuated_dofs();

  out.tau_task = VecX::Zero(na);
  if (req.tasks && !req.tasks->empty()) {
    auto& tasks = *req.tasks;
    for (const auto& t : tasks) {
      t.validate();
      out.task_kinematics.push_back(evaluate_task(t, m, kin, req.q, req.qdot));
    }
    const StackedTasks st = stack_tasks(tasks, out.task_kinematics, m.dofs());
    const TaskSpaceModel tsm = task_space_model(out.terms, cs, pr, st.J, st.Jdot_qdot);
    VecX extra = st.feedforward;
    for (size_t i = 0; i < tasks.size(); ++i) {
      if (tasks[i].kind != TaskKind::FootPosition) continue;
      const auto it = req.f_ext.find(tasks[i].contact);
      if (it == req.f_ext.end()) continue;
      const auto axes = m.point_axes();
      for (size_t r = 0; r < tasks[i].axes.size(); ++r) {
        const auto pos = std::find(axes.begin(), axes.end(), tasks[i].axes[r]);
        if (pos == axes.end()) continue;
        const auto k = static_cast<Eigen::Index>(pos - axes.begin());
        if (k < it->second.size()) extra[st.offsets[i] + static_cast<Eigen::Index>(r)] += it->second[k];
      }
    }
    out.u = st.u;
    out.F_task = task_force(tsm, st.u, opt.omit_coriolis, extra);
    out.tau_task = tsm.Jstar.transpose() * out.F_task;
  }

  out.tau_int = VecX::Zero(na);
  if (req.internal && cs.block(req.internal->right) >= 0 && cs.block(req.internal->left) >= 0) {
    const auto& s = *req.internal;
    const auto& cr = m.contact(s.right);
    const auto& cl = m.contact(s.left);
    const RowVec6 W6 = build_W_int(kin.point_position(cr.body, cr.offset), kin.point_position(cl.body, cl.offset));
    const MatX W = internal_force_matrix(m, cs, W6, s.right, s.left);
    const InternalForceModel im = internal_force_model(out.terms, cs, pr, W, opt.omit_coriolis);
    const VecX Ft = task_induced_internal_force(im, out.terms, cs, out.tau_task);
    const VecX ref = VecX::Constant(1, s.ref);
    VecX Fact = ref;
    if (s.feedback && req.tau_sensor.size() == na) Fact = actual_internal_force(W, cs, out.terms, req.tau_sensor);
    const VecX gamma = internal_torque(im, ref, Ft, Fact, s.K_F);
    out.tau_int = pr.Lstar.transpose() * gamma;
    out.internal_active = true;
    out.F_int_ref = s.ref;
    out.F_int_act = Fact[0];
    out.F_int_task = Ft[0];
  }
  out.tau = out.tau_task + out.tau_int;
  out.lambda_pred = predicted_reaction(out.terms, cs, out.tau);
  return out;
}

/// Reaction force of one contact inside a stacked reaction vector.
inline VecX contact_reaction(const ContactSet& cs, const VecX& lambda, const std::string& contact) {
  const int b = cs.block(contact);
  if (b < 0) throw TransitionError("contact '" + contact + "' is not in the contact set");
  return lambda.segment(cs.offsets[static_cast<size_t>(b)], cs.sizes[static_cast<size_t>(b)]);
}

enum class TransitionDirection { Lifting, Landing };

/// Linear blend of the swing-foot loading across a contact switch. Lifting
/// ramps the cached dual-support reaction from full to zero; landing ramps it
/// from zero to full.
struct TransitionState {
  TransitionDirection direction = TransitionDirection::Lifting;
  double duration = 0.02;
  double elapsed = 0.0;
  std::string swing;  ///< contact being released or loaded
  std::optional<VecX> f_ext_dual;

  double w() const {
    const double s = duration > 0.0 ? std::clamp(elapsed / duration, 0.0, 1.0) : 1.0;
    return direction == TransitionDirection::Lifting ? 1.0 - s : s;
  }
  bool finished() const { return elapsed >= duration - 1e-12; }
  void advance(double dt) { elapsed = std::min(elapsed + dt, duration); }
};

inline TransitionState start_transition(TransitionDirection dir, double duration, std::string swing,
                                        const VecX& f_ext_dual) {
  if (!(duration > 0.0)) throw TransitionError("transition duration must be positive");
  TransitionState t;
  t.direction = dir;
  t.duration = duration;
  t.swing = std::move(swing);
  t.f_ext_dual = f_ext_dual;
  return t;
}

/// Single-contact command with f_ext = w f_ext_dual on the swing-foot task.
/// `single` must list only the stance contact and include a foot task for
/// the swing contact.
inline CommandResult transition_command(CommandRequest single, const TransitionState& trans,
                                        const ControllerOptions& opt) {
  if (!trans.f_ext_dual) throw TransitionError("transition started without a cached dual-support reaction");
  bool has_task = false;
  if (single.tasks)
    for (const auto& t : *single.tasks) has_task |= (t.kind == TaskKind::FootPosition && t.contact == trans.swing);
  if (!has_task) throw TransitionError("no foot task for swing contact '" + trans.swing + "'");
  single.f_ext[trans.swing] = trans.w() * *trans.f_ext_dual;
  return whole_body_command(single, opt);
}

}  // namespace pointfoot::wbosc

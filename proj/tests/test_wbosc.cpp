#include "common.hpp"

#include "pointfoot/wbosc/controller.hpp"

#include <gtest/gtest.h>

using namespace pointfoot;
using namespace pointfoot::wbosc;
using pointfoot::testing::dual_stance;
using pointfoot::testing::planar_model;
using pointfoot::testing::random_state;
using pointfoot::testing::spatial_model;

namespace {

struct Scene {
  VecX q, qdot;
  DynamicsTerms terms;
  ContactSet cs;
  Projection pr;
};

Scene make_scene(const RobotModel& m, const VecX& q, const VecX& qdot, const std::vector<std::string>& contacts) {
  Scene s{q, qdot, {}, {}, {}};
  const Kinematics kin(m, q, qdot);
  s.terms = model::dynamics_terms(m, kin, qdot, true);
  std::vector<ConstraintBlock> blocks;
  for (const auto& c : contacts) blocks.push_back(point_constraint(m, kin, c));
  s.cs = build_contact_set(s.terms, blocks);
  s.pr = make_projection(s.terms, s.cs);
  return s;
}

const std::vector<std::string> kDual{"right_foot", "left_foot"};
const std::vector<std::string> kRight{"right_foot"};

// Dense saddle-point solve of A qdd + J^T lam = rhs, J qdd = -Jdot qdot.
std::pair<VecX, VecX> kkt_solve(const Scene& s, const VecX& tau) {
  const Eigen::Index n = s.terms.A.rows(), k = s.cs.J.rows();
  MatX K = MatX::Zero(n + k, n + k);
  K.topLeftCorner(n, n) = s.terms.A;
  K.topRightCorner(n, k) = s.cs.J.transpose();
  K.bottomLeftCorner(k, n) = s.cs.J;
  VecX rhs(n + k);
  rhs.head(n) = s.terms.U.transpose() * tau - s.terms.b - s.terms.g;
  rhs.tail(k) = -s.cs.Jdot_qdot;
  const VecX sol = K.fullPivLu().solve(rhs);
  return {sol.head(n), sol.tail(k)};
}

Task com_height_task(double K, double I, double D) {
  Task t = make_task("com_z", TaskKind::ComHeight);
  t.gains = {VecX::Constant(1, K), VecX::Constant(1, I), VecX::Constant(1, D)};
  return t;
}

}  // namespace

TEST(ContactSet, ProjectorIdentitiesOnRandomConfigurations) {
  std::mt19937 rng(31);
  for (const RobotModel* m : {&planar_model(), &spatial_model()}) {
    for (int trial = 0; trial < 200; ++trial) {
      const auto st = random_state(*m, rng);
      const auto& contacts = trial % 2 ? kDual : kRight;
      const Scene s = make_scene(*m, st.q, st.qdot, contacts);
      const MatX& N = s.cs.N;
      ASSERT_LE((s.cs.J * N).cwiseAbs().maxCoeff(), 1e-10);
      ASSERT_LE((N * N - N).cwiseAbs().maxCoeff(), 1e-10);
      ASSERT_LE((N * s.cs.Ainv * s.cs.J.transpose()).cwiseAbs().maxCoeff(), 1e-10);
      ASSERT_LE((s.pr.Lstar * s.pr.Lstar - s.pr.Lstar).cwiseAbs().maxCoeff(), 1e-10);
      ASSERT_LE((s.pr.UNs.transpose() * s.pr.Lstar.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(ContactSet, ConstraintInertiaMatchesDenseInverse) {
  std::mt19937 rng(37);
  const auto& m = planar_model();
  for (int trial = 0; trial < 50; ++trial) {
    const auto st = random_state(m, rng);
    const Scene s = make_scene(m, st.q, st.qdot, kDual);
    const MatX Ainv = s.terms.A.fullPivLu().inverse();
    const MatX oracle = (s.cs.J * Ainv * s.cs.J.transpose()).fullPivLu().inverse();
    EXPECT_LE((s.cs.Lambda - oracle).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ContactSet, PointMassContactRemovesTranslation) {
  model::BaseSpec base;
  base.mass = 2.0;
  base.inertia = Vec3(0.1, 0.2, 0.3).asDiagonal();
  const RobotModel m("point", model::BaseMode::Spatial, base, {}, {{"c", {"torso", Vec3::Zero()}}});
  const VecX z = VecX::Zero(6);
  const Scene s = make_scene(m, z, z, {"c"});
  Eigen::Matrix<double, 6, 1> d;
  d << 0, 0, 0, 1, 1, 1;
  EXPECT_LE((s.cs.N - MatX(d.asDiagonal())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ContactSet, RedundantContactsAreSingular) {
  const auto& m = planar_model();
  const VecX q = dual_stance(m), z = VecX::Zero(m.dofs());
  const Kinematics kin(m, q, z);
  const auto terms = model::dynamics_terms(m, kin, z, true);
  const auto blk = point_constraint(m, kin, "right_foot");
  try {
    build_contact_set(terms, {blk, blk});
    FAIL() << "expected singular contact error";
  } catch (const SingularContactError& e) {
    EXPECT_EQ(e.singular_values.size(), 4);
  }
}

TEST(ConstrainedDynamics, MatchesSaddlePointSolve) {
  std::mt19937 rng(41);
  std::normal_distribution<double> nd(0.0, 20.0);
  for (const RobotModel* m : {&planar_model(), &spatial_model()}) {
    for (int trial = 0; trial < 50; ++trial) {
      const auto st = random_state(*m, rng);
      const Scene s = make_scene(*m, st.q, st.qdot, trial % 2 ? kDual : kRight);
      VecX tau(m->actuated_dofs());
      for (auto& v : tau) v = nd(rng);
      const auto fd = constrained_forward_dynamics(s.terms, s.cs, tau);
      const auto [qdd, lam] = kkt_solve(s, tau);
      EXPECT_LE((fd.qddot - qdd).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_LE((fd.lambda - lam).cwiseAbs().maxCoeff(), 1e-9 * std::max(1.0, lam.cwiseAbs().maxCoeff()));
      EXPECT_LE((s.cs.J * fd.qddot + s.cs.Jdot_qdot).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

// Planar only: a spatial point-foot stance cannot hold still about the line
// through its feet, so no static torque exists there in general.
TEST(ConstrainedDynamics, StaticStanceCarriesTheWeight) {
  for (const RobotModel* m : {&planar_model()}) {
    const VecX q = dual_stance(*m), z = VecX::Zero(m->dofs());
    const Scene s = make_scene(*m, q, z, kDual);
    // torque that zeroes the constrained acceleration: (U N_s)^T tau = N_s^T g
    const MatX UNsT = s.pr.UNs.transpose();
    const VecX tau = UNsT.completeOrthogonalDecomposition().solve(s.cs.N.transpose() * s.terms.g);
    const auto fd = constrained_forward_dynamics(s.terms, s.cs, tau);
    EXPECT_LE(fd.qddot.norm(), 1e-8);
    const int rows = m->point_rows();
    const double fz = fd.lambda[rows - 1] + fd.lambda[2 * rows - 1];
    // lambda is the force the robot exerts on the ground, pointing down
    EXPECT_NEAR(fz, -m->total_mass() * kGravity, 1e-8);
  }
}

TEST(ConstrainedDynamics, InternalTorquesProduceNoMotion) {
  std::mt19937 rng(43);
  std::normal_distribution<double> nd(0.0, 50.0);
  for (const RobotModel* m : {&planar_model(), &spatial_model()}) {
    for (int trial = 0; trial < 100; ++trial) {
      auto st = random_state(*m, rng);
      st.qdot.setZero();
      const Scene s = make_scene(*m, st.q, st.qdot, kDual);
      VecX ti(m->actuated_dofs());
      for (auto& v : ti) v = nd(rng);
      const VecX tau = s.pr.Lstar.transpose() * ti;
      // isolate the torque contribution: compare against the zero-torque response
      const auto a = constrained_forward_dynamics(s.terms, s.cs, tau);
      const auto a0 = constrained_forward_dynamics(s.terms, s.cs, VecX::Zero(m->actuated_dofs()));
      EXPECT_LE((a.qddot - a0.qddot).norm(), 1e-8);
    }
  }
}

TEST(TaskJacobian, ConstrainedFootHasZeroStarJacobian) {
  const auto& m = planar_model();
  const VecX q = dual_stance(m), z = VecX::Zero(m.dofs());
  const Scene s = make_scene(m, q, z, kDual);
  const Kinematics kin(m, q, z);
  const auto blk = point_constraint(m, kin, "right_foot");
  EXPECT_LE(task_jacobian_star(blk.J, s.pr).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(TaskJacobian, ComHeightRateAlongConsistentVelocity) {
  std::mt19937 rng(47);
  const auto& m = planar_model();
  const VecX q = dual_stance(m), z = VecX::Zero(m.dofs());
  const Scene s = make_scene(m, q, z, kDual);
  const Kinematics kin(m, q, z);
  const Task t = com_height_task(0, 0, 0);
  const auto tk = evaluate_task(t, m, kin, q, z);
  const MatX Jstar = task_jacobian_star(tk.J, s.pr);
  for (int trial = 0; trial < 20; ++trial) {
    const VecX qdot = s.cs.N * random_state(m, rng).qdot;
    const double h = 1e-7;
    const double fd = (Kinematics(m, q + h * qdot, z).com().z() - Kinematics(m, q - h * qdot, z).com().z()) / (2 * h);
    EXPECT_NEAR((Jstar * (s.terms.U * qdot))[0], fd, 1e-6);
  }
}

TEST(TaskJacobian, SwingFootIsControllableInSingleSupport) {
  const auto& m = planar_model();
  const VecX q = dual_stance(m), z = VecX::Zero(m.dofs());
  const Scene s = make_scene(m, q, z, kRight);
  const Kinematics kin(m, q, z);
  const auto blk = point_constraint(m, kin, "left_foot");
  const MatX Js = task_jacobian_star(blk.J, s.pr);
  EXPECT_EQ(Js.fullPivLu().rank(), 2);
  EXPECT_THROW(task_jacobian_star(MatX::Zero(1, 3), s.pr), ModelError);
}

TEST(TaskForce, ZeroWithoutErrorVelocityAndGravity) {
  const auto& m = planar_model();
  const VecX q = dual_stance(m), z = VecX::Zero(m.dofs());
  Scene s = make_scene(m, q, z, kDual);
  s.terms.g.setZero();
  const Kinematics kin(m, q, z);
  Task t = com_height_task(450, 55, 5);
  const auto tk = evaluate_task(t, m, kin, q, z);
  t.ref.pos = tk.x;
  const auto tsm = task_space_model(s.terms, s.cs, s.pr, tk.J, tk.Jdot_qdot);
  EXPECT_LE(task_force(tsm, acceleration_command(t, tk), false).norm(), 1e-12);
}

// With the drift terms included the closed loop is exactly xdd = u.
TEST(TaskForce, ClosedLoopAccelerationEqualsCommand) {
  std::mt19937 rng(53);
  std::normal_distribution<double> nd(0.0, 2.0);
  for (const RobotModel* m : {&planar_model(), &spatial_model()}) {
    for (int trial = 0; trial < 50; ++trial) {
      const auto st = random_state(*m, rng);
      const bool dual = trial % 2 == 0;
      const Scene s = make_scene(*m, st.q, st.qdot, dual ? kDual : kRight);
      const Kinematics kin(*m, st.q, st.qdot);
      std::vector<Task> tasks{com_height_task(0, 0, 0), make_task("pitch", TaskKind::BodyPitch)};
      if (!m->planar()) tasks.push_back(make_task("roll", TaskKind::BodyRoll));
      if (!dual) tasks.push_back(make_task("foot", TaskKind::FootPosition, m->point_axes(), "left_foot"));
      std::vector<TaskKinematics> tks;
      for (auto& t : tasks) tks.push_back(evaluate_task(t, *m, kin, st.q, st.qdot));
      const auto stk = stack_tasks(tasks, tks, m->dofs());
      const auto tsm = task_space_model(s.terms, s.cs, s.pr, stk.J, stk.Jdot_qdot);
      VecX u(stk.J.rows());
      for (auto& v : u) v = nd(rng);
      const VecX tau = tsm.Jstar.transpose() * task_force(tsm, u, false);
      const auto fd = constrained_forward_dynamics(s.terms, s.cs, tau);
      const VecX xdd = stk.J * fd.qddot + stk.Jdot_qdot;
      EXPECT_LE((xdd - u).cwiseAbs().maxCoeff(), 1e-8) << "trial " << trial;
    }
  }
}

TEST(TaskForce, StaticComHeightHoldCancelsGravity) {
  const auto& m = planar_model();
  const VecX q = dual_stance(m), z = VecX::Zero(m.dofs());
  const Scene s = make_scene(m, q, z, kDual);
  const Kinematics kin(m, q, z);
  Task t = com_height_task(450, 55, 5);
  auto tk = evaluate_task(t, m, kin, q, z);
  t.ref.pos = tk.x;
  const auto tsm = task_space_model(s.terms, s.cs, s.pr, tk.J, tk.Jdot_qdot);
  const VecX tau = tsm.Jstar.transpose() * task_force(tsm, acceleration_command(t, tk), false);
  const auto fd = constrained_forward_dynamics(s.terms, s.cs, tau);
  EXPECT_LE(std::abs((tk.J * fd.qddot + tk.Jdot_qdot)[0]), 1e-6);
}

TEST(TaskForce, IllConditionedTaskIsReported) {
  const auto& m = planar_model();
  const VecX q = dual_stance(m), z = VecX::Zero(m.dofs());
  const Scene s = make_scene(m, q, z, kDual);
  const Kinematics kin(m, q, z);
  const auto blk = point_constraint(m, kin, "right_foot");
  EXPECT_THROW(task_space_model(s.terms, s.cs, s.pr, blk.J, VecX::Zero(2)), IllConditionedTaskError);
}

TEST(InternalForce, AxisAlignedTension) {
  const RowVec6 W = build_W_int(Vec3(1, 0, 0), Vec3(0, 0, 0));
  RowVec6 expect;
  expect << 1, 0, 0, -1, 0, 0;
  EXPECT_LE((W - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(InternalForce, DiagonalTension) {
  const RowVec6 W = build_W_int(Vec3(0.2, -0.1, 0), Vec3(-0.2, 0.1, 0));
  // hand evaluation: xhat = (0.4, -0.2, 0) / sqrt(0.2)
  const double a = 0.4 / std::sqrt(0.2), b = -0.2 / std::sqrt(0.2);
  RowVec6 expect;
  expect << a, b, 0, -a, -b, 0;
  EXPECT_LE((W - expect).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(W(0), 0.8944, 1e-4);
  EXPECT_NEAR(W(1), -0.4472, 1e-4);
}

TEST(InternalForce, SwappingFeetFlipsSign) {
  std::mt19937 rng(59);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 pr(nd(rng), nd(rng), nd(rng)), pl(nd(rng), nd(rng), nd(rng));
    Vec6 F;
    for (auto& v : F) v = nd(rng);
    Vec6 swapped;
    swapped << F.tail<3>(), F.head<3>();
    EXPECT_NEAR((build_W_int(pl, pr) * swapped)(0), (build_W_int(pr, pl) * F)(0), 1e-12);
    EXPECT_NEAR((build_W_int(pl, pr) * F)(0), -(build_W_int(pr, pl) * F)(0), 1e-12);
  }
}

TEST(InternalForce, CoincidentFeetAreDegenerate) {
  EXPECT_THROW(build_W_int(Vec3(0.1, 0.2, 0), Vec3(0.1, 0.2, 0)), DegenerateGeometryError);
}

TEST(InternalForce, SensedForceMatchesConstraintForceProjection) {
  std::mt19937 rng(61);
  std::normal_distribution<double> nd(0.0, 20.0);
  for (const RobotModel* m : {&planar_model(), &spatial_model()}) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto st = random_state(*m, rng);
      const Scene s = make_scene(*m, st.q, st.qdot, kDual);
      const Kinematics kin(*m, st.q, st.qdot);
      const auto& cr = m->contact("right_foot");
      const auto& cl = m->contact("left_foot");
      const MatX W = internal_force_matrix(
          *m, s.cs, build_W_int(kin.point_position(cr.body, cr.offset), kin.point_position(cl.body, cl.offset)),
          "right_foot", "left_foot");
      VecX tau(m->actuated_dofs());
      for (auto& v : tau) v = nd(rng);
      const auto fd = constrained_forward_dynamics(s.terms, s.cs, tau);
      EXPECT_NEAR(actual_internal_force(W, s.cs, s.terms, tau)[0], (W * fd.lambda)[0], 1e-8);
    }
  }
}

TEST(InternalForce, StraightVerticalLegsCarryNoLateralTension) {
  const auto& m = spatial_model();
  VecX q = VecX::Zero(m.dofs());
  q[m.base_coordinate("z")] = 0.95;  // hip pitch joints at 0.9, straight legs reach the ground
  const VecX z = VecX::Zero(m.dofs());
  const Scene s = make_scene(m, q, z, kDual);
  const Kinematics kin(m, q, z);
  const auto& cr = m.contact("right_foot");
  const auto& cl = m.contact("left_foot");
  const RowVec6 W6 = build_W_int(kin.point_position(cr.body, cr.offset), kin.point_position(cl.body, cl.offset));
  const MatX W = internal_force_matrix(m, s.cs, W6, "right_foot", "left_foot");
  EXPECT_NEAR(actual_internal_force(W, s.cs, s.terms, VecX::Zero(m.actuated_dofs()))[0], 0.0, 1e-9);
}

TEST(InternalForce, SingleContactIsUndefined) {
  const auto& m = planar_model();
  const VecX q = dual_stance(m), z = VecX::Zero(m.dofs());
  const Scene s = make_scene(m, q, z, kRight);
  EXPECT_THROW(internal_force_matrix(m, s.cs, build_W_int(Vec3(1, 0, 0), Vec3::Zero()), "right_foot", "left_foot"),
               InternalForceError);
}

TEST(InternalForce, TorqueVanishesAtEquilibriumAndProducesNoMotion) {
  std::mt19937 rng(67);
  for (const RobotModel* m : {&planar_model(), &spatial_model()}) {
    auto st = random_state(*m, rng);
    st.qdot.setZero();
    const Scene s = make_scene(*m, st.q, st.qdot, kDual);
    const Kinematics kin(*m, st.q, st.qdot);
    const auto& cr = m->contact("right_foot");
    const auto& cl = m->contact("left_foot");
    const MatX W = internal_force_matrix(
        *m, s.cs, build_W_int(kin.point_position(cr.body, cr.offset), kin.point_position(cl.body, cl.offset)),
        "right_foot", "left_foot");
    InternalForceModel im = internal_force_model(s.terms, s.cs, s.pr, W, false);
    const VecX ref = VecX::Constant(1, 40.0);
    InternalForceModel zero_bias = im;
    zero_bias.mu_i.setZero();
    zero_bias.p_i.setZero();
    EXPECT_LE(internal_torque(zero_bias, VecX::Zero(1), VecX::Zero(1), VecX::Zero(1), 1.0).norm(), 1e-12);
    // the feedback term vanishes once the sensed force matches the reference
    EXPECT_LE((internal_torque(im, ref, VecX::Zero(1), ref, 1.0) - internal_torque(im, ref, VecX::Zero(1), ref, 0.0))
                  .norm(),
              1e-12);

    const VecX gamma = internal_torque(im, ref, VecX::Zero(1), VecX::Constant(1, 10.0), 1.0);
    const VecX tau = s.pr.Lstar.transpose() * gamma;
    EXPECT_LE((s.pr.UNs.transpose() * tau).norm(), 1e-8);
    const auto a = constrained_forward_dynamics(s.terms, s.cs, tau);
    const auto a0 = constrained_forward_dynamics(s.terms, s.cs, VecX::Zero(m->actuated_dofs()));
    EXPECT_LE((a.qddot - a0.qddot).norm(), 1e-8);
    // feed-forward only: the reaction tension equals the reference exactly
    const VecX g0 = internal_torque(im, ref, VecX::Zero(1), ref, 0.0);
    EXPECT_NEAR((W * constrained_forward_dynamics(s.terms, s.cs, s.pr.Lstar.transpose() * g0).lambda)[0], 40.0,
                1e-8);
  }
}

TEST(WholeBody, EmptyCommandIsZero) {
  const auto& m = planar_model();
  CommandRequest req;
  req.model = &m;
  req.q = dual_stance(m);
  req.qdot = VecX::Zero(m.dofs());
  req.contacts = kDual;
  const auto out = whole_body_command(req, {});
  EXPECT_EQ(out.tau.size(), 4);
  EXPECT_LE(out.tau.norm(), 1e-15);
}

TEST(WholeBody, TaskAndInternalTermsSuperpose) {
  const auto& m = planar_model();
  std::vector<Task> tasks{com_height_task(200, 0, 30), make_task("pitch", TaskKind::BodyPitch)};
  tasks[1].gains = {VecX::Constant(1, 150), VecX::Constant(1, 0), VecX::Constant(1, 15)};
  CommandRequest req;
  req.model = &m;
  req.q = dual_stance(m, 0.3);
  req.qdot = VecX::Zero(m.dofs());
  req.contacts = kDual;
  req.tasks = &tasks;
  req.internal = InternalForceSetting{"right_foot", "left_foot", 100.0, 1.0, false};
  const auto out = whole_body_command(req, {});
  ASSERT_TRUE(out.internal_active);
  const Scene s = make_scene(m, req.q, req.qdot, kDual);
  const auto a_all = constrained_forward_dynamics(s.terms, s.cs, out.tau);
  const auto a_task = constrained_forward_dynamics(s.terms, s.cs, out.tau_task);
  EXPECT_LE((a_all.qddot - a_task.qddot).norm(), 1e-8);
  // open loop the commanded tension is realised exactly
  const Kinematics kin(m, req.q, req.qdot);
  const MatX W = internal_force_matrix(m, s.cs, build_W_int(Vec3(0.3, 0, 0), Vec3(-0.3, 0, 0)), "right_foot",
                                       "left_foot");
  EXPECT_NEAR((W * a_all.lambda)[0], 100.0, 1e-6);
}

TEST(Transition, ExternalForceEntersSwingFootRows) {
  const auto& m = planar_model();
  const VecX q = dual_stance(m, 0.1);
  auto gains = [](double k) { return TaskGains{VecX::Constant(2, k), VecX::Zero(2), VecX::Constant(2, 10)}; };
  std::vector<Task> dual{com_height_task(450, 0, 55), make_task("pitch", TaskKind::BodyPitch)};
  dual[1].gains = {VecX::Constant(1, 400), VecX::Zero(1), VecX::Constant(1, 55)};
  CommandRequest dreq;
  dreq.model = &m;
  dreq.q = q;
  dreq.qdot = VecX::Zero(m.dofs());
  dreq.contacts = kDual;
  dreq.tasks = &dual;
  const Kinematics kin(m, q, dreq.qdot);
  for (auto& t : dual) t.ref.pos = evaluate_task(t, m, kin, q, dreq.qdot).x;
  const auto dout = whole_body_command(dreq, {});
  const VecX f_dual = contact_reaction(dout.contacts, dout.lambda_pred, "left_foot");
  EXPECT_LT(f_dual[1], 0.0);

  std::vector<Task> single = dual;
  single.push_back(make_task("foot", TaskKind::FootPosition, {0, 2}, "left_foot"));
  single.back().gains = gains(900);
  single.back().ref.pos = evaluate_task(single.back(), m, kin, q, dreq.qdot).x;
  CommandRequest sreq = dreq;
  sreq.contacts = kRight;
  sreq.tasks = &single;

  TransitionState tr = start_transition(TransitionDirection::Lifting, 0.02, "left_foot", f_dual);
  const auto at_one = transition_command(sreq, tr, {});
  tr.advance(0.02);
  EXPECT_DOUBLE_EQ(tr.w(), 0.0);
  const auto at_zero = transition_command(sreq, tr, {});
  const auto pure = whole_body_command(sreq, {});
  EXPECT_LE((at_zero.tau - pure.tau).norm(), 1e-12);
  EXPECT_LE((at_one.F_task.tail(2) - pure.F_task.tail(2) - f_dual).norm(), 1e-9);

  // Loaded back onto both feet, the w = 1 command reproduces the dual-support
  // swing reaction up to the difference between the two task sets.
  const Scene s = make_scene(m, q, dreq.qdot, kDual);
  const VecX f_back = contact_reaction(s.cs, predicted_reaction(s.terms, s.cs, at_one.tau), "left_foot");
  const VecX f_pure = contact_reaction(s.cs, predicted_reaction(s.terms, s.cs, pure.tau), "left_foot");
  EXPECT_LT((f_back - f_dual).norm(), 0.1 * (f_pure - f_dual).norm());
}

TEST(Transition, RampIsMonotoneAndNeedsCache) {
  TransitionState lift = start_transition(TransitionDirection::Lifting, 0.02, "left_foot", VecX::Ones(2));
  TransitionState land = start_transition(TransitionDirection::Landing, 0.02, "left_foot", VecX::Ones(2));
  double wl = lift.w(), wd = land.w();
  EXPECT_DOUBLE_EQ(wl, 1.0);
  EXPECT_DOUBLE_EQ(wd, 0.0);
  for (int i = 0; i < 25; ++i) {
    lift.advance(1e-3);
    land.advance(1e-3);
    EXPECT_LE(lift.w(), wl);
    EXPECT_GE(land.w(), wd);
    wl = lift.w();
    wd = land.w();
  }
  EXPECT_TRUE(lift.finished());
  EXPECT_DOUBLE_EQ(land.w(), 1.0);
  TransitionState empty;
  empty.swing = "left_foot";
  CommandRequest req;
  EXPECT_THROW(transition_command(req, empty, {}), TransitionError);
  EXPECT_THROW(start_transition(TransitionDirection::Landing, 0.0, "left_foot", VecX::Ones(2)), TransitionError);
}

#include "pointfoot/planner/footstep.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace pointfoot;
using namespace pointfoot::planner;

namespace {

const double kOmega = std::sqrt(kGravity);  // z0 = 1

double lip_x(double x0, double v0, double xp, double t) {
  return xp + (x0 - xp) * std::cosh(kOmega * t) + v0 / kOmega * std::sinh(kOmega * t);
}
double lip_v(double x0, double v0, double xp, double t) {
  return (x0 - xp) * kOmega * std::sinh(kOmega * t) + v0 * std::cosh(kOmega * t);
}
double lip_footstep(double x0, double v0, double tr) { return x0 + v0 / (kOmega * std::tanh(kOmega * tr)); }

}  // namespace

TEST(HeightSurface, PolynomialDerivatives) {
  const HeightSurface s = HeightSurface::polynomial((VecX(4) << 1.0, 0.2, 0.1, 0.05).finished());
  for (double x : {-0.7, 0.0, 0.3, 1.1}) {
    const double e = 1e-5;
    EXPECT_NEAR(s.dh(x), (s.h(x + e) - s.h(x - e)) / (2 * e), 1e-8);
    EXPECT_NEAR(s.ddh(x), (s.dh(x + e) - s.dh(x - e)) / (2 * e), 1e-8);
    EXPECT_NEAR(s.h(x), 1.0 + 0.2 * x + 0.1 * x * x + 0.05 * x * x * x, 1e-15);
  }
}

TEST(HeightSurface, PiecewiseContinuityIsChecked) {
  // 1 + 0.1 x^2 split at x = 1, re-expanded about the break
  const HeightSurface ok({0.0, 1.0}, {(VecX(3) << 1.0, 0.0, 0.1).finished(), (VecX(3) << 1.1, 0.2, 0.1).finished()});
  EXPECT_NEAR(ok.h(2.0), 1.4, 1e-14);
  EXPECT_THROW(HeightSurface({0.0, 1.0}, {(VecX(1) << 1.0).finished(), (VecX(1) << 1.2).finished()}),
               PlannerError);
  EXPECT_THROW(HeightSurface({0.0, 1.0}, {(VecX(2) << 1.0, 0.1).finished(), (VecX(2) << 1.1, 0.0).finished()}),
               PlannerError);
}

TEST(PipmAccel, FlatSurfaceIsLinearPendulum) {
  const HeightSurface flat = HeightSurface::flat(1.0);
  EXPECT_NEAR(pipm_accel({0.0, 0.1, 0.3, 0.0}, flat), 0.981, 1e-12);
  EXPECT_EQ(pipm_accel({0.0, 0.4, 2.0, 0.4}, HeightSurface::polynomial((VecX(3) << 1, 0.3, 0.2).finished())), 0.0);
}

TEST(PipmAccel, MatchesImplicitHeightConstraint) {
  // Solve xdd = (g + zdd)/z (x - xp) with zdd = h'' xd^2 + h' xdd by Newton iteration.
  const HeightSurface s = HeightSurface::polynomial((VecX(3) << 1.0, 0.0, 0.1).finished());
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int trial = 0; trial < 100; ++trial) {
    const PipmState st{0.0, u(rng), 2 * u(rng), u(rng)};
    const double z = 1.0 + 0.1 * st.x * st.x, dz = 0.2 * st.x, ddz = 0.2;
    auto r = [&](double a) { return a - (kGravity + ddz * st.xdot * st.xdot + dz * a) / z * (st.x - st.xp); };
    double a = 0.0;
    for (int it = 0; it < 50; ++it) a -= r(a) / (1.0 - dz / z * (st.x - st.xp));
    EXPECT_NEAR(pipm_accel(st, s), a, 1e-10);
  }
}

TEST(PipmAccel, SingularDenominatorThrows) {
  // z - (x - xp) h' = 1 + xp for h = 1 + x
  const HeightSurface s = HeightSurface::polynomial((VecX(2) << 1.0, 1.0).finished());
  EXPECT_THROW(pipm_accel({0.0, 0.3, 0.0, -1.0}, s), PlannerError);
}

TEST(IntegratePipm, MatchesClosedForm) {
  const HeightSurface flat = HeightSurface::flat(1.0);
  const PipmState s0{0.0, 0.05, -0.3, 0.02};
  const PipmTrajectory tr = integrate_pipm(s0, flat, 0.5);
  EXPECT_EQ(tr.event, PipmEvent::Time);
  EXPECT_NEAR(tr.back().t, 0.5, 1e-15);
  for (const auto& s : tr.states) {
    EXPECT_NEAR(s.x, lip_x(s0.x, s0.xdot, s0.xp, s.t), 1e-6);
    EXPECT_NEAR(s.xdot, lip_v(s0.x, s0.xdot, s0.xp, s.t), 1e-6);
  }
}

TEST(IntegratePipm, EquilibriumIsStationary) {
  const PipmTrajectory tr = integrate_pipm({0.0, 0.2, 0.0, 0.2}, HeightSurface::flat(0.9), 2.0);
  EXPECT_EQ(tr.back().x, 0.2);
  EXPECT_EQ(tr.back().xdot, 0.0);
}

TEST(IntegratePipm, OrbitalEnergyIsConserved) {
  const PipmState s0{0.0, -0.1, 0.6, 0.05};
  const PipmTrajectory tr = integrate_pipm(s0, HeightSurface::flat(1.0), 1.0);
  const double e0 = orbital_energy(s0, 1.0);
  for (const auto& s : tr.states) EXPECT_NEAR(orbital_energy(s, 1.0), e0, 1e-8);
}

TEST(IntegratePipm, VelocityReversalEventIsLocated) {
  // negative orbital energy: the COM stops short of the foot and falls back
  const PipmState s0{0.0, -0.2, 0.5, 0.0};
  const PipmTrajectory tr =
      integrate_pipm(s0, HeightSurface::flat(1.0), 1.0, [](const PipmState& s) { return s.xdot; });
  ASSERT_EQ(tr.event, PipmEvent::Crossing);
  // xdot = 0 where tanh(w t) = -v0 / (w (x0 - xp))
  const double t_star = std::atanh(-s0.xdot / (kOmega * (s0.x - s0.xp))) / kOmega;
  EXPECT_NEAR(tr.back().t, t_star, 1e-9);
}

TEST(IntegratePipm, SingularityTruncates) {
  const HeightSurface s = HeightSurface::polynomial((VecX(2) << 1.0, 1.0).finished());
  // the denominator 1 + x - (x - xp) vanishes for xp = -1
  const PipmTrajectory tr = integrate_pipm({0.0, 0.3, 0.0, -1.0}, s, 0.1);
  EXPECT_EQ(tr.event, PipmEvent::Singular);
  EXPECT_EQ(tr.states.size(), 1u);
}

TEST(SwitchingState, ZeroRemainingIsIdentity) {
  const PipmState s{1.5, 0.1, 0.4, 0.0};
  const PipmState w = switching_state(s, 0.0, HeightSurface::flat(1.0));
  EXPECT_EQ(w.x, s.x);
  EXPECT_EQ(w.xdot, s.xdot);
  EXPECT_EQ(w.t, s.t);
}

TEST(SwitchingState, MatchesClosedForm) {
  const PipmState s{0.0, 0.03, 0.35, 0.0};
  const PipmState w = switching_state(s, 0.3, HeightSurface::flat(1.0));
  EXPECT_NEAR(w.x, lip_x(s.x, s.xdot, s.xp, 0.3), 1e-6);
  EXPECT_NEAR(w.xdot, lip_v(s.x, s.xdot, s.xp, 0.3), 1e-6);
  EXPECT_THROW(switching_state(s, -0.1, HeightSurface::flat(1.0)), PlannerError);
}

TEST(SwitchingState, TriggerToSwitchSpansLandingPhase) {
  const PlanParams p;
  EXPECT_DOUBLE_EQ(p.landing, 0.26);
  EXPECT_NEAR(p.time_to_switch_from_trigger(), 0.2 * 0.23 + 0.26, 1e-15);
}

TEST(ApplyImpact, AddsSignedBias) {
  const PipmState s{0.1, 0.2, 0.5, 0.0};
  EXPECT_EQ(apply_impact(s, 0.0).xdot, 0.5);
  EXPECT_NEAR(apply_impact(s, -0.1).xdot, 0.4, 1e-15);
  EXPECT_EQ(apply_impact(s, -0.1).x, s.x);
  EXPECT_EQ(apply_impact(s, -0.1).t, s.t);
  EXPECT_DOUBLE_EQ(PlanParams{}.impact_bias_x, -0.01);
}

TEST(FindFootstep, StationaryStateStepsUnderCom) {
  const FootstepResult r = find_footstep({0.0, 0.12, 0.0, 0.0}, HeightSurface::flat(1.0), 0.25, 0.35);
  EXPECT_NEAR(r.p, 0.12, 1e-5);
  EXPECT_FALSE(r.saturated);
}

TEST(FindFootstep, MatchesClosedFormReversal) {
  const FootstepResult r = find_footstep({0.0, 0.0, 0.5, 0.0}, HeightSurface::flat(1.0), 0.25, 0.35);
  // the quoted value 0.2435 is rounded; the closed form gives 0.24393
  EXPECT_NEAR(lip_footstep(0.0, 0.5, 0.25), 0.2435, 5e-4);
  EXPECT_NEAR(r.p, lip_footstep(0.0, 0.5, 0.25), 1e-5);
  EXPECT_FALSE(r.saturated);
  EXPECT_LE(std::abs(r.reversal.xdot), 1e-4);
}

TEST(FindFootstep, OracleGrid) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> ux(-0.3, 0.3), uv(-0.6, 0.6), ut(0.18, 0.4);
  for (int i = 0; i < 200; ++i) {
    const double x0 = ux(rng), v0 = uv(rng), tr = ut(rng);
    const FootstepResult r = find_footstep({0.0, x0, v0, 0.0}, HeightSurface::flat(1.0), tr, 1.0);
    EXPECT_NEAR(r.p, lip_footstep(x0, v0, tr), 1e-5);
  }
}

TEST(FindFootstep, SaturatesAtReach) {
  const double demanded = lip_footstep(0.0, 1.0, 0.25);
  ASSERT_GT(demanded, 0.35);
  const FootstepResult r = find_footstep({0.0, 0.0, 1.0, 0.0}, HeightSurface::flat(1.0), 0.25, 0.35);
  EXPECT_EQ(r.p, 0.35);
  EXPECT_TRUE(r.saturated);
  const FootstepResult b = find_footstep({0.0, 0.0, -1.0, 0.0}, HeightSurface::flat(1.0), 0.25, 0.35);
  EXPECT_EQ(b.p, -0.35);
  EXPECT_TRUE(b.saturated);
}

TEST(FindFootstep, RejectsNonPositiveReversalTime) {
  EXPECT_THROW(find_footstep({}, HeightSurface::flat(1.0), 0.0, 0.35), PlannerError);
  PlanParams p;
  p.t_reversal = 0.0;
  EXPECT_THROW(p.validate(), PlannerError);
}

TEST(FindFootstep, MonotoneOnCurvedSurfaces) {
  for (const double c2 : {0.0, 0.25, -0.25}) {
    const HeightSurface s = HeightSurface::polynomial((VecX(3) << 1.0, 0.05, c2).finished());
    const PipmState post{0.0, 0.02, 0.4, 0.0};
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 100; ++k) {
      const double p = post.x - 0.35 + 0.7 * k / 99.0;
      const double v = reversal_state(post, p, 0.25, s).xdot;
      EXPECT_LT(v, prev);
      prev = v;
    }
  }
}

TEST(FindFootstep, ReversalContractOnCurvedSurface) {
  const HeightSurface s = HeightSurface::polynomial((VecX(3) << 1.0, -0.05, 0.3).finished());
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> uv(-0.5, 0.5);
  for (int i = 0; i < 30; ++i) {
    const PipmState post{0.0, 0.05, uv(rng), 0.0};
    const FootstepResult r = find_footstep(post, s, 0.25, 0.5);
    ASSERT_FALSE(r.saturated);
    EXPECT_LE(std::abs(reversal_state(post, r.p, 0.25, s).xdot), 1e-4);
  }
}

TEST(FindFootstep, ReplanningIsBitIdentical) {
  const HeightSurface s = HeightSurface::polynomial((VecX(3) << 1.0, 0.1, 0.2).finished());
  const PipmState post{0.3, 0.1, 0.37, 0.0};
  EXPECT_EQ(find_footstep(post, s, 0.24, 0.35).p, find_footstep(post, s, 0.24, 0.35).p);
}

TEST(Plan3d, NoAdjustmentWithinSpeedBand) {
  PlanParams p;
  p.t_reversal = 0.24;
  const double T = p.time_to_switch_from_trigger();
  const PipmState ny{0.0, 0.02, 0.25, 0.0}, nx{0.0, 0.0, 0.1, 0.0};
  const double vy = lip_v(0.02, 0.25, 0.0, T);
  ASSERT_GT(vy, 0.1);
  ASSERT_LT(vy, 0.65);
  const HeightSurface flat = HeightSurface::flat(1.0);
  const FootstepPlan plan = plan_3d(nx, ny, flat, flat, p, T);
  EXPECT_EQ(plan.adjustment, TimeAdjustment::None);
  EXPECT_DOUBLE_EQ(plan.switch_time, T);
  const FootstepPlan planar = plan_1d(nx, flat, p, T);
  EXPECT_EQ(plan.x.step.p, planar.x.step.p);
}

TEST(Plan3d, FastLateralStateShortensStep) {
  PlanParams p;
  p.t_reversal = 0.24;
  const double T = p.time_to_switch_from_trigger();
  const PipmState ny{0.0, 0.1, 0.4, 0.0}, nx{0.0, 0.0, 0.2, 0.0};
  const HeightSurface flat = HeightSurface::flat(1.0);
  const FootstepPlan plan = plan_3d(nx, ny, flat, flat, p, T);
  EXPECT_EQ(plan.adjustment, TimeAdjustment::Shortened);
  EXPECT_LT(plan.switch_time, T);
  EXPECT_NEAR(std::abs(plan.y->switching.xdot), 0.65, 1e-9);
  // time where the closed-form lateral speed reaches 0.65
  // v = c cosh + d sinh = 0.65 with u = exp(w t)
  const double c = 0.4, d = 0.1 * kOmega;
  const double u = (1.3 + std::sqrt(1.69 - 4 * (c + d) * (c - d))) / (2 * (c + d));
  EXPECT_NEAR(plan.switch_time, std::log(u) / kOmega, 1e-6);
  const PipmState sx = switching_state(nx, plan.switch_time, flat);
  EXPECT_EQ(plan.x.switching.x, sx.x);
  EXPECT_EQ(plan.x.switching.xdot, sx.xdot);
  EXPECT_NEAR(plan.x.switching.x, lip_x(0.0, 0.2, 0.0, plan.switch_time), 1e-6);
}

TEST(Plan3d, SlowLateralStateExtendsStep) {
  PlanParams p;
  p.t_reversal = 0.24;
  const double T = p.time_to_switch_from_trigger();
  const double y0 = 0.005, v0 = 0.03;
  const PipmState ny{0.0, y0, v0, 0.0}, nx{0.0, 0.0, 0.0, 0.0};
  ASSERT_LT(lip_v(y0, v0, 0.0, T), 0.1);
  const HeightSurface flat = HeightSurface::flat(1.0);
  const FootstepPlan plan = plan_3d(nx, ny, flat, flat, p, T);
  EXPECT_EQ(plan.adjustment, TimeAdjustment::Extended);
  EXPECT_GT(plan.switch_time, T);
  EXPECT_NEAR(plan.y->switching.xdot, 0.1, 1e-9);
  // (c + d) u^2 - 0.2 u + (c - d) = 0 with u = exp(w t)
  const double c = v0, d = y0 * kOmega;
  const double u = (0.2 + std::sqrt(0.04 - 4 * (c + d) * (c - d))) / (2 * (c + d));
  EXPECT_NEAR(plan.switch_time, std::log(u) / kOmega, 1e-6);
}

TEST(Plan3d, LateralErrorsCarryAxisTag) {
  const HeightSurface bad = HeightSurface::polynomial((VecX(2) << 1.0, 1.0).finished());
  try {
    plan_3d({}, {0.0, 0.3, 0.0, -1.0}, HeightSurface::flat(1.0), bad, PlanParams{}, 0.3);
    FAIL() << "expected a planner error";
  } catch (const PlannerError& e) {
    EXPECT_EQ(e.axis, "y");
  }
}

TEST(Observer, UnitGainPassesMeasurementThrough) {
  PipmObserver obs;
  obs.update(0.1, 0.2, 0.0, HeightSurface::flat(1.0), 1e-3);
  obs.update(0.3, -0.4, 0.0, HeightSurface::flat(1.0), 1e-3);
  EXPECT_EQ(obs.x(), 0.3);
  EXPECT_EQ(obs.xdot(), -0.4);
  EXPECT_THROW(PipmObserver(0.0, 1.0), PlannerError);
}

TEST(Observer, ConsistentMeasurementsAreTrackedExactly) {
  const HeightSurface flat = HeightSurface::flat(1.0);
  PipmObserver obs(0.3, 0.3);
  const PipmState s0{0.0, 0.05, 0.3, 0.0};
  obs.update(s0.x, s0.xdot, 0.0, flat, 1e-3);
  for (int k = 1; k <= 300; ++k) {
    const double t = k * 1e-3;
    obs.update(lip_x(s0.x, s0.xdot, 0.0, t), lip_v(s0.x, s0.xdot, 0.0, t), 0.0, flat, 1e-3);
  }
  EXPECT_NEAR(obs.x(), lip_x(s0.x, s0.xdot, 0.0, 0.3), 1e-9);
  EXPECT_NEAR(obs.xdot(), lip_v(s0.x, s0.xdot, 0.0, 0.3), 1e-9);
}

TEST(PlanLog, HeaderAndRow) {
  std::ostringstream os;
  PlanLogRow r;
  r.step = 3;
  r.axis = "x";
  r.p_planned = 0.25;
  write_plan_log({r}, os);
  std::istringstream is(os.str());
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_EQ(header.substr(0, 22), "step,axis,trigger_time");
  EXPECT_EQ(row.substr(0, 4), "3,x,");
}

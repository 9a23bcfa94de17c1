#pragma once

// Command-line front end: run, plan, validate and oracle subcommands.
// Exit codes: 0 success, 1 error, 2 run ended fall-flagged.

#include "pointfoot/estimator/attitude.hpp"
#include "pointfoot/model/dynamics.hpp"
#include "pointfoot/sim/scenario.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

namespace pointfoot::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using estimator::Quat;

enum ExitCode { kOk = 0, kError = 1, kFell = 2 };

inline std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> log = [] {
    auto l = std::make_shared<spdlog::logger>("pointfoot", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("[%l] %v");
    std::string level = "warn";
    if (const char* env = std::getenv("POINTFOOT_LOG_LEVEL")) level = env;
    if (level == "error") l->set_level(spdlog::level::err);
    else if (level == "info") l->set_level(spdlog::level::info);
    else if (level == "debug") l->set_level(spdlog::level::debug);
    else l->set_level(spdlog::level::warn);
    return l;
  }();
  return log;
}

/// Scenario name or path to a config file.
inline fs::path resolve_config(const std::string& name_or_path, const std::string& config_dir) {
  if (name_or_path.find('/') != std::string::npos || name_or_path.ends_with(".json")) return name_or_path;
  return fs::path(config_dir) / "scenarios" / (name_or_path + ".json");
}

struct RunManifest {
  std::string scenario;
  fs::path config;
  fs::path out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  bool force = false;
};

inline bool non_empty_dir(const fs::path& p) { return fs::is_directory(p) && !fs::is_empty(p); }

inline void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p);
  if (!f) throw ConfigError("cannot write " + p.string(), {p.string()});
  f << s;
}

/// Executes one run into its own directory. The output is assembled in a
/// sibling staging directory and renamed into place; the summary is written
/// even when the run fails.
inline int execute_run(const RunManifest& man) {
  auto log = logger();
  if (non_empty_dir(man.out) && !man.force) {
    log->error("output directory {} exists and is not empty (use --force)", man.out.string());
    return kError;
  }
  const fs::path parent = man.out.has_parent_path() ? man.out.parent_path() : fs::path(".");
  fs::create_directories(parent);
  const fs::path stage = parent / ("." + man.out.filename().string() + ".staging");
  fs::remove_all(stage);
  fs::create_directories(stage);

  json summary = {{"scenario", man.scenario}, {"config_path", man.config.string()}, {"overrides", man.overrides}};
  int code = kOk;
  try {
    std::vector<std::string> ov = man.overrides;
    if (man.seed) ov.push_back("seed=" + std::to_string(*man.seed));
    const sim::ScenarioConfig cfg = sim::load_config(man.config, ov);
    const model::RobotModel m = model::load_model(cfg.model);
    log->info("running {} ({} s, seed {})", cfg.scenario, cfg.duration, cfg.seed);
    const sim::RunResult r = sim::run_scenario(cfg, m);
    std::ofstream ts(stage / "timeseries.csv");
    sim::write_timeseries_csv(r.log, m, ts);
    std::ofstream pl(stage / "plan_log.csv");
    planner::write_plan_log(r.plans, pl);
    json s = sim::summary_json(r.summary);
    s["config_path"] = man.config.string();
    s["overrides"] = man.overrides;
    summary = s;
    if (!r.summary.error.empty() && r.summary.fall_reason != "diverged") code = kError;
    else if (r.summary.fell) code = kFell;
    if (r.summary.fall_reason == "diverged") code = kError;
    log->info("{}: steps {}, fell {} {}", cfg.scenario, r.summary.steps, r.summary.fell, r.summary.fall_reason);
  } catch (const ConfigError& e) {
    summary["error"] = e.what();
    summary["error_paths"] = e.paths;
    log->error("{}", e.what());
    code = kError;
  } catch (const std::exception& e) {
    summary["error"] = e.what();
    log->error("{}", e.what());
    code = kError;
  }
  summary["exit_code"] = code;
  write_text(stage / "summary.json", summary.dump(2) + "\n");
  if (fs::exists(man.out)) fs::remove_all(man.out);
  fs::rename(stage, man.out);
  return code;
}

inline int cmd_validate(const fs::path& config, std::ostream& out) {
  auto log = logger();
  try {
    const sim::ScenarioConfig cfg = sim::load_config(config);
    const model::RobotModel m = model::load_model(cfg.model);
    sim::validate_against_model(cfg, m);
    out << config.string() << ": ok\n";
    return kOk;
  } catch (const ConfigError& e) {
    out << config.string() << ": invalid\n";
    for (const auto& p : e.paths) out << "  " << p << "\n";
    log->error("{}", e.what());
    return kError;
  } catch (const std::exception& e) {
    out << config.string() << ": invalid\n  " << e.what() << "\n";
    log->error("{}", e.what());
    return kError;
  }
}

struct PlanArgs {
  double x0 = 0.0, xdot0 = 0.0, xp = 0.0;
  double remaining = 0.0;
  double t_reversal = 0.25;
  double reach = 0.35;
  double bias = 0.0;
  double z0 = 1.0;
  std::vector<double> surface;  ///< polynomial coefficients, overrides z0
  std::string csv;
};

inline int cmd_plan(const PlanArgs& a, std::ostream& out) {
  auto log = logger();
  try {
    const planner::HeightSurface surf =
        a.surface.empty() ? planner::HeightSurface::flat(a.z0)
                          : planner::HeightSurface::polynomial(Eigen::Map<const VecX>(a.surface.data(),
                                                                                      static_cast<Eigen::Index>(a.surface.size())));
    planner::PlanParams prm;
    prm.t_reversal = a.t_reversal;
    prm.reach_x = a.reach;
    prm.impact_bias_x = a.bias;
    prm.validate();
    const planner::PipmState now{0.0, a.x0, a.xdot0, a.xp};
    const planner::FootstepPlan plan = planner::plan_1d(now, surf, prm, a.remaining);
    const auto& ap = plan.x;
    out << std::setprecision(8);
    out << "switch      t=" << ap.switching.t << " x=" << ap.switching.x << " xdot=" << ap.switching.xdot << "\n";
    out << "post-impact x=" << ap.post_impact.x << " xdot=" << ap.post_impact.xdot << "\n";
    out << "footstep    p=" << ap.step.p << (ap.step.saturated ? " (saturated)" : "") << "\n";
    out << "reversal    t=" << ap.step.reversal.t << " x=" << ap.step.reversal.x << " xdot=" << ap.step.reversal.xdot
        << "\n";
    if (ap.step.saturated) log->warn("footstep saturated at the reach limit {}", a.reach);
    if (!a.csv.empty()) {
      std::ofstream f(a.csv);
      if (!f) throw ConfigError("cannot write " + a.csv, {a.csv});
      f << std::setprecision(12) << "segment,t,x,xdot,xp\n";
      const auto pre = planner::integrate_pipm(now, surf, a.remaining);
      for (const auto& s : pre.states) f << "pre," << s.t << ',' << s.x << ',' << s.xdot << ',' << s.xp << '\n';
      planner::PipmState post = ap.post_impact;
      post.xp = ap.step.p;
      const auto after = planner::integrate_pipm(post, surf, a.t_reversal);
      for (const auto& s : after.states) f << "post," << s.t << ',' << s.x << ',' << s.xdot << ',' << s.xp << '\n';
    }
    return kOk;
  } catch (const PlannerError& e) {
    out << "planner error (axis " << e.axis << "): " << e.what() << "\n";
    log->error("{}", e.what());
    return kError;
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return kError;
  }
}

/// Brute-force reference values: finite-difference dynamics, LIP closed
/// forms and a quaternion Monte-Carlo search.
inline json oracle_values(const std::string& config_dir, std::uint64_t seed) {
  json j;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (const auto* name : {"hume_planar", "hume_spatial"}) {
    const model::RobotModel m = model::load_model(fs::path(config_dir) / "models" / (std::string(name) + ".json"));
    VecX q(m.dofs()), qd(m.dofs());
    for (int i = 0; i < m.dofs(); ++i) q[i] = u(rng), qd[i] = u(rng);
    const model::Kinematics kin(m, q, qd);
    const MatX A = model::mass_matrix(m, kin, false);
    MatX A_id(m.dofs(), m.dofs());
    const VecX zero = VecX::Zero(m.dofs());
    const model::Kinematics kin0(m, q, zero);
    const VecX g = model::inverse_dynamics(m, kin0, zero, zero, true);
    for (int k = 0; k < m.dofs(); ++k) A_id.col(k) = model::inverse_dynamics(m, kin0, zero, VecX::Unit(m.dofs(), k), true) - g;
    const auto& c = m.contact("right_foot");
    const MatX J = kin0.point_jacobian3(c.body, c.offset);
    MatX Jfd(3, m.dofs());
    const double h = 1e-6;
    for (int k = 0; k < m.dofs(); ++k) {
      VecX qp = q, qm = q;
      qp[k] += h;
      qm[k] -= h;
      Jfd.col(k) = (model::Kinematics(m, qp, zero).point_position(c.body, c.offset) -
                    model::Kinematics(m, qm, zero).point_position(c.body, c.offset)) /
                   (2 * h);
    }
    j["dynamics"][name] = {{"mass_matrix_vs_unit_acceleration", (A - A_id).cwiseAbs().maxCoeff()},
                           {"jacobian_vs_finite_difference", (J - Jfd).cwiseAbs().maxCoeff()}};
  }
  json lip = json::array();
  const double g = 9.81, z0 = 1.0, w = std::sqrt(g / z0);
  for (double xd : {-0.5, -0.2, 0.2, 0.5})
    for (double tr : {0.2, 0.25, 0.3}) {
      const double closed = xd / (w * std::tanh(w * tr));
      const auto r = planner::find_footstep({0.0, 0.0, xd, 0.0}, planner::HeightSurface::flat(z0), tr, 1.0);
      lip.push_back({{"xdot0", xd}, {"t_reversal", tr}, {"closed_form", closed}, {"bisection", r.p}});
    }
  j["lip"] = lip;
  std::normal_distribution<double> n01(0.0, 1.0);
  Mat3 M;
  for (int i = 0; i < 9; ++i) M(i / 3, i % 3) = n01(rng);
  const Quat qs = estimator::closest_quaternion(M);
  double best = -INFINITY;
  for (int i = 0; i < 200000; ++i) {
    Quat r(n01(rng), n01(rng), n01(rng), n01(rng));
    r.normalize();
    best = std::max(best, (r.toRotationMatrix().transpose() * M).trace());
  }
  j["quaternion"] = {{"projection_alignment", (qs.toRotationMatrix().transpose() * M).trace()},
                     {"monte_carlo_best", best}};
  return j;
}

/// Entry point shared by the executable and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout) {
  CLI::App app{"Point-foot biped whole-body control toolkit"};
  app.require_subcommand(1);
  std::string config_dir = POINTFOOT_CONFIG_DIR;
  app.add_option("--config-dir", config_dir, "Directory holding models/ and scenarios/");

  auto* run = app.add_subcommand("run", "Run one or more scenarios");
  std::vector<std::string> scenarios;
  std::string config, outdir;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  bool force = false;
  int workers = 1;
  run->add_option("scenario", scenarios, "Scenario names or config paths");
  run->add_option("--config", config, "Configuration file");
  run->add_option("--out", outdir, "Output directory");
  run->add_option("--seed", seed, "Seed override");
  run->add_option("--set", sets, "Override key=value (dotted path)")->take_all();
  run->add_flag("--force", force, "Replace a non-empty output directory");
  run->add_option("--workers", workers, "Parallel runs")->check(CLI::PositiveNumber);

  auto* plan = app.add_subcommand("plan", "One-shot footstep plan");
  PlanArgs pa;
  plan->add_option("--x0", pa.x0);
  plan->add_option("--xdot0", pa.xdot0);
  plan->add_option("--xp", pa.xp, "Stance foot position");
  plan->add_option("--remaining", pa.remaining, "Time until the switch (s)");
  plan->add_option("--t-reversal", pa.t_reversal);
  plan->add_option("--reach", pa.reach);
  plan->add_option("--bias", pa.bias, "Impact velocity bias (m/s)");
  plan->add_option("--z0", pa.z0, "Flat surface height");
  plan->add_option("--surface", pa.surface, "Polynomial surface coefficients c0 c1 ...")->delimiter(',');
  plan->add_option("--csv", pa.csv, "Write the phase trajectory");

  auto* validate = app.add_subcommand("validate", "Check configuration files without running");
  std::vector<std::string> vconfigs;
  validate->add_option("config", vconfigs, "Configuration files")->required();

  auto* oracle = app.add_subcommand("oracle", "Compute brute-force reference values");
  std::string oracle_out;
  std::uint64_t oracle_seed = 1;
  oracle->add_option("--out", oracle_out, "Write JSON here instead of stdout");
  oracle->add_option("--seed", oracle_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kError;
  }

  if (*run) {
    std::vector<RunManifest> jobs;
    if (!config.empty()) scenarios.insert(scenarios.begin(), config);
    if (scenarios.empty()) {
      logger()->error("run needs a scenario name or --config");
      return kError;
    }
    for (const auto& s : scenarios) {
      RunManifest m;
      m.config = resolve_config(s, config_dir);
      m.scenario = m.config.stem().string();
      const fs::path base = outdir.empty() ? fs::path("runs") : fs::path(outdir);
      m.out = scenarios.size() == 1 && !outdir.empty() ? base : base / m.scenario;
      m.seed = seed;
      m.overrides = sets;
      m.force = force;
      if (!fs::exists(m.config)) {
        logger()->error("configuration file not found: {}", m.config.string());
        out << "error: configuration file not found: " << m.config.string() << "\n";
        return kError;
      }
      jobs.push_back(m);
    }
    std::vector<int> codes(jobs.size(), kOk);
    std::atomic<size_t> next{0};
    auto worker = [&] {
      for (size_t i; (i = next++) < jobs.size();) codes[i] = execute_run(jobs[i]);
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min<int>(workers, static_cast<int>(jobs.size())); ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    int code = kOk;
    for (size_t i = 0; i < jobs.size(); ++i) {
      out << jobs[i].scenario << ": " << (codes[i] == kOk ? "completed" : codes[i] == kFell ? "fell" : "error") << " -> "
          << jobs[i].out.string() << "\n";
      if (codes[i] == kError) code = kError;
      else if (codes[i] == kFell && code == kOk) code = kFell;
    }
    return code;
  }
  if (*plan) return cmd_plan(pa, out);
  if (*validate) {
    int code = kOk;
    for (const auto& v : vconfigs)
      if (cmd_validate(resolve_config(v, config_dir), out) != kOk) code = kError;
    return code;
  }
  if (*oracle) {
    try {
      const json j = oracle_values(config_dir, oracle_seed);
      if (oracle_out.empty()) out << j.dump(2) << "\n";
      else write_text(oracle_out, j.dump(2) + "\n");
      return kOk;
    } catch (const std::exception& e) {
      logger()->error("{}", e.what());
      return kError;
    }
  }
  return kError;
}

}  // namespace pointfoot::cli

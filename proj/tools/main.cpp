// Command-line front end: single episodes, sweep grids, trace generation and
// a quick built-in self-check. Exit codes: 0 success, 1 episode/check fault,
// 2 configuration error.

#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "edgewbc/sweep.hpp"

namespace {

using namespace edgewbc;

struct RunFlags {
  std::string config_path;
  std::string model_path;
  std::string task;
  std::string controller;
  std::string channel;
  std::string out_dir = ".";
  double duration = -1.0;
  double noise_sigma = -1.0;
  double push_force = -1.0;
  bool no_push = false;
  bool log_discrepancy = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

int cmd_run(const RunFlags& flags) {
  RobotModel model;
  EpisodeConfig cfg;
  if (!flags.config_path.empty()) {
    LoadedConfig loaded = load_episode_config(flags.config_path);
    model = loaded.model;
    cfg = loaded.episode;
  } else {
    cfg = flags.task.empty() ? balance_episode_defaults()
                             : (parse_episode_kind(flags.task) == EpisodeKind::Balance
                                    ? balance_episode_defaults()
                                    : walk_episode_defaults());
    model = default_biped_model();
  }
  if (!flags.model_path.empty()) model = load_model(flags.model_path);
  if (!flags.task.empty()) {
    const EpisodeKind kind = parse_episode_kind(flags.task);
    if (kind != cfg.kind) {
      const EpisodeConfig fresh = kind == EpisodeKind::Balance ? balance_episode_defaults()
                                                               : walk_episode_defaults();
      cfg.kind = fresh.kind;
      cfg.noise_sigma = fresh.noise_sigma;
      cfg.push = fresh.push;
    }
  }
  if (!flags.controller.empty()) cfg.scheme = parse_control_scheme(flags.controller);
  if (!flags.channel.empty()) cfg.channel = parse_channel_spec(flags.channel);
  if (flags.duration > 0.0) cfg.duration = flags.duration;
  if (flags.noise_sigma >= 0.0) cfg.noise_sigma = flags.noise_sigma;
  if (flags.push_force >= 0.0) {
    cfg.push.enabled = true;
    cfg.push.force = flags.push_force;
  }
  if (flags.no_push) cfg.push.enabled = false;
  if (flags.seed_set) cfg.seed = flags.seed;
  cfg.log_cycles = true;
  cfg.log_discrepancy = flags.log_discrepancy;

  std::filesystem::create_directories(flags.out_dir);
  const EpisodeResult res = run_episode(model, cfg);

  const std::string results_path = flags.out_dir + "/results.csv";
  const std::string cycles_path = flags.out_dir + "/cycles.csv";
  write_results_csv({{SweepItem{"run", cfg}, res}}, results_path);
  write_cycle_log(res.records, cycles_path);

  std::printf("task=%s controller=%s channel=%s seed=%llu\n", to_string(cfg.kind),
              to_string(cfg.scheme), cfg.channel.describe().c_str(),
              static_cast<unsigned long long>(cfg.seed));
  std::printf("%s after %d cycles (%.3f s)\n", res.completed ? "completed" : "FELL",
              res.cycles, res.cycles * cfg.scheduler.ctrl_period);
  std::printf("com_error_avg=%.6g m  violation_avg=%.6g  violation_max=%.6g\n",
              res.com_error_avg, res.violation_avg, res.violation_max);
  std::printf("sources: fresh=%.1f%% cached=%.1f%% onboard=%.1f%% faults=%d\n",
              100.0 * res.fresh_fraction, 100.0 * res.cached_fraction,
              100.0 * res.onboard_fraction, res.fault_cycles);
  std::printf("channel: sent=%lld delivered=%lld dropped=%lld late=%lld p50=%.4g s\n",
              static_cast<long long>(res.channel.sent),
              static_cast<long long>(res.channel.delivered),
              static_cast<long long>(res.channel.dropped),
              static_cast<long long>(res.channel.late), res.delay_p50);
  std::printf("wrote %s and %s\n", results_path.c_str(), cycles_path.c_str());
  return res.completed ? 0 : 1;
}

int cmd_sweep(const std::string& grid_path, int jobs, const std::string& out_dir) {
  const SweepGrid grid = load_sweep_grid(grid_path);
  std::filesystem::create_directories(out_dir);
  const std::vector<SweepRow> rows = run_sweep(grid.model, grid.items, jobs);
  const std::string results_path = out_dir + "/results.csv";
  write_results_csv(rows, results_path);
  const SweepSummary sum = summarize(rows);
  std::printf("%d episodes, %d completed (%.1f%%)\n", sum.total, sum.succeeded,
              100.0 * sum.success_rate);
  if (sum.succeeded > 0)
    std::printf("successful trials: com_error_avg=%.6g violation_avg=%.6g\n",
                sum.com_error_avg, sum.violation_avg);
  std::printf("wrote %s\n", results_path.c_str());
  return 0;  // individual failures are data, not errors
}

int cmd_trace_gen(const std::string& preset, double duration, std::uint64_t seed,
                  const std::string& out_path) {
  const ChannelConfig cfg = parse_channel_spec(preset);
  DelayChannel channel(cfg, seed);
  const Trace trace = channel.export_trace(duration);
  save_trace(trace, out_path);
  std::size_t drops = 0;
  for (double r : trace.rtt)
    if (!std::isfinite(r)) ++drops;
  std::printf("wrote %s: %zu slots, %zu drops\n", out_path.c_str(), trace.slots(), drops);
  return 0;
}

// Reduced self-check battery; the full suites live in the test binaries.
int cmd_check() {
  int failures = 0;
  auto report = [&](const char* name, bool ok) {
    std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", name);
    if (!ok) ++failures;
  };

  const RobotModel m = default_biped_model();
  Rng rng(20240817);

  {  // Inertia matrix vs Newton-Euler sweep, gravity off, v = 0.
    bool ok = true;
    for (int trial = 0; trial < 20 && ok; ++trial) {
      Vec q(m.nv()), a(m.nv());
      for (int i = 0; i < m.nv(); ++i) q[i] = rng.uniform(-1.0, 1.0);
      for (int i = 0; i < m.nv(); ++i) a[i] = rng.uniform(-1.0, 1.0);
      const Vec lhs = mass_matrix(m, q) * a;
      const Vec rhs = inverse_dynamics(m, q, Vec::Zero(m.nv()), a, Vec2(0.0, 0.0));
      ok = (lhs - rhs).norm() < 1e-8 * std::max(1.0, rhs.norm());
    }
    report("inertia matrix consistent with Newton-Euler sweep", ok);
  }

  {  // Contact acceleration residual of the constrained plant.
    ContactSet both;
    both.frames = {m.contact_frame_index("l_foot_point"),
                   m.contact_frame_index("r_foot_point")};
    RobotState s = solve_initial_pose(
        m, {{both.frames[0], -0.1}, {both.frames[1], 0.1}}, 0.0, 0.8);
    bool ok = true;
    for (int trial = 0; trial < 10 && ok; ++trial) {
      Vec tau(m.num_joints());
      for (int i = 0; i < tau.size(); ++i) tau[i] = rng.uniform(-20.0, 20.0);
      const auto fd = constrained_forward_dynamics(m, s, tau, both);
      const Vec resid = contact_jacobian(m, s.q, both) * fd.qdd +
                        contact_drift(m, s.q, s.v, both);
      ok = resid.norm() < 1e-8;
    }
    report("constrained dynamics keep contact accelerations zero", ok);
  }

  {  // QP solver satisfies its optimality conditions on random instances.
    bool ok = true;
    for (int trial = 0; trial < 100 && ok; ++trial) {
      const int n = 4 + static_cast<int>(rng.uniform(0.0, 5.0));
      const int mi = 2 + static_cast<int>(rng.uniform(0.0, 5.0));
      QpProblem p;
      p.n = n;
      p.nv = n;
      p.A_eq = Mat::Zero(0, n);
      p.b_eq = Vec::Zero(0);
      p.A_in = Mat(mi, n);
      p.b_in = Vec(mi);
      p.C = Mat(n + 2, n);
      p.d = Vec(n + 2);
      for (int i = 0; i < mi; ++i) {
        for (int j = 0; j < n; ++j) p.A_in(i, j) = rng.gaussian();
        p.b_in[i] = rng.uniform(0.05, 1.0);  // y = 0 strictly feasible
      }
      for (int i = 0; i < n + 2; ++i) {
        for (int j = 0; j < n; ++j) p.C(i, j) = rng.gaussian();
        p.d[i] = rng.gaussian();
      }
      const Solution sol = solve(p);
      Vec grad = p.C.transpose() * (p.C * sol.y - p.d);
      bool feasible = true;
      for (int i = 0; i < mi; ++i)
        feasible = feasible && p.A_in.row(i).dot(sol.y) <= p.b_in[i] + 1e-7;
      for (std::size_t i = 0; i < sol.active.rows.size(); ++i) {
        const int row = sol.active.rows[i];
        grad += p.A_in.row(row).transpose() * sol.multipliers[static_cast<int>(i)];
        feasible = feasible && sol.multipliers[static_cast<int>(i)] >= -1e-7;
      }
      ok = feasible && grad.norm() < 1e-6 * std::max(1.0, p.d.norm());
    }
    report("active-set solver satisfies optimality conditions", ok);
  }

  {  // Factorization round-trips through bytes and stays linear.
    ContactSet both;
    both.frames = {m.contact_frame_index("l_foot_point"),
                   m.contact_frame_index("r_foot_point")};
    RobotState s = solve_initial_pose(
        m, {{both.frames[0], -0.1}, {both.frames[1], 0.1}}, 0.0, 0.8);
    const Vec posture = s.q.tail(m.num_joints());
    std::vector<TaskSpec> tasks = {make_com_task(Vec2(0.0, 0.8)),
                                   make_posture_task(posture)};
    const QpProblem p = build_problem(m, s, tasks, both, 0.0);
    const Solution sol = solve(p);
    const Decomposition back = Decomposition::deserialize(sol.decomp.serialize());
    Vec b1(sol.decomp.rhs_size()), b2(sol.decomp.rhs_size());
    for (int i = 0; i < b1.size(); ++i) b1[i] = rng.gaussian();
    for (int i = 0; i < b2.size(); ++i) b2[i] = rng.gaussian();
    const bool bytes_ok = (back.apply(b1) - sol.decomp.apply(b1)).norm() == 0.0;
    const Vec lin = sol.decomp.apply(b1 + 2.0 * b2);
    const Vec lin_ref = sol.decomp.apply(b1) + 2.0 * sol.decomp.apply(b2);
    report("decomposition serializes losslessly and applies linearly",
           bytes_ok && (lin - lin_ref).norm() < 1e-10 * std::max(1.0, lin_ref.norm()));
  }

  {  // Channel determinism and delay caps.
    bool ok = true;
    for (const char* name : {"smart_factory", "burning_building"}) {
      const ChannelConfig cfg = ChannelConfig::preset(name);
      DelayChannel a(cfg, 99), b(cfg, 99);
      const double cap = cfg.blockage.base_rtt_max() + cfg.blockage.extra_delay_cap;
      for (int slot = 0; slot < 4000 && ok; ++slot) {
        const auto sa = a.sample(slot);
        const auto sb = b.sample(slot);
        ok = sa.dropped == sb.dropped && (sa.dropped || sa.rtt == sb.rtt);
        if (!sa.dropped) ok = ok && sa.rtt <= cap + 1e-12 && sa.rtt > 0.0;
      }
    }
    report("channel is seed-deterministic and respects delay caps", ok);
  }

  {  // Short ideal-channel balancing episode tracks tightly.
    EpisodeConfig cfg = balance_episode_defaults();
    cfg.duration = 1.0;
    cfg.noise_sigma = 0.0;
    cfg.push.enabled = false;
    const EpisodeResult res = run_episode(m, cfg);
    report("ideal-channel balancing stays on target",
           res.completed && res.com_error_avg < 1e-3 && res.violation_avg < 1e-6);
  }

  std::printf(failures == 0 ? "all checks passed\n" : "%d check(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Remote whole-body control experiments over lossy links"};
  app.require_subcommand(1);

  RunFlags rf;
  CLI::App* run = app.add_subcommand("run", "Run a single episode");
  run->add_option("--config", rf.config_path, "Episode config JSON");
  run->add_option("--model", rf.model_path, "Robot model JSON (overrides config)");
  run->add_option("--task", rf.task, "balancing | walking");
  run->add_option("--controller", rf.controller, "la | pr");
  run->add_option("--channel", rf.channel,
                  "constant:SECS | smart_factory | burning_building | trace:PATH");
  run->add_option("--duration", rf.duration, "Episode length in seconds");
  run->add_option("--noise-sigma", rf.noise_sigma, "Measurement noise level");
  run->add_option("--push-force", rf.push_force, "Absolute push force in N");
  run->add_flag("--no-push", rf.no_push, "Disable the disturbance push");
  run->add_flag("--log-discrepancy", rf.log_discrepancy,
                "Per-cycle reference solve for working-set discrepancy");
  auto* seed_opt = run->add_option("--seed", rf.seed, "Episode seed");
  run->add_option("--out", rf.out_dir, "Output directory");

  std::string grid_path, sweep_out = ".";
  int jobs = 1;
  CLI::App* sweep = app.add_subcommand("sweep", "Run a grid of episodes");
  sweep->add_option("--grid", grid_path, "Sweep grid JSON")->required();
  sweep->add_option("--jobs", jobs, "Parallel episodes");
  sweep->add_option("--out", sweep_out, "Output directory");

  std::string preset, trace_out = "trace.csv";
  double trace_duration = 100.0;
  std::uint64_t trace_seed = 7;
  CLI::App* tgen = app.add_subcommand("trace-gen", "Export a delay trace CSV");
  tgen->add_option("--preset", preset, "Channel spec (preset or constant:SECS)")
      ->required();
  tgen->add_option("--duration", trace_duration, "Trace length in seconds");
  tgen->add_option("--seed", trace_seed, "Trace seed");
  tgen->add_option("--out", trace_out, "Output CSV path");

  CLI::App* check = app.add_subcommand("check", "Run the built-in self check");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      rf.seed_set = seed_opt->count() > 0;
      return cmd_run(rf);
    }
    if (sweep->parsed()) return cmd_sweep(grid_path, jobs, sweep_out);
    if (tgen->parsed()) return cmd_trace_gen(preset, trace_duration, trace_seed, trace_out);
    if (check->parsed()) return cmd_check();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

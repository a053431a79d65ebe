#include "edgewbc/episode.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>

namespace edgewbc {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct LegChain {
  int hip_j = -1, knee_j = -1, ankle_j = -1;
  double thigh_len = 0.0, shank_len = 0.0;
  Vec2 hip_mount = Vec2::Zero();
  FramePoint foot;
};

LegChain chain_for_foot(const RobotModel& m, int contact_frame) {
  const FramePoint fp = resolve_frame(m, contact_frame);
  const int ankle_j = fp.link - 1;  // joint j drives link j + 1
  const int knee_j = ankle_j - 1;
  const int hip_j = knee_j - 1;
  if (hip_j < 0) throw InvalidInput("pose solver: foot link needs a 3-joint leg chain");
  if (m.joints[hip_j].parent != 0)
    throw InvalidInput("pose solver: hip must be mounted on the root link");
  LegChain c;
  c.hip_j = hip_j;
  c.knee_j = knee_j;
  c.ankle_j = ankle_j;
  c.thigh_len = m.joints[knee_j].mount.norm();
  c.shank_len = m.joints[ankle_j].mount.norm();
  c.hip_mount = m.joints[hip_j].mount;
  c.foot = fp;
  return c;
}

// Planar two-link IK with the knee bending backwards and the foot flat.
void leg_angles(const LegChain& c, const Vec2& hip, const Vec2& ankle, double& qh,
                double& qk, double& qa) {
  const Vec2 d = ankle - hip;
  const double r = d.norm();
  const double L1 = c.thigh_len, L2 = c.shank_len;
  if (r > L1 + L2 - 1.0e-9 || r < std::abs(L1 - L2) + 1.0e-9)
    throw PlanError("initial pose: foot anchor out of leg reach");
  const double beta =
      std::acos(std::clamp((L1 * L1 + L2 * L2 - r * r) / (2.0 * L1 * L2), -1.0, 1.0));
  const double alpha =
      std::acos(std::clamp((L1 * L1 + r * r - L2 * L2) / (2.0 * L1 * r), -1.0, 1.0));
  const double phi = std::atan2(d.x(), -d.y());  // angle from straight down
  qh = phi + alpha;
  qk = beta - std::numbers::pi;
  qa = -(qh + qk);
}

double percentile(std::vector<double> v, double frac) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto idx =
      static_cast<std::size_t>(std::lround(frac * static_cast<double>(v.size() - 1)));
  return v[idx];
}

}  // namespace

EpisodeConfig balance_episode_defaults() {
  EpisodeConfig cfg;
  cfg.kind = EpisodeKind::Balance;
  cfg.duration = 10.0;
  cfg.noise_sigma = 1.0e-2;
  cfg.push.enabled = true;
  // Flat-footed stance: the standard push moves the capture point past the
  // foot points, so recovering without a step needs center-of-pressure range
  // over the soles.
  cfg.left_stance = {"l_heel", "l_toe"};
  cfg.right_stance = {"r_heel", "r_toe"};
  return cfg;
}

EpisodeConfig walk_episode_defaults() {
  EpisodeConfig cfg;
  cfg.kind = EpisodeKind::Walk;
  cfg.duration = 10.0;
  cfg.noise_sigma = 1.0e-3;
  cfg.push.enabled = false;
  // Flat-footed stance: with a fixed footstep timeline the stance foot needs
  // center-of-pressure authority to absorb touchdown errors, which a point
  // contact cannot provide.
  cfg.left_stance = {"l_heel", "l_toe"};
  cfg.right_stance = {"r_heel", "r_toe"};
  return cfg;
}

const char* to_string(CommandSource s) {
  switch (s) {
    case CommandSource::Remote: return "remote";
    case CommandSource::Cached: return "cached";
    case CommandSource::Onboard: return "onboard";
    case CommandSource::Fault: return "fault";
  }
  return "?";
}

RobotState solve_initial_pose(const RobotModel& m,
                              const std::vector<std::pair<int, double>>& feet, double com_x,
                              double com_height) {
  if (feet.size() != 2) throw InvalidInput("pose solver expects two feet");
  if (!m.floating_base) throw InvalidInput("pose solver expects a floating base");

  std::vector<LegChain> chains;
  std::vector<Vec2> ankle_targets;
  for (const auto& [frame, fx] : feet) {
    LegChain c = chain_for_foot(m, frame);
    // Foot flat on the ground: the link frame sits at anchor - offset.
    ankle_targets.push_back(Vec2(fx, 0.0) - c.foot.offset);
    chains.push_back(c);
  }

  RobotState s = RobotState::zero(m);
  const Vec2 target(com_x, com_height);
  Vec2 base = target;  // the CoM tracks the base nearly 1:1
  for (int iter = 0; iter < 200; ++iter) {
    s.q[0] = base.x();
    s.q[1] = base.y();
    s.q[2] = 0.0;
    for (std::size_t i = 0; i < chains.size(); ++i) {
      double qh, qk, qa;
      leg_angles(chains[i], base + chains[i].hip_mount, ankle_targets[i], qh, qk, qa);
      s.q[m.base_dofs() + chains[i].hip_j] = qh;
      s.q[m.base_dofs() + chains[i].knee_j] = qk;
      s.q[m.base_dofs() + chains[i].ankle_j] = qa;
    }
    const Vec2 err = target - com_position(m, s.q);
    if (err.norm() < 1.0e-13) break;
    base += err;
  }

  if ((com_position(m, s.q) - target).norm() > 1.0e-9)
    throw PlanError("initial pose: CoM placement did not converge");
  for (const auto& [frame, fx] : feet) {
    const Vec2 p = frame_position(m, s.q, resolve_frame(m, frame));
    if ((p - Vec2(fx, 0.0)).norm() > 1.0e-9)
      throw PlanError("initial pose: foot anchor not reached");
  }
  for (int j = 0; j < m.num_joints(); ++j) {
    const double qj = s.q[m.base_dofs() + j];
    if (qj < m.joints[j].pos_min - 1.0e-9 || qj > m.joints[j].pos_max + 1.0e-9)
      throw PlanError("initial pose: joint limit violated at " + m.joints[j].name);
  }
  return s;
}

EpisodeResult run_episode(const RobotModel& m, const EpisodeConfig& cfg) {
  m.validate();
  if (cfg.duration <= 0.0) throw ConfigError("duration must be positive");
  if (cfg.noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");

  const double dt = cfg.scheduler.ctrl_period;
  const int lf = m.contact_frame_index(cfg.left_foot);
  const int rf = m.contact_frame_index(cfg.right_foot);
  auto foot_contacts = [&m](int frame, const std::vector<std::string>& stance) {
    FootContacts foot{frame, {}};
    for (const std::string& name : stance)
      foot.stance.push_back(m.contact_frame_index(name));
    if (foot.stance.empty()) foot.stance.push_back(frame);
    return foot;
  };
  const FootContacts left = foot_contacts(lf, cfg.left_stance);
  const FootContacts right = foot_contacts(rf, cfg.right_stance);

  std::shared_ptr<const WalkPlan> plan;
  std::vector<std::pair<int, double>> feet0;
  if (cfg.kind == EpisodeKind::Walk) {
    WalkParams wp = cfg.walk;
    wp.ctrl_period = dt;
    wp.gravity = m.gravity.norm();
    const int needed =
        static_cast<int>(std::ceil(cfg.duration / wp.step_duration)) + 1;
    wp.steps = std::max(wp.steps, needed);
    plan = std::make_shared<WalkPlan>(generate_walk_plan(wp, left, right));
    feet0 = plan->initial_feet;
  } else {
    ContactSet both;
    for (const FootContacts* foot : {&left, &right})
      both.frames.insert(both.frames.end(), foot->stance.begin(), foot->stance.end());
    std::sort(both.frames.begin(), both.frames.end());
    feet0 = {{lf, -0.5 * cfg.stance_width}, {rf, 0.5 * cfg.stance_width}};
    plan = std::make_shared<WalkPlan>(
        make_stance_plan(both, 0.0, cfg.walk.com_height, cfg.duration));
  }

  RobotState plant = solve_initial_pose(m, feet0, 0.0, cfg.walk.com_height);
  const double nominal_com_z = com_position(m, plant.q).y();
  const double body_weight = m.total_mass() * m.gravity.norm();
  std::vector<double> dbg_sviol;

  const Vec posture = plant.q.tail(m.num_joints());
  auto schedule = std::make_shared<TaskSchedule>(m, plan, posture, cfg.weights);
  RemoteServer remote(schedule, cfg.solver);
  OnboardSolver onboard(schedule, cfg.scheduler.onboard_latency(), cfg.solver);
  LocalExecutor exec(schedule, cfg.scheme, cfg.scheduler.freshness_bound);
  DelayChannel channel(cfg.channel, cfg.seed);
  Rng noise_rng(mix_seed(cfg.seed, 3));

  // Boot with a local solve maturing at t = 0, so the first cycles before any
  // remote reply have a consistent command instead of free-falling.
  {
    RobotState meas0 = plant;
    meas0.t = 0.0;
    try {
      onboard.start(-cfg.scheduler.onboard_latency(), meas0, 0.0);
    } catch (const Error&) {
      // No boot command; the first cycles run on the fault path instead.
    }
  }

  struct InFlight {
    SolutionPacket pkt;
    double reply_time = 0.0;
  };
  std::vector<InFlight> inbox;

  EpisodeResult res;
  ChannelStats stats;
  std::map<int, Vec2> anchors;
  std::map<std::uint32_t, ActiveSet> ref_warm;
  std::vector<double> delivered_rtts;
  double last_precomputed_switch = -1.0;
  double next_onboard = 0.0;
  int fault_streak = 0;
  double com_err_sum = 0.0, viol_sum = 0.0;
  long fresh_cnt = 0, cached_cnt = 0, onboard_cnt = 0;
  long disc_sum = 0, disc_cnt = 0;

  const long total_cycles = std::lround(cfg.duration / dt);
  for (long k = 0; k < total_cycles; ++k) {
    const double t = static_cast<double>(k) * dt;

    // Plant contact mode follows the shared timeline; a touchdown pins the
    // foot where it actually landed.
    const ContactSet contacts = plan->contact_mode(t);
    for (int f : contacts.frames)
      if (!anchors.count(f)) {
        const Vec2 p = frame_position(m, plant.q, resolve_frame(m, f));
        for (const FootContacts* foot : {&left, &right}) {
          if (f != foot->stance.front()) continue;
          const Vec2 pp = frame_position(m, plant.q, resolve_frame(m, foot->frame));
          const Vec2 pv = frame_velocity(m, plant.q, plant.v, resolve_frame(m, foot->frame));
          const double px = plan->planned_foot_x(foot->frame, t);
          std::fprintf(stderr, "TD t=%.3f foot=%d xmiss=%+.4f y=%+.4f vy=%+.3f vx=%+.3f\n",
                       t, foot->frame, pp.x() - px, pp.y(), pv.y(), pv.x());
        }
        anchors[f] = Vec2(p.x(), 0.0);
      }
    for (auto it = anchors.begin(); it != anchors.end();) {
      const bool held =
          std::find(contacts.frames.begin(), contacts.frames.end(), it->first) !=
          contacts.frames.end();
      it = held ? std::next(it) : anchors.erase(it);
    }

    // Measurement: additive Gaussian noise on joint positions/velocities only.
    RobotState meas = plant;
    meas.t = t;
    for (int j = 0; j < m.num_joints(); ++j)
      meas.q[m.base_dofs() + j] += cfg.noise_sigma * noise_rng.gaussian();
    for (int j = 0; j < m.num_joints(); ++j)
      meas.v[m.base_dofs() + j] += cfg.noise_sigma * noise_rng.gaussian();

    // Uplink: one round-trip transaction per control slot.
    const auto tx = channel.transact(k, t);
    ++stats.sent;
    if (tx.dropped) {
      ++stats.dropped;
    } else {
      // A solver failure (the QP can be genuinely infeasible at violent
      // states) loses the reply; the executor's fault path absorbs it.
      auto t0 = std::chrono::steady_clock::now();
      bool solved = true;
      SolutionPacket pkt;
      try {
        pkt = remote.solve(meas, t);
      } catch (const Error&) {
        solved = false;
      }
      res.solve_time.add(seconds_since(t0));
      if (solved) {
        pkt.delivery_time = tx.reply_time;
        inbox.push_back({std::move(pkt), tx.reply_time});
      } else {
        ++stats.dropped;
      }

      // Shortly before a contact switch the server also answers for the
      // upcoming mode, so the new working set is cached before it is needed.
      const double t_sw = plan->next_switch_after(t);
      if (solved && cfg.scheme == ControlScheme::LocallyAssisted && std::isfinite(t_sw) &&
          t_sw - t <= cfg.scheduler.precompute_lead && t_sw != last_precomputed_switch) {
        ++stats.sent;
        t0 = std::chrono::steady_clock::now();
        bool solved_next = true;
        SolutionPacket nxt;
        try {
          nxt = remote.solve(meas, t_sw + 0.5 * dt, true);
        } catch (const Error&) {
          solved_next = false;
        }
        res.solve_time.add(seconds_since(t0));
        if (solved_next) {
          nxt.delivery_time = tx.reply_time;
          inbox.push_back({std::move(nxt), tx.reply_time});
        } else {
          ++stats.dropped;
        }
        last_precomputed_switch = t_sw;
      }
    }

    // Deliveries due this cycle.
    for (auto it = inbox.begin(); it != inbox.end();) {
      if (it->reply_time <= t + 1.0e-12) {
        ++stats.delivered;
        delivered_rtts.push_back(it->reply_time - it->pkt.state_timestamp);
        if (t - it->pkt.state_timestamp >= cfg.scheduler.freshness_bound) ++stats.late;
        if (!exec.ingest(std::move(it->pkt), false)) ++stats.superseded;
        it = inbox.erase(it);
      } else {
        ++it;
      }
    }

    // Local solver: collect matured results; near a contact switch, run the
    // full QP on-robot at its slower cadence.
    if (auto p = onboard.poll(t)) exec.ingest(std::move(*p), true);
    if (cfg.scheme == ControlScheme::LocallyAssisted) {
      if (in_switch_window(*plan, t, cfg.scheduler.switch_margin)) {
        if (!onboard.busy() && t + 1.0e-12 >= next_onboard) {
          try {
            onboard.start(t, meas, t);
          } catch (const Error&) {
            // Infeasible at this state; try again next period.
          }
          next_onboard = t + cfg.scheduler.onboard_period;
        }
      } else {
        next_onboard = t;
      }
    }

    auto t0 = std::chrono::steady_clock::now();
    const CycleCommand cmd = exec.step(t, meas);
    res.apply_time.add(seconds_since(t0));

    if (cmd.fault) {
      ++fault_streak;
      ++res.fault_cycles;
    } else {
      fault_streak = 0;
    }

    // Metrics at the true plant state.
    const Vec2 com = com_position(m, plant.q);
    const Vec2 ref = plan->com_ref(t).pos;
    const double com_err = (com - ref).norm();
    ContactSet metric_set;
    if (cfg.kind == EpisodeKind::Balance) {
      metric_set.frames = {lf};
    } else {
      metric_set = contacts;
    }
    double viol = 0.0;
    if (metric_set.count() > 0 && cmd.qdd.size() == m.nv()) {
      const Mat J = contact_jacobian(m, plant.q, metric_set);
      const Vec gamma = contact_drift(m, plant.q, plant.v, metric_set);
      viol = (J * cmd.qdd + gamma).norm();
    }
    com_err_sum += com_err;
    viol_sum += viol;
    res.violation_max = std::max(res.violation_max, viol);

    CommandSource source = CommandSource::Fault;
    if (!cmd.fault) {
      if (cmd.onboard) {
        source = CommandSource::Onboard;
        ++onboard_cnt;
      } else if (cmd.fresh) {
        source = CommandSource::Remote;
        ++fresh_cnt;
      } else {
        source = CommandSource::Cached;
        ++cached_cnt;
      }
    }

    int disc = -1;
    if (cfg.log_discrepancy && !cmd.fault) {
      // The reference solve can fail at violent states just like the remote
      // one; such cycles stay unevaluated (-1).
      try {
        const QpProblem qp =
            build_problem(m, meas, schedule->tasks_at(t), contacts, t, cfg.weights.qp);
        const auto wit = ref_warm.find(qp.mode_id);
        const Solution ref_sol =
            solve(qp, wit == ref_warm.end() ? nullptr : &wit->second, cfg.solver);
        ref_warm[qp.mode_id] = ref_sol.active;
        disc = active_set_discrepancy(cmd.active, ref_sol.active);
        disc_sum += disc;
        res.max_discrepancy = std::max(res.max_discrepancy, disc);
        ++disc_cnt;
      } catch (const Error&) {
      }
    }

    if (cfg.log_cycles)
      res.records.push_back({t, cmd.solution_age, source, com_err, viol, disc});

    // Plant step.
    Vec ext;
    const Vec* extp = nullptr;
    if (cfg.push.active(t)) {
      ext = Vec::Zero(m.nv());
      ext(0) = cfg.push.magnitude(m);
      extp = &ext;
    }
    const ForwardDynamicsResult fd =
        constrained_forward_dynamics(m, plant, cmd.tau, contacts, extp);
    {
      double sv = 0.0;
      for (int i = 0; i < contacts.count(); ++i) {
        const double ftan = fd.forces[2 * i], fnorm = fd.forces[2 * i + 1];
        sv = std::max(sv, std::max(-fnorm, std::abs(ftan) - m.friction_coeff * fnorm));
      }
      dbg_sviol.push_back(sv / body_weight);
    }
    plant = integrate(plant, fd.qdd, dt);
    plant.t = t + dt;
    if (contacts.count() > 0) {
      std::vector<Vec2> anchor_vec;
      anchor_vec.reserve(contacts.frames.size());
      for (int f : contacts.frames) anchor_vec.push_back(anchors.at(f));
      stabilize_contacts(m, plant, contacts, anchor_vec);
    }

    ++res.cycles;

    const bool finite = plant.q.allFinite() && plant.v.allFinite();
    const Vec2 com_after = finite ? com_position(m, plant.q) : Vec2::Zero();
    if (!finite || com_after.y() < 0.6 * nominal_com_z || std::abs(plant.q[2]) > 1.0 ||
        fault_streak >= 50) {
      res.fell = true;
      res.fall_time = t + dt;
      break;
    }
  }

  res.completed = !res.fell;
  if (res.cycles > 0) {
    const double n = static_cast<double>(res.cycles);
    res.com_error_avg = com_err_sum / n;
    res.violation_avg = viol_sum / n;
    res.fresh_fraction = static_cast<double>(fresh_cnt) / n;
    res.cached_fraction = static_cast<double>(cached_cnt) / n;
    res.onboard_fraction = static_cast<double>(onboard_cnt) / n;
  }
  if (disc_cnt > 0)
    res.mean_discrepancy = static_cast<double>(disc_sum) / static_cast<double>(disc_cnt);
  if (!dbg_sviol.empty()) {
    std::vector<double> s = dbg_sviol;
    std::sort(s.begin(), s.end());
    auto pct = [&](double p) { return s[std::min(s.size() - 1, static_cast<size_t>(p * s.size()))]; };
    auto streak_ms = [&](double thr) {
      long best = 0, cur = 0;
      for (double v : dbg_sviol) { cur = v > thr ? cur + 1 : 0; best = std::max(best, cur); }
      return best;
    };
    std::fprintf(stderr, "SV p50=%.4f p90=%.4f p99=%.4f max=%.3f streak(ms)@.02=%ld @.05=%ld @.1=%ld @.2=%ld @.5=%ld\n",
                 pct(0.5), pct(0.9), pct(0.99), s.back(), streak_ms(0.02), streak_ms(0.05),
                 streak_ms(0.1), streak_ms(0.2), streak_ms(0.5));
  }
  res.walked_distance = com_position(m, plant.q).x();
  res.remote_solves = remote.solves();
  res.onboard_solves = onboard.solves();
  stats.in_flight = static_cast<std::int64_t>(inbox.size());
  res.channel = stats;
  res.delay_p50 = percentile(delivered_rtts, 0.5);
  res.delay_p95 = percentile(delivered_rtts, 0.95);
  res.delay_max = delivered_rtts.empty()
                      ? 0.0
                      : *std::max_element(delivered_rtts.begin(), delivered_rtts.end());
  return res;
}

void write_cycle_log(const std::vector<CycleRecord>& records, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open " + path + " for writing");
  std::fprintf(f, "t,delay,source,com_error,violation,as_discrepancy\n");
  for (const CycleRecord& r : records) {
    if (std::isfinite(r.delay))
      std::fprintf(f, "%.9g,%.9g,%s,%.9g,%.9g,%d\n", r.t, r.delay, to_string(r.source),
                   r.com_error, r.violation, r.as_discrepancy);
    else
      std::fprintf(f, "%.9g,inf,%s,%.9g,%.9g,%d\n", r.t, to_string(r.source), r.com_error,
                   r.violation, r.as_discrepancy);
  }
  std::fclose(f);
}

}  // namespace edgewbc

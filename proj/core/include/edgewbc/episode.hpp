#pragma once

#include <string>
#include <vector>

#include "edgewbc/controller.hpp"

namespace edgewbc {

enum class EpisodeKind { Balance, Walk };

// Horizontal shove applied at the floating base. The magnitude defaults to a
// fraction of the model weight so the disturbance-to-weight ratio carries
// across robots; an absolute force (N) overrides it when nonzero.
struct PushEvent {
  bool enabled = false;
  double weight_fraction = 0.25;
  double force = 0.0;  // absolute override in N when nonzero
  double start = 1.0;
  double duration = 0.2;

  double magnitude(const RobotModel& m) const {
    return force != 0.0 ? force : weight_fraction * m.total_mass() * m.gravity.norm();
  }
  bool active(double t) const {
    return enabled && t >= start && t < start + duration;
  }
};

struct EpisodeConfig {
  EpisodeKind kind = EpisodeKind::Balance;
  ControlScheme scheme = ControlScheme::LocallyAssisted;
  double duration = 10.0;
  double noise_sigma = 0.0;  // measurement noise on joint positions/velocities
  std::uint64_t seed = 1;
  ChannelConfig channel = ChannelConfig::constant(0.0);
  SchedulerConfig scheduler;
  WalkParams walk;           // gait shape; com_height applies to balancing too
  double stance_width = 0.2; // balancing foot stagger
  PushEvent push;
  TsidWeights weights;
  SolverOptions solver;
  std::string left_foot = "l_foot_point";
  std::string right_foot = "r_foot_point";
  // Contact frames constrained while the foot is on the ground; empty means
  // the foot point itself. Walking defaults to heel+toe so the stance foot
  // has center-of-pressure authority over the sole.
  std::vector<std::string> left_stance;
  std::vector<std::string> right_stance;
  bool log_cycles = false;
  bool log_discrepancy = false;  // adds an independent reference solve per cycle
};

// Experiment-shaped defaults: balancing gets the weight-scaled push and
// sigma 1e-2; walking gets sigma 1e-3 and no push.
EpisodeConfig balance_episode_defaults();
EpisodeConfig walk_episode_defaults();

enum class CommandSource { Remote, Cached, Onboard, Fault };
const char* to_string(CommandSource s);

struct CycleRecord {
  double t = 0.0;
  double delay = 0.0;  // age of the solution driving this cycle
  CommandSource source = CommandSource::Fault;
  double com_error = 0.0;
  double violation = 0.0;
  int as_discrepancy = -1;  // -1 when not evaluated
};

struct TimingStats {
  double total = 0.0;
  double worst = 0.0;
  long count = 0;

  void add(double seconds) {
    total += seconds;
    worst = std::max(worst, seconds);
    ++count;
  }
  double avg() const { return count ? total / count : 0.0; }
};

struct EpisodeResult {
  bool completed = false;
  bool fell = false;
  double fall_time = -1.0;
  int cycles = 0;

  double com_error_avg = 0.0;
  double violation_avg = 0.0;
  double violation_max = 0.0;
  double walked_distance = 0.0;

  double fresh_fraction = 0.0;
  double cached_fraction = 0.0;
  double onboard_fraction = 0.0;
  int fault_cycles = 0;

  int remote_solves = 0;
  int onboard_solves = 0;
  TimingStats solve_time;  // edge-side full solves (wall clock)
  TimingStats apply_time;  // robot-side executor steps (wall clock)

  double mean_discrepancy = 0.0;
  int max_discrepancy = 0;

  ChannelStats channel;
  double delay_p50 = 0.0, delay_p95 = 0.0, delay_max = 0.0;

  std::vector<CycleRecord> records;  // filled when log_cycles
};

// Statically consistent starting pose: both feet at the requested anchors
// (flat on the ground), total CoM at (com_x, com_height), zero velocity.
RobotState solve_initial_pose(const RobotModel& m,
                              const std::vector<std::pair<int, double>>& feet, double com_x,
                              double com_height);

EpisodeResult run_episode(const RobotModel& m, const EpisodeConfig& cfg);

void write_cycle_log(const std::vector<CycleRecord>& records, const std::string& path);

}  // namespace edgewbc

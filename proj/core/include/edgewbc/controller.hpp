#pragma once

#include <map>
#include <memory>
#include <optional>

#include "edgewbc/channel.hpp"
#include "edgewbc/solver.hpp"
#include "edgewbc/walk_plan.hpp"

namespace edgewbc {

// Task weights and gains for the whole-body stack: CoM tracking, joint
// posture regularization, swing-foot tracking during single support.
struct TsidWeights {
  double com_weight = 1.0;
  double com_kp = 30.0;
  double posture_weight = 1.0e-2;
  double posture_kp = 10.0;
  double swing_weight = 1.0;
  double swing_kp = 50.0;
  TsidOptions qp;  // force regularization
};

// Builds the per-cycle task stack from the shared plan. Both ends of the
// link hold an identical copy, so a timestamp alone determines the tasks and
// the contact mode; no task data travels over the channel.
class TaskSchedule {
 public:
  TaskSchedule(RobotModel model, std::shared_ptr<const WalkPlan> plan, Vec posture_target,
               TsidWeights weights = {});

  std::vector<TaskSpec> tasks_at(double t) const;
  ContactSet contacts_at(double t) const { return plan_->contact_mode(t); }
  const WalkPlan& plan() const { return *plan_; }
  const RobotModel& model() const { return model_; }
  const TsidWeights& weights() const { return weights_; }

 private:
  RobotModel model_;
  std::shared_ptr<const WalkPlan> plan_;
  Vec posture_target_;
  TsidWeights weights_;
};

// One solver reply. Carries the solution itself (enough for blind replay),
// the torques evaluated at the queried state, and the factorized working
// set, which a receiver can re-apply to fresh right-hand sides.
struct SolutionPacket {
  double state_timestamp = 0.0;  // time of the state snapshot it answers
  double delivery_time = 0.0;    // stamped by the channel on arrival
  std::uint32_t mode_id = 0;
  bool next_mode = false;  // precomputed for an upcoming contact switch
  ContactSet contacts;     // the mode the solution's force block belongs to
  Vec y;
  Vec tau;
  Decomposition decomp;

  std::size_t byte_size() const;
};

// Edge-side QP service. Stateless on the wire; internally warm-starts each
// contact mode from its previous working set.
class RemoteServer {
 public:
  RemoteServer(std::shared_ptr<const TaskSchedule> schedule, SolverOptions opts = {});

  // Solves for a measured state with tasks and contacts taken from the plan
  // at plan_time (the snapshot time for normal queries, the first instant
  // after the switch for next-mode precompute queries).
  SolutionPacket solve(const RobotState& measured, double plan_time, bool next_mode = false);

  int solves() const { return solves_; }

 private:
  std::shared_ptr<const TaskSchedule> schedule_;
  SolverOptions opts_;
  std::map<std::uint32_t, ActiveSet> warm_;
  int solves_ = 0;
};

// Emulated on-robot full solve: the same QP machinery, but results only
// mature after a fixed latency representing the slower local processor.
class OnboardSolver {
 public:
  OnboardSolver(std::shared_ptr<const TaskSchedule> schedule, double latency,
                SolverOptions opts = {});

  bool busy() const { return pending_.has_value(); }
  void start(double t, const RobotState& measured, double plan_time, bool next_mode = false);
  std::optional<SolutionPacket> poll(double t);  // non-empty once mature
  int solves() const { return core_.solves(); }

 private:
  RemoteServer core_;
  double latency_;
  std::optional<std::pair<double, SolutionPacket>> pending_;
};

enum class ControlScheme { LocallyAssisted, PurelyRemote };

// What the purely-remote executor replays from the freshest packet: the
// solution vector (torque re-extracted against the current measurement) or
// the torque vector exactly as the server computed it.
enum class PrReplay { StaleY, StaleTau };

struct CycleCommand {
  Vec tau;   // actuated joint torques sent to the plant
  Vec qdd;   // commanded generalized accelerations (constraint-residual metric)
  ActiveSet active;
  double solution_age = 0.0;  // now - state_timestamp of the entry used
  bool fresh = false;         // remote reply within the freshness bound
  bool fault = false;         // nothing usable; previous command held
  bool onboard = false;       // served from a locally computed entry
};

// Robot-side executor for both schemes.
//
// Purely remote: replays the freshest received packet (see PrReplay for the
// two replay levels).
//
// Locally assisted: keeps the freshest packet per contact mode and, every
// cycle, rebuilds the right-hand side from the current measurement and
// re-applies the cached factorization, so the feedback terms stay current
// even when the packet is stale.
class LocalExecutor {
 public:
  LocalExecutor(std::shared_ptr<const TaskSchedule> schedule, ControlScheme scheme,
                double freshness_bound, PrReplay pr_replay = PrReplay::StaleY);

  // Returns false when the packet was superseded by an already-cached one.
  bool ingest(SolutionPacket pkt, bool from_onboard);
  CycleCommand step(double t, const RobotState& measured);

  ControlScheme scheme() const { return scheme_; }
  bool has_solution() const;

 private:
  struct Entry {
    SolutionPacket pkt;
    bool from_onboard = false;
  };

  std::shared_ptr<const TaskSchedule> schedule_;
  ControlScheme scheme_;
  double freshness_bound_;
  PrReplay pr_replay_;
  std::map<std::uint32_t, Entry> by_mode_;  // locally assisted cache
  std::optional<Entry> newest_;             // purely remote replay slot
  CycleCommand last_;
  bool have_last_ = false;
};

// Timing knobs for the control loop and the contact-switch assistance.
struct SchedulerConfig {
  double ctrl_period = 1.0e-3;
  double freshness_bound = 0.8e-3;  // reply age below which it counts as fresh
  double switch_margin = 0.05;      // assisted half-window around a switch
  double onboard_period = 5.0e-3;   // local solve cadence inside the window
  double precompute_lead = 1.0e-2;  // next-mode query lead time
  double onboard_slowdown = 3.1;    // local vs edge solve-time ratio
  double remote_solve_time = 5.0e-4;

  double onboard_latency() const { return onboard_slowdown * remote_solve_time; }
};

// True when t lies within the assisted window around any contact switch.
bool in_switch_window(const WalkPlan& plan, double t, double margin);

}  // namespace edgewbc

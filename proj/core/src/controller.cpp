#include "edgewbc/controller.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace edgewbc {

TaskSchedule::TaskSchedule(RobotModel model, std::shared_ptr<const WalkPlan> plan,
                           Vec posture_target, TsidWeights weights)
    : model_(std::move(model)),
      plan_(std::move(plan)),
      posture_target_(std::move(posture_target)),
      weights_(weights) {
  if (!plan_) throw InvalidInput("task schedule needs a plan");
  if (posture_target_.size() != model_.num_joints())
    throw DimensionMismatch("posture target must have one entry per joint");
}

std::vector<TaskSpec> TaskSchedule::tasks_at(double t) const {
  std::vector<TaskSpec> tasks;
  const auto plan = plan_;

  TaskSpec com;
  com.kind = TaskKind::CoM;
  com.name = "com";
  com.weight = weights_.com_weight;
  com.gains = TaskGains::critically_damped(weights_.com_kp);
  com.reference = [plan](double tv) { return plan->com_ref(tv); };
  tasks.push_back(std::move(com));

  TaskSpec posture = make_posture_task(posture_target_, weights_.posture_weight,
                                       TaskGains::critically_damped(weights_.posture_kp));
  tasks.push_back(std::move(posture));

  if (const SwingProfile* sw = plan_->swing_at(t)) {
    TaskSpec swing;
    swing.kind = TaskKind::FrameTracking;
    swing.name = "swing";
    swing.frame = sw->frame;
    swing.weight = weights_.swing_weight;
    swing.gains = TaskGains::critically_damped(weights_.swing_kp);
    const SwingProfile profile = *sw;
    swing.reference = [profile](double tv) { return profile.eval(tv); };
    tasks.push_back(std::move(swing));
  }
  return tasks;
}

std::size_t SolutionPacket::byte_size() const {
  return sizeof(state_timestamp) + sizeof(mode_id) + sizeof(std::uint8_t) +
         sizeof(double) * static_cast<std::size_t>(y.size() + tau.size()) +
         decomp.byte_size();
}

RemoteServer::RemoteServer(std::shared_ptr<const TaskSchedule> schedule, SolverOptions opts)
    : schedule_(std::move(schedule)), opts_(opts) {
  if (!schedule_) throw InvalidInput("server needs a task schedule");
}

SolutionPacket RemoteServer::solve(const RobotState& measured, double plan_time,
                                   bool next_mode) {
  const ContactSet contacts = schedule_->contacts_at(plan_time);
  const auto tasks = schedule_->tasks_at(plan_time);
  const QpProblem qp = build_problem(schedule_->model(), measured, tasks, contacts,
                                     plan_time, schedule_->weights().qp);

  const auto warm = warm_.find(qp.mode_id);
  Solution sol = edgewbc::solve(qp, warm == warm_.end() ? nullptr : &warm->second, opts_);
  warm_[qp.mode_id] = sol.active;
  ++solves_;

  SolutionPacket pkt;
  pkt.state_timestamp = measured.t;
  pkt.mode_id = qp.mode_id;
  pkt.next_mode = next_mode;
  pkt.y = sol.y;
  pkt.tau = extract_torque(schedule_->model(), measured, contacts, sol.y).tau;
  pkt.decomp = std::move(sol.decomp);
  pkt.decomp.build_time = measured.t;
  return pkt;
}

OnboardSolver::OnboardSolver(std::shared_ptr<const TaskSchedule> schedule, double latency,
                             SolverOptions opts)
    : core_(std::move(schedule), opts), latency_(latency) {}

void OnboardSolver::start(double t, const RobotState& measured, double plan_time,
                          bool next_mode) {
  if (pending_) return;
  pending_ = {t + latency_, core_.solve(measured, plan_time, next_mode)};
}

std::optional<SolutionPacket> OnboardSolver::poll(double t) {
  if (!pending_ || t + 1.0e-12 < pending_->first) return std::nullopt;
  SolutionPacket pkt = std::move(pending_->second);
  pkt.delivery_time = pending_->first;
  pending_.reset();
  return pkt;
}

LocalExecutor::LocalExecutor(std::shared_ptr<const TaskSchedule> schedule,
                             ControlScheme scheme, double freshness_bound)
    : schedule_(std::move(schedule)), scheme_(scheme), freshness_bound_(freshness_bound) {
  if (!schedule_) throw InvalidInput("executor needs a task schedule");
}

bool LocalExecutor::has_solution() const {
  return scheme_ == ControlScheme::PurelyRemote ? newest_.has_value() : !by_mode_.empty();
}

bool LocalExecutor::ingest(SolutionPacket pkt, bool from_onboard) {
  if (scheme_ == ControlScheme::PurelyRemote) {
    if (newest_ && newest_->pkt.state_timestamp >= pkt.state_timestamp) return false;
    newest_ = Entry{std::move(pkt), from_onboard};
    return true;
  }
  auto it = by_mode_.find(pkt.mode_id);
  if (it != by_mode_.end() && it->second.pkt.state_timestamp >= pkt.state_timestamp)
    return false;
  by_mode_[pkt.mode_id] = Entry{std::move(pkt), from_onboard};
  return true;
}

CycleCommand LocalExecutor::step(double t, const RobotState& measured) {
  const RobotModel& m = schedule_->model();

  auto hold = [&]() -> CycleCommand {
    CycleCommand cmd;
    if (have_last_) {
      cmd = last_;
    } else {
      cmd.tau = Vec::Zero(m.num_joints());
      cmd.qdd = Vec::Zero(m.nv());
    }
    cmd.fault = true;
    cmd.fresh = false;
    cmd.solution_age = std::numeric_limits<double>::infinity();
    return cmd;
  };

  CycleCommand cmd;
  if (scheme_ == ControlScheme::PurelyRemote) {
    if (!newest_) return hold();
    const Entry& e = *newest_;
    cmd.tau = e.pkt.tau;
    cmd.qdd = e.pkt.y.head(m.nv());
    cmd.active = e.pkt.decomp.active;
    cmd.solution_age = t - e.pkt.state_timestamp;
    cmd.fresh = cmd.solution_age <= freshness_bound_ + 1.0e-12 && !e.from_onboard;
    cmd.onboard = e.from_onboard;
  } else {
    const ContactSet contacts = schedule_->contacts_at(t);
    const auto it = by_mode_.find(contacts.mode_id());
    if (it == by_mode_.end()) return hold();
    const Entry& e = it->second;

    const Vec b = build_b(m, measured, schedule_->tasks_at(t), contacts,
                          e.pkt.decomp.active, t, schedule_->weights().qp);
    const Vec y = e.pkt.decomp.apply(b);
    cmd.tau = extract_torque(m, measured, contacts, y).tau;
    cmd.qdd = y.head(m.nv());
    cmd.active = e.pkt.decomp.active;
    cmd.solution_age = t - e.pkt.state_timestamp;
    cmd.fresh = cmd.solution_age <= freshness_bound_ + 1.0e-12 && !e.from_onboard;
    cmd.onboard = e.from_onboard;
  }
  last_ = cmd;
  have_last_ = true;
  return cmd;
}

bool in_switch_window(const WalkPlan& plan, double t, double margin) {
  for (std::size_t i = 0; i + 1 < plan.phases.size(); ++i) {
    const PlanPhase& ph = plan.phases[i];
    if (ph.contacts == plan.phases[i + 1].contacts) continue;
    if (std::abs(ph.t1 - t) <= margin) return true;
  }
  return false;
}

}  // namespace edgewbc

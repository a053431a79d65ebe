#include "edgewbc/task.hpp"

namespace edgewbc {

namespace {
std::function<TaskTarget(double)> constant_reference(const Vec& pos) {
  const Vec zero = Vec::Zero(pos.size());
  return [pos, zero](double) { return TaskTarget{pos, zero, zero}; };
}
}  // namespace

TaskSpec make_com_task(const Vec2& target, double weight, TaskGains gains) {
  TaskSpec t;
  t.kind = TaskKind::CoM;
  t.name = "com";
  t.weight = weight;
  t.gains = gains;
  t.reference = constant_reference(target);
  return t;
}

TaskSpec make_posture_task(const Vec& joint_target, double weight, TaskGains gains) {
  TaskSpec t;
  t.kind = TaskKind::Posture;
  t.name = "posture";
  t.weight = weight;
  t.gains = gains;
  t.reference = constant_reference(joint_target);
  return t;
}

TaskSpec make_frame_task(const RobotModel& m, const std::string& frame_name,
                         std::function<TaskTarget(double)> ref, double weight, TaskGains gains) {
  TaskSpec t;
  t.kind = TaskKind::FrameTracking;
  t.name = frame_name;
  t.frame = m.contact_frame_index(frame_name);
  t.weight = weight;
  t.gains = gains;
  t.reference = std::move(ref);
  return t;
}

}  // namespace edgewbc

#pragma once

#include <functional>
#include <string>

#include "edgewbc/model.hpp"

namespace edgewbc {

enum class TaskKind { CoM, FrameTracking, Posture };

// Desired task-space position/velocity/acceleration at a point in time.
struct TaskTarget {
  Vec pos;
  Vec vel;
  Vec acc;
};

struct TaskGains {
  double kp = 0.0;
  double kd = 0.0;

  static TaskGains critically_damped(double kp) { return {kp, 2.0 * std::sqrt(kp)}; }
};

// One tracking objective. `reference(t)` must be evaluable by both ends of
// the link (the plan is shared ahead of time), so references are pure
// functions of time. The commanded task acceleration is
//   acc_ref + kd (vel_ref - vel) + kp (pos_ref - pos).
struct TaskSpec {
  TaskKind kind = TaskKind::Posture;
  std::string name;
  int frame = -1;  // contact-frame index, FrameTracking only
  double weight = 1.0;
  TaskGains gains;
  std::function<TaskTarget(double)> reference;

  int rows(const RobotModel& m) const {
    return kind == TaskKind::Posture ? m.num_joints() : 2;
  }
};

TaskSpec make_com_task(const Vec2& target, double weight = 1.0,
                       TaskGains gains = TaskGains::critically_damped(30.0));
TaskSpec make_posture_task(const Vec& joint_target, double weight = 1e-2,
                           TaskGains gains = TaskGains::critically_damped(10.0));
TaskSpec make_frame_task(const RobotModel& m, const std::string& frame_name,
                         std::function<TaskTarget(double)> ref, double weight = 1.0,
                         TaskGains gains = TaskGains::critically_damped(50.0));

}  // namespace edgewbc

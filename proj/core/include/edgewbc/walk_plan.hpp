#pragma once

#include <optional>

#include "edgewbc/model.hpp"
#include "edgewbc/task.hpp"

namespace edgewbc {

struct WalkParams {
  double step_length = 0.15;
  double step_duration = 0.8;     // one full step (double + single support)
  double double_support = 0.005;
  double com_height = 0.8;
  double swing_height = 0.06;
  double stand_time = 0.3;        // initial quiet stance
  double stance_width = 0.2;      // fore-aft foot stagger for in-place gaits
  double max_step_span = 0.5;     // reachability guard on consecutive footholds
  int steps = 12;
  double ctrl_period = 1.0e-3;    // phase boundaries snap to this grid
  double gravity = 9.81;
};

// Swing-foot trajectory for one single-support phase: cubic (smoothstep)
// interpolation in x with zero lift-off/touchdown velocity, and a two-piece
// cubic height bump returning to the ground with zero velocity.
struct SwingProfile {
  int frame = -1;
  double t0 = 0.0, t1 = 0.0;
  double x_from = 0.0, x_to = 0.0;
  double height = 0.0;

  TaskTarget eval(double t) const;
};

// One interval of constant contact mode and constant ZMP. The CoM reference
// inside the phase is the exact pendulum-model solution from the recorded
// entry state, so the whole plan satisfies xdd = w^2 (x - zmp) everywhere.
struct PlanPhase {
  double t0 = 0.0, t1 = 0.0;
  ContactSet contacts;
  double zmp = 0.0;
  double x0 = 0.0, v0 = 0.0;  // CoM entry state at t0
  std::optional<SwingProfile> swing;
};

struct WalkPlan {
  std::vector<PlanPhase> phases;
  double com_height = 0.8;
  double omega = 0.0;  // sqrt(g / com_height)
  double horizon = 0.0;
  std::vector<std::pair<int, double>> initial_feet;  // (contact frame, x)

  const PlanPhase& phase_at(double t) const;
  ContactSet contact_mode(double t) const;
  TaskTarget com_ref(double t) const;  // 2D (x, z)
  const SwingProfile* swing_at(double t) const;
  // Next contact-mode boundary strictly after t; +inf when none remain.
  double next_switch_after(double t) const;
  ContactSet mode_after(double t_switch) const;
  // Planned world position of a foot's contact point at time t.
  double planned_foot_x(int frame, double t) const;
};

// A foot as the gait generator sees it: `frame` is the reference contact
// point that swing trajectories, footstep positions and the initial pose
// refer to; `stance` lists the contact frames constrained while the foot is
// on the ground. A point foot uses {frame}; a flat foot uses its heel and
// toe frames, which gives the controller center-of-pressure authority over
// the span between them.
struct FootContacts {
  int frame = -1;
  std::vector<int> stance;
};

// Walking gait from quiet standing: stand phase, an analytic launch
// double-support that injects the periodic-orbit entry velocity, then
// alternating steps. Footsteps carry a capture-point correction that
// deadbeats the unstable pendulum mode each step, so grid-snapping of the
// launch duration cannot compound. Zero step length degenerates to an
// in-place sway gait with the same machinery.
WalkPlan generate_walk_plan(const WalkParams& p, const FootContacts& left,
                            const FootContacts& right);

// Point-foot convenience: each foot touches down on its reference frame only.
WalkPlan generate_walk_plan(const WalkParams& p, int left_frame, int right_frame);

// Trivial plan for balancing: one double-support phase, CoM held constant.
WalkPlan make_stance_plan(const ContactSet& contacts, double com_x, double com_height,
                          double horizon);

}  // namespace edgewbc

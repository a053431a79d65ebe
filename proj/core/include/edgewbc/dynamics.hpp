#pragma once

#include <optional>

#include "edgewbc/model.hpp"

namespace edgewbc {

// Per-link world-frame kinematics at a given (q, v).
struct LinkKin {
  double angle = 0.0;   // world orientation
  double omega = 0.0;   // angular velocity
  Vec2 origin = Vec2::Zero();
  Vec2 origin_vel = Vec2::Zero();
  Vec2 com = Vec2::Zero();
  Vec2 com_vel = Vec2::Zero();
};

struct Kinematics {
  std::vector<LinkKin> link;
};

Kinematics forward_kinematics(const RobotModel& m, const Vec& q, const Vec& v);

// Joint-space inertia matrix, assembled from per-link CoM/rotation Jacobians
// (sum of m J^T J + I jw^T jw). Deliberately a different algorithm from the
// Newton-Euler sweep below so the two can cross-check each other.
Mat mass_matrix(const RobotModel& m, const Vec& q);

// Recursive Newton-Euler inverse dynamics: generalized forces required for
// acceleration `a` at state (q, v). Gravity can be overridden (e.g. zeroed)
// for structural tests.
Vec inverse_dynamics(const RobotModel& m, const Vec& q, const Vec& v, const Vec& a,
                     const std::optional<Vec2>& gravity_override = std::nullopt);

// Coriolis/centrifugal + gravity vector h(q, v) = inverse_dynamics(q, v, 0).
Vec bias_forces(const RobotModel& m, const Vec& q, const Vec& v);

double kinetic_energy(const RobotModel& m, const Vec& q, const Vec& v);
double potential_energy(const RobotModel& m, const Vec& q);

// A point rigidly attached to a link; contact frames resolve to one of these.
struct FramePoint {
  int link = 0;
  Vec2 offset = Vec2::Zero();
};
FramePoint resolve_frame(const RobotModel& m, const std::string& name);
FramePoint resolve_frame(const RobotModel& m, int contact_frame_index);

Vec2 frame_position(const RobotModel& m, const Vec& q, const FramePoint& fp);
Vec2 frame_velocity(const RobotModel& m, const Vec& q, const Vec& v, const FramePoint& fp);

// 2 x nv positional Jacobian of the frame point.
Mat frame_jacobian(const RobotModel& m, const Vec& q, const FramePoint& fp);

// Drift terms Jdot(q, v) * v, i.e. the frame acceleration at zero
// generalized acceleration (gravity excluded).
Vec2 frame_drift(const RobotModel& m, const Vec& q, const Vec& v, const FramePoint& fp);

Vec2 com_position(const RobotModel& m, const Vec& q);
Vec2 com_velocity(const RobotModel& m, const Vec& q, const Vec& v);
Mat com_jacobian(const RobotModel& m, const Vec& q);
Vec2 com_drift(const RobotModel& m, const Vec& q, const Vec& v);

// Stacked 2k x nv Jacobian / drift of the active contact points.
Mat contact_jacobian(const RobotModel& m, const Vec& q, const ContactSet& contacts);
Vec contact_drift(const RobotModel& m, const Vec& q, const Vec& v, const ContactSet& contacts);

struct ForwardDynamicsResult {
  Vec qdd;     // nv
  Vec forces;  // 2 per contact, stacked in ContactSet order (tangential, normal)
};

// Rigid-contact forward dynamics: solves
//   M qdd + h = S^T tau + Jc^T f,   Jc qdd + Jcdot v = 0
// for (qdd, f). `tau` has one entry per actuated joint; `f_ext` is an
// optional extra generalized force (e.g. a push). Redundant contact rows are
// handled by a rank-revealing solve of the contact Schur complement.
ForwardDynamicsResult constrained_forward_dynamics(const RobotModel& m, const RobotState& s,
                                                   const Vec& tau, const ContactSet& contacts,
                                                   const Vec* f_ext = nullptr);

// Semi-implicit Euler: v += qdd*dt, then q += v*dt.
RobotState integrate(const RobotState& s, const Vec& qdd, double dt);

// Post-integration constraint stabilization used by the episode stepper:
// projects velocities onto the contact-consistent subspace (mass-weighted)
// and nudges configurations so the contact points stay at their anchors.
// Keeps the plant from drifting off its footholds over long episodes.
void stabilize_contacts(const RobotModel& m, RobotState& s, const ContactSet& contacts,
                        const std::vector<Vec2>& anchors);

}  // namespace edgewbc

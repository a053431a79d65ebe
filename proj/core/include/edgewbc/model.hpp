#pragma once

#include <optional>
#include <string>
#include <vector>

#include "edgewbc/types.hpp"

namespace edgewbc {

// Planar rigid-body tree. Link 0 is the root; when the base is floating its
// pose (x, z, pitch) forms the first three generalized coordinates. Link i
// (i >= 1) is driven by joint i-1, a revolute joint mounted on the parent
// link at `mount` (parent-frame coordinates). Link frames sit at the inbound
// joint; geometry lives in the local com/mount offsets, so the all-zeros
// configuration is the reference pose with every frame world-aligned.
struct Link {
  std::string name;
  double mass = 0.0;
  double inertia = 0.0;  // rotational inertia about the link CoM
  Vec2 com_offset = Vec2::Zero();
  double length = 0.0;  // geometric extent, metadata for IK/reach checks
};

struct Joint {
  std::string name;
  int parent = -1;       // parent link index; drives link (joint index + 1)
  Vec2 mount = Vec2::Zero();
  double pos_min = -3.14, pos_max = 3.14;
  double torque_limit = 100.0;
};

struct ContactFrame {
  std::string name;
  int link = -1;
  Vec2 offset = Vec2::Zero();  // point expressed in the link frame
};

struct RobotModel {
  std::vector<Link> links;
  std::vector<Joint> joints;
  std::vector<ContactFrame> contact_frames;
  Vec2 gravity = Vec2(0.0, -9.81);
  double friction_coeff = 0.6;
  bool floating_base = true;

  int num_links() const { return static_cast<int>(links.size()); }
  int num_joints() const { return static_cast<int>(joints.size()); }
  int base_dofs() const { return floating_base ? 3 : 0; }
  int nv() const { return base_dofs() + num_joints(); }
  double total_mass() const;

  int contact_frame_index(const std::string& name) const;  // throws UnknownFrame
  void validate() const;                                   // throws InvalidInput
};

// Generalized coordinates: q = (x, z, pitch, joint angles...) for a floating
// base, joint angles only otherwise. v = dq/dt componentwise (planar base
// composes additively, so no chart bookkeeping is needed).
struct RobotState {
  Vec q;
  Vec v;
  double t = 0.0;

  static RobotState zero(const RobotModel& m) {
    RobotState s;
    s.q = Vec::Zero(m.nv());
    s.v = Vec::Zero(m.nv());
    return s;
  }
};

// Which contact frames are pinned, in stacking order. The mode id is a
// bitmask over the model's contact frame indices, shared by both ends of the
// link so that cached decompositions can be matched to the live mode.
struct ContactSet {
  std::vector<int> frames;

  int count() const { return static_cast<int>(frames.size()); }
  int rows() const { return 2 * count(); }
  std::uint32_t mode_id() const {
    std::uint32_t m = 0;
    for (int f : frames) m |= (1u << f);
    return m;
  }
  bool operator==(const ContactSet&) const = default;
};

// JSON model file, schema "rbd-model/1".
RobotModel model_from_json_text(const std::string& text);
std::string model_to_json_text(const RobotModel& m);
RobotModel load_model(const std::string& path);
void save_model(const RobotModel& m, const std::string& path);

// Default 7-link planar biped: torso + 2x(thigh, shank, foot), point-foot
// contact frames plus heel/toe alternatives.
RobotModel default_biped_model();

}  // namespace edgewbc

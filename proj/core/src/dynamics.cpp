#include "edgewbc/dynamics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

namespace edgewbc {

namespace {

// Dof index of joint j (drives link j+1).
inline int joint_dof(const RobotModel& m, int j) { return m.base_dofs() + j; }

// Walks the parent chain of `link`, returning the driving joint indices.
std::vector<int> ancestor_joints(const RobotModel& m, int link) {
  std::vector<int> chain;
  int l = link;
  while (l > 0) {
    const int j = l - 1;
    chain.push_back(j);
    l = m.joints[j].parent;
  }
  return chain;
}

// Full position/velocity/acceleration sweep. Gravity is folded in through a
// fictitious base linear acceleration (-g), the usual Newton-Euler trick.
struct AccelKin {
  std::vector<LinkKin> link;
  std::vector<double> alpha;      // angular acceleration
  std::vector<Vec2> origin_acc;   // linear acceleration of the frame origin
  std::vector<Vec2> com_acc;
};

AccelKin accel_sweep(const RobotModel& m, const Vec& q, const Vec& v, const Vec& a,
                     const Vec2& gravity) {
  const int bd = m.base_dofs();
  AccelKin k;
  k.link.resize(m.num_links());
  k.alpha.resize(m.num_links());
  k.origin_acc.resize(m.num_links());
  k.com_acc.resize(m.num_links());

  {
    LinkKin& b = k.link[0];
    if (m.floating_base) {
      b.angle = q[2];
      b.omega = v[2];
      b.origin = Vec2(q[0], q[1]);
      b.origin_vel = Vec2(v[0], v[1]);
      k.alpha[0] = a[2];
      k.origin_acc[0] = Vec2(a[0], a[1]) - gravity;
    } else {
      k.alpha[0] = 0.0;
      k.origin_acc[0] = -gravity;
    }
    const Vec2 rc = rot2(b.angle) * m.links[0].com_offset;
    b.com = b.origin + rc;
    b.com_vel = b.origin_vel + b.omega * perp(rc);
    k.com_acc[0] = k.origin_acc[0] + k.alpha[0] * perp(rc) - b.omega * b.omega * rc;
  }

  for (int i = 1; i < m.num_links(); ++i) {
    const int j = i - 1;
    const Joint& jt = m.joints[j];
    const LinkKin& p = k.link[jt.parent];
    LinkKin& c = k.link[i];

    const Vec2 rm = rot2(p.angle) * jt.mount;
    c.angle = p.angle + q[joint_dof(m, j)];
    c.omega = p.omega + v[joint_dof(m, j)];
    c.origin = p.origin + rm;
    c.origin_vel = p.origin_vel + p.omega * perp(rm);
    k.alpha[i] = k.alpha[jt.parent] + a[joint_dof(m, j)];
    k.origin_acc[i] =
        k.origin_acc[jt.parent] + k.alpha[jt.parent] * perp(rm) - p.omega * p.omega * rm;

    const Vec2 rc = rot2(c.angle) * m.links[i].com_offset;
    c.com = c.origin + rc;
    c.com_vel = c.origin_vel + c.omega * perp(rc);
    k.com_acc[i] = k.origin_acc[i] + k.alpha[i] * perp(rc) - c.omega * c.omega * rc;
  }
  return k;
}

}  // namespace

Kinematics forward_kinematics(const RobotModel& m, const Vec& q, const Vec& v) {
  if (q.size() != m.nv() || v.size() != m.nv())
    throw DimensionMismatch("forward_kinematics: state size does not match model nv");
  AccelKin k = accel_sweep(m, q, v, Vec::Zero(m.nv()), Vec2::Zero());
  Kinematics out;
  out.link = std::move(k.link);
  return out;
}

Mat mass_matrix(const RobotModel& m, const Vec& q) {
  if (q.size() != m.nv()) throw DimensionMismatch("mass_matrix: q size does not match model nv");
  const int nv = m.nv();
  const int bd = m.base_dofs();
  const Kinematics kin = forward_kinematics(m, q, Vec::Zero(nv));

  Mat M = Mat::Zero(nv, nv);
  Mat Jc(2, nv);
  Vec jw(nv);
  for (int i = 0; i < m.num_links(); ++i) {
    const Link& l = m.links[i];
    if (l.mass == 0.0 && l.inertia == 0.0) continue;
    Jc.setZero();
    jw.setZero();
    const Vec2 c = kin.link[i].com;
    if (m.floating_base) {
      Jc(0, 0) = 1.0;
      Jc(1, 1) = 1.0;
      Jc.col(2) = perp(c - kin.link[0].origin);
      jw[2] = 1.0;
    }
    for (int j : ancestor_joints(m, i)) {
      const Vec2 pivot = kin.link[j + 1].origin;
      Jc.col(joint_dof(m, j)) = perp(c - pivot);
      jw[joint_dof(m, j)] = 1.0;
    }
    M.noalias() += l.mass * Jc.transpose() * Jc;
    M.noalias() += l.inertia * jw * jw.transpose();
  }
  return M;
}

Vec inverse_dynamics(const RobotModel& m, const Vec& q, const Vec& v, const Vec& a,
                     const std::optional<Vec2>& gravity_override) {
  if (q.size() != m.nv() || v.size() != m.nv() || a.size() != m.nv())
    throw DimensionMismatch("inverse_dynamics: state size does not match model nv");
  const Vec2 g = gravity_override.value_or(m.gravity);
  const AccelKin k = accel_sweep(m, q, v, a, g);

  // Backward sweep: accumulate net force and moment-about-origin per link.
  std::vector<Vec2> force(m.num_links());
  std::vector<double> moment(m.num_links());
  for (int i = 0; i < m.num_links(); ++i) {
    const Link& l = m.links[i];
    force[i] = l.mass * k.com_acc[i];
    moment[i] = l.inertia * k.alpha[i] + cross2(k.link[i].com - k.link[i].origin, force[i]);
  }
  Vec out = Vec::Zero(m.nv());
  for (int i = m.num_links() - 1; i >= 1; --i) {
    const int j = i - 1;
    const int p = m.joints[j].parent;
    out[joint_dof(m, j)] = moment[i];
    force[p] += force[i];
    moment[p] += moment[i] + cross2(k.link[i].origin - k.link[p].origin, force[i]);
  }
  if (m.floating_base) {
    out[0] = force[0].x();
    out[1] = force[0].y();
    out[2] = moment[0];
  }
  return out;
}

Vec bias_forces(const RobotModel& m, const Vec& q, const Vec& v) {
  return inverse_dynamics(m, q, v, Vec::Zero(m.nv()));
}

double kinetic_energy(const RobotModel& m, const Vec& q, const Vec& v) {
  const Kinematics kin = forward_kinematics(m, q, v);
  double e = 0.0;
  for (int i = 0; i < m.num_links(); ++i) {
    const Link& l = m.links[i];
    e += 0.5 * l.mass * kin.link[i].com_vel.squaredNorm() +
         0.5 * l.inertia * kin.link[i].omega * kin.link[i].omega;
  }
  return e;
}

double potential_energy(const RobotModel& m, const Vec& q) {
  const Kinematics kin = forward_kinematics(m, q, Vec::Zero(m.nv()));
  double e = 0.0;
  for (int i = 0; i < m.num_links(); ++i)
    e -= m.links[i].mass * m.gravity.dot(kin.link[i].com);
  return e;
}

FramePoint resolve_frame(const RobotModel& m, const std::string& name) {
  return resolve_frame(m, m.contact_frame_index(name));
}

FramePoint resolve_frame(const RobotModel& m, int idx) {
  if (idx < 0 || idx >= static_cast<int>(m.contact_frames.size()))
    throw UnknownFrame("contact frame index out of range");
  return FramePoint{m.contact_frames[idx].link, m.contact_frames[idx].offset};
}

Vec2 frame_position(const RobotModel& m, const Vec& q, const FramePoint& fp) {
  const Kinematics kin = forward_kinematics(m, q, Vec::Zero(m.nv()));
  const LinkKin& l = kin.link[fp.link];
  return l.origin + rot2(l.angle) * fp.offset;
}

Vec2 frame_velocity(const RobotModel& m, const Vec& q, const Vec& v, const FramePoint& fp) {
  const Kinematics kin = forward_kinematics(m, q, v);
  const LinkKin& l = kin.link[fp.link];
  const Vec2 r = rot2(l.angle) * fp.offset;
  return l.origin_vel + l.omega * perp(r);
}

Mat frame_jacobian(const RobotModel& m, const Vec& q, const FramePoint& fp) {
  if (fp.link < 0 || fp.link >= m.num_links()) throw UnknownFrame("frame links invalid link");
  const Kinematics kin = forward_kinematics(m, q, Vec::Zero(m.nv()));
  const LinkKin& l = kin.link[fp.link];
  const Vec2 p = l.origin + rot2(l.angle) * fp.offset;

  Mat J = Mat::Zero(2, m.nv());
  if (m.floating_base) {
    J(0, 0) = 1.0;
    J(1, 1) = 1.0;
    J.col(2) = perp(p - kin.link[0].origin);
  }
  for (int j : ancestor_joints(m, fp.link))
    J.col(joint_dof(m, j)) = perp(p - kin.link[j + 1].origin);
  return J;
}

Vec2 frame_drift(const RobotModel& m, const Vec& q, const Vec& v, const FramePoint& fp) {
  // Point acceleration at zero generalized acceleration and zero gravity.
  const AccelKin k = accel_sweep(m, q, v, Vec::Zero(m.nv()), Vec2::Zero());
  const LinkKin& l = k.link[fp.link];
  const Vec2 r = rot2(l.angle) * fp.offset;
  return k.origin_acc[fp.link] + k.alpha[fp.link] * perp(r) - l.omega * l.omega * r;
}

Vec2 com_position(const RobotModel& m, const Vec& q) {
  const Kinematics kin = forward_kinematics(m, q, Vec::Zero(m.nv()));
  Vec2 c = Vec2::Zero();
  for (int i = 0; i < m.num_links(); ++i) c += m.links[i].mass * kin.link[i].com;
  return c / m.total_mass();
}

Vec2 com_velocity(const RobotModel& m, const Vec& q, const Vec& v) {
  const Kinematics kin = forward_kinematics(m, q, v);
  Vec2 c = Vec2::Zero();
  for (int i = 0; i < m.num_links(); ++i) c += m.links[i].mass * kin.link[i].com_vel;
  return c / m.total_mass();
}

Mat com_jacobian(const RobotModel& m, const Vec& q) {
  const Kinematics kin = forward_kinematics(m, q, Vec::Zero(m.nv()));
  Mat J = Mat::Zero(2, m.nv());
  Mat Jl(2, m.nv());
  for (int i = 0; i < m.num_links(); ++i) {
    if (m.links[i].mass == 0.0) continue;
    Jl.setZero();
    const Vec2 c = kin.link[i].com;
    if (m.floating_base) {
      Jl(0, 0) = 1.0;
      Jl(1, 1) = 1.0;
      Jl.col(2) = perp(c - kin.link[0].origin);
    }
    for (int j : ancestor_joints(m, i)) Jl.col(joint_dof(m, j)) = perp(c - kin.link[j + 1].origin);
    J += m.links[i].mass * Jl;
  }
  return J / m.total_mass();
}

Vec2 com_drift(const RobotModel& m, const Vec& q, const Vec& v) {
  const AccelKin k = accel_sweep(m, q, v, Vec::Zero(m.nv()), Vec2::Zero());
  Vec2 acc = Vec2::Zero();
  for (int i = 0; i < m.num_links(); ++i) acc += m.links[i].mass * k.com_acc[i];
  return acc / m.total_mass();
}

Mat contact_jacobian(const RobotModel& m, const Vec& q, const ContactSet& contacts) {
  Mat J(contacts.rows(), m.nv());
  for (int i = 0; i < contacts.count(); ++i)
    J.middleRows<2>(2 * i) = frame_jacobian(m, q, resolve_frame(m, contacts.frames[i]));
  return J;
}

Vec contact_drift(const RobotModel& m, const Vec& q, const Vec& v, const ContactSet& contacts) {
  Vec d(contacts.rows());
  for (int i = 0; i < contacts.count(); ++i)
    d.segment<2>(2 * i) = frame_drift(m, q, v, resolve_frame(m, contacts.frames[i]));
  return d;
}

ForwardDynamicsResult constrained_forward_dynamics(const RobotModel& m, const RobotState& s,
                                                   const Vec& tau, const ContactSet& contacts,
                                                   const Vec* f_ext) {
  if (tau.size() != m.num_joints())
    throw DimensionMismatch("constrained_forward_dynamics: tau size != number of joints");
  const int nv = m.nv();
  const int bd = m.base_dofs();

  Vec rhs = -bias_forces(m, s.q, s.v);
  rhs.tail(m.num_joints()) += tau;
  if (f_ext) {
    if (f_ext->size() != nv)
      throw DimensionMismatch("constrained_forward_dynamics: f_ext size != nv");
    rhs += *f_ext;
  }

  const Mat M = mass_matrix(m, s.q);
  Eigen::LLT<Mat> Mllt(M);
  if (Mllt.info() != Eigen::Success)
    throw InvalidInput("constrained_forward_dynamics: mass matrix not positive definite");

  ForwardDynamicsResult out;
  if (contacts.count() == 0) {
    out.qdd = Mllt.solve(rhs);
    out.forces = Vec::Zero(0);
    return out;
  }

  const Mat Jc = contact_jacobian(m, s.q, contacts);
  const Vec gamma = contact_drift(m, s.q, s.v, contacts);
  const Mat MinvJt = Mllt.solve(Jc.transpose());
  const Vec qdd_free = Mllt.solve(rhs);

  // Contact-space system: (Jc M^-1 Jc^T) f = -gamma - Jc qdd_free.
  // Rank-revealing solve so coincident/redundant contact rows regularize
  // only the degenerate directions and the constraint residual stays at
  // machine precision otherwise.
  Mat schur = Jc * MinvJt;
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(schur.rows(), schur.cols());
  cod.setThreshold(1e-10);
  cod.compute(schur);
  out.forces = cod.solve((-gamma - Jc * qdd_free).eval());
  out.qdd = qdd_free + MinvJt * out.forces;
  return out;
}

RobotState integrate(const RobotState& s, const Vec& qdd, double dt) {
  if (qdd.size() != s.v.size()) throw DimensionMismatch("integrate: qdd size != nv");
  RobotState n;
  n.v = s.v + qdd * dt;
  n.q = s.q + n.v * dt;
  n.t = s.t + dt;
  return n;
}

void stabilize_contacts(const RobotModel& m, RobotState& s, const ContactSet& contacts,
                        const std::vector<Vec2>& anchors) {
  if (contacts.count() == 0) return;
  if (static_cast<int>(anchors.size()) != contacts.count())
    throw DimensionMismatch("stabilize_contacts: one anchor required per contact");

  const Mat M = mass_matrix(m, s.q);
  Eigen::LLT<Mat> Mllt(M);

  // A couple of Gauss-Newton steps pulling contact points back to anchors.
  for (int iter = 0; iter < 2; ++iter) {
    Vec err(contacts.rows());
    for (int i = 0; i < contacts.count(); ++i)
      err.segment<2>(2 * i) =
          frame_position(m, s.q, resolve_frame(m, contacts.frames[i])) - anchors[i];
    if (err.norm() < 1e-12) break;
    const Mat Jc = contact_jacobian(m, s.q, contacts);
    const Mat MinvJt = Mllt.solve(Jc.transpose());
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(contacts.rows(), contacts.rows());
    cod.setThreshold(1e-10);
    cod.compute((Jc * MinvJt).eval());
    s.q -= MinvJt * cod.solve(err);
  }

  // Mass-weighted velocity projection onto {v : Jc v = 0}, using the
  // corrected configuration so the projected velocity is tangent to the
  // manifold the position step just landed on.
  {
    Eigen::LLT<Mat> Mllt2(mass_matrix(m, s.q));
    const Mat Jc = contact_jacobian(m, s.q, contacts);
    const Mat MinvJt = Mllt2.solve(Jc.transpose());
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(contacts.rows(), contacts.rows());
    cod.setThreshold(1e-10);
    cod.compute((Jc * MinvJt).eval());
    s.v -= MinvJt * cod.solve((Jc * s.v).eval());
  }
}

}  // namespace edgewbc

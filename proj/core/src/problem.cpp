#include "edgewbc/problem.hpp"

#include <cmath>

namespace edgewbc {

namespace {

// Joints whose torque bounds enter the inequality block (finite limits only).
std::vector<int> bounded_joints(const RobotModel& m) {
  std::vector<int> out;
  for (int j = 0; j < m.num_joints(); ++j)
    if (std::isfinite(m.joints[j].torque_limit)) out.push_back(j);
  return out;
}

// Commanded task acceleration: feedforward plus critically-tuned PD on the
// measured task position/velocity.
Vec task_acc_command(const TaskSpec& task, const Vec& pos, const Vec& vel, double t) {
  const TaskTarget ref = task.reference(t);
  if (ref.pos.size() != pos.size())
    throw DimensionMismatch("task reference dimension does not match task space");
  return ref.acc + task.gains.kd * (ref.vel - vel) + task.gains.kp * (ref.pos - pos);
}

struct TaskBlock {
  Mat J;      // task-space Jacobian over qdd
  Vec drift;  // Jdot v
  Vec acc_cmd;
};

// Drift rhs for the rigid-contact rows, made consistent with the rows
// themselves. When several contact points ride on one rigid link, a noisy
// velocity estimate implies point accelerations that no generalized
// acceleration can produce (the points would have to move apart); that
// impossible part is exactly the component of the drift outside the range of
// the contact Jacobian, so it is removed before the rows become equalities.
Vec consistent_drift(const Mat& Jc, Vec gamma) {
  if (Jc.rows() == 0) return gamma;
  Eigen::ColPivHouseholderQR<Mat> qr(Jc);
  const int def = static_cast<int>(Jc.rows()) - static_cast<int>(qr.rank());
  if (def <= 0) return gamma;
  const Mat Q = qr.householderQ();
  const Mat N = Q.rightCols(def);  // orthonormal basis of the left null space
  gamma -= N * (N.transpose() * gamma);
  return gamma;
}

TaskBlock eval_task(const RobotModel& m, const RobotState& s, const TaskSpec& task, double t) {
  TaskBlock b;
  switch (task.kind) {
    case TaskKind::CoM: {
      b.J = com_jacobian(m, s.q);
      b.drift = com_drift(m, s.q, s.v);
      b.acc_cmd = task_acc_command(task, com_position(m, s.q), com_velocity(m, s.q, s.v), t);
      break;
    }
    case TaskKind::FrameTracking: {
      const FramePoint fp = resolve_frame(m, task.frame);
      b.J = frame_jacobian(m, s.q, fp);
      b.drift = frame_drift(m, s.q, s.v, fp);
      b.acc_cmd =
          task_acc_command(task, frame_position(m, s.q, fp), frame_velocity(m, s.q, s.v, fp), t);
      break;
    }
    case TaskKind::Posture: {
      const int j = m.num_joints();
      b.J = Mat::Zero(j, m.nv());
      b.J.rightCols(j).setIdentity();
      b.drift = Vec::Zero(j);
      b.acc_cmd = task_acc_command(task, s.q.tail(j), s.v.tail(j), t);
      break;
    }
  }
  return b;
}

}  // namespace

ActiveSet QpProblem::equalities_active() const {
  ActiveSet a;
  a.mode_id = mode_id;
  a.rows.resize(m_eq());
  for (int i = 0; i < m_eq(); ++i) a.rows[i] = i;
  return a;
}

QpProblem build_problem(const RobotModel& m, const RobotState& state,
                        const std::vector<TaskSpec>& tasks, const ContactSet& contacts, double t,
                        const TsidOptions& opts) {
  const int nv = m.nv();
  const int bd = m.base_dofs();
  const int nj = m.num_joints();
  const int k = contacts.count();
  const int n = nv + 2 * k;

  QpProblem p;
  p.n = n;
  p.nv = nv;
  p.contacts = contacts;
  p.mode_id = contacts.mode_id();

  const Mat M = mass_matrix(m, state.q);
  const Vec h = bias_forces(m, state.q, state.v);
  const Mat Jc = contact_jacobian(m, state.q, contacts);
  const Vec gamma = consistent_drift(Jc, contact_drift(m, state.q, state.v, contacts));

  // Equalities: unactuated dynamics rows, then rigid-contact rows.
  const int m_eq = bd + 2 * k;
  p.A_eq = Mat::Zero(m_eq, n);
  p.b_eq = Vec::Zero(m_eq);
  p.A_eq.topLeftCorner(bd, nv) = M.topRows(bd);
  if (k > 0) p.A_eq.topRightCorner(bd, 2 * k) = -Jc.transpose().topRows(bd);
  p.b_eq.head(bd) = -h.head(bd);
  if (k > 0) {
    p.A_eq.block(bd, 0, 2 * k, nv) = Jc;
    p.b_eq.segment(bd, 2 * k) = -gamma;
  }

  // Inequalities: friction cones (|f_t| <= mu f_n), then torque bounds.
  const std::vector<int> tq = bounded_joints(m);
  const int m_in = 2 * k + 2 * static_cast<int>(tq.size());
  p.A_in = Mat::Zero(m_in, n);
  p.b_in = Vec::Zero(m_in);
  for (int i = 0; i < k; ++i) {
    const int ft = nv + 2 * i, fn = nv + 2 * i + 1;
    p.A_in(2 * i, ft) = 1.0;
    p.A_in(2 * i, fn) = -m.friction_coeff;
    p.A_in(2 * i + 1, ft) = -1.0;
    p.A_in(2 * i + 1, fn) = -m.friction_coeff;
  }
  if (!tq.empty()) {
    // tau = D y + h_a with D = [M_a, -(Jc^T)_a].
    Mat D = Mat::Zero(nj, n);
    D.leftCols(nv) = M.bottomRows(nj);
    if (k > 0) D.rightCols(2 * k) = -Jc.transpose().bottomRows(nj);
    for (int r = 0; r < static_cast<int>(tq.size()); ++r) {
      const int j = tq[r];
      const double lim = m.joints[j].torque_limit;
      p.A_in.row(2 * k + r) = D.row(j);
      p.b_in(2 * k + r) = lim - h[bd + j];
      p.A_in.row(2 * k + tq.size() + r) = -D.row(j);
      p.b_in(2 * k + tq.size() + r) = lim + h[bd + j];
    }
  }

  // Sqrt-weighted task rows plus force regularization.
  int task_rows = 0;
  for (const auto& task : tasks) task_rows += task.rows(m);
  p.C = Mat::Zero(task_rows + 2 * k, n);
  p.d = Vec::Zero(task_rows + 2 * k);
  int r0 = 0;
  for (const auto& task : tasks) {
    const TaskBlock tb = eval_task(m, state, task, t);
    const double w = std::sqrt(task.weight);
    const int rows = static_cast<int>(tb.J.rows());
    p.C.block(r0, 0, rows, nv) = w * tb.J;
    p.d.segment(r0, rows) = w * (tb.acc_cmd - tb.drift);
    r0 += rows;
  }
  if (k > 0)
    p.C.block(r0, nv, 2 * k, 2 * k) =
        std::sqrt(opts.force_reg_weight) * Mat::Identity(2 * k, 2 * k);
  return p;
}

Vec build_b(const RobotModel& m, const RobotState& state, const std::vector<TaskSpec>& tasks,
            const ContactSet& contacts, const ActiveSet& active, double t,
            const TsidOptions& opts) {
  if (active.mode_id != contacts.mode_id())
    throw ModeMismatch("build_b: working set belongs to a different contact mode");
  const int bd = m.base_dofs();
  const int k = contacts.count();
  const int m_eq = bd + 2 * k;
  const std::vector<int> tq = bounded_joints(m);
  const int m_in = 2 * k + 2 * static_cast<int>(tq.size());

  // One sweep each for the bias and drift terms; the contact Jacobian is
  // needed only to keep the drift rhs consistent (same projection as the full
  // build, so a refreshed rhs matches a freshly assembled problem exactly).
  const Vec h = bias_forces(m, state.q, state.v);
  const Vec gamma =
      k > 0 ? Vec(consistent_drift(contact_jacobian(m, state.q, contacts),
                                   contact_drift(m, state.q, state.v, contacts)))
            : Vec();

  auto row_rhs = [&](int id) -> double {
    if (id < 0 || id >= m_eq + m_in) throw InvalidInput("build_b: row id out of range");
    if (id < bd) return -h[id];                          // unactuated dynamics
    if (id < m_eq) return -gamma[id - bd];               // contact row
    const int iq = id - m_eq;
    if (iq < 2 * k) return 0.0;                          // friction cone
    const int tr = iq - 2 * k;                           // torque row
    const int nb = static_cast<int>(tq.size());
    const int j = tq[tr % nb];
    const double lim = m.joints[j].torque_limit;
    return tr < nb ? lim - h[bd + j] : lim + h[bd + j];
  };

  int task_rows = 0;
  for (const auto& task : tasks) task_rows += task.rows(m);
  Vec b(active.size() + task_rows + 2 * k);
  for (int i = 0; i < active.size(); ++i) b[i] = row_rhs(active.rows[i]);

  int r0 = active.size();
  for (const auto& task : tasks) {
    const double w = std::sqrt(task.weight);
    switch (task.kind) {
      case TaskKind::CoM: {
        const Vec cmd = task_acc_command(task, com_position(m, state.q),
                                         com_velocity(m, state.q, state.v), t);
        b.segment(r0, 2) = w * (cmd - Vec(com_drift(m, state.q, state.v)));
        r0 += 2;
        break;
      }
      case TaskKind::FrameTracking: {
        const FramePoint fp = resolve_frame(m, task.frame);
        const Vec cmd = task_acc_command(task, frame_position(m, state.q, fp),
                                         frame_velocity(m, state.q, state.v, fp), t);
        b.segment(r0, 2) = w * (cmd - Vec(frame_drift(m, state.q, state.v, fp)));
        r0 += 2;
        break;
      }
      case TaskKind::Posture: {
        const int nj = m.num_joints();
        const Vec cmd = task_acc_command(task, state.q.tail(nj), state.v.tail(nj), t);
        b.segment(r0, nj) = w * cmd;
        r0 += nj;
        break;
      }
    }
  }
  b.tail(2 * k).setZero();  // force regularization targets
  return b;
}

StackedSystem stack_system(const QpProblem& p, const ActiveSet& active) {
  if (active.mode_id != p.mode_id)
    throw ModeMismatch("stack_system: working set belongs to a different contact mode");
  StackedSystem s;
  s.m_bar = active.size();
  s.A.resize(active.size() + p.C.rows(), p.n);
  s.b.resize(active.size() + p.C.rows());
  for (int i = 0; i < active.size(); ++i) {
    const int id = active.rows[i];
    if (id < 0 || id >= p.total_rows()) throw InvalidInput("stack_system: row id out of range");
    if (id < p.m_eq()) {
      s.A.row(i) = p.A_eq.row(id);
      s.b[i] = p.b_eq[id];
    } else {
      s.A.row(i) = p.A_in.row(id - p.m_eq());
      s.b[i] = p.b_in[id - p.m_eq()];
    }
  }
  s.A.bottomRows(p.C.rows()) = p.C;
  s.b.tail(p.C.rows()) = p.d;
  return s;
}

TorqueResult extract_torque(const RobotModel& m, const RobotState& state,
                            const ContactSet& contacts, const Vec& y) {
  const int nv = m.nv();
  const int k = contacts.count();
  if (y.size() != nv + 2 * k)
    throw DimensionMismatch("extract_torque: y size does not match nv + contact forces");

  const Vec qdd = y.head(nv);
  Vec gen = mass_matrix(m, state.q) * qdd + bias_forces(m, state.q, state.v);
  if (k > 0) gen -= contact_jacobian(m, state.q, contacts).transpose() * y.tail(2 * k);

  TorqueResult out;
  out.tau = gen.tail(m.num_joints());
  for (int j = 0; j < m.num_joints(); ++j) {
    const double lim = m.joints[j].torque_limit;
    if (out.tau[j] > lim) {
      out.tau[j] = lim;
      out.saturated = true;
    } else if (out.tau[j] < -lim) {
      out.tau[j] = -lim;
      out.saturated = true;
    }
  }
  return out;
}

}  // namespace edgewbc

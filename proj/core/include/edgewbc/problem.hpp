#pragma once

#include <vector>

#include "edgewbc/active_set.hpp"
#include "edgewbc/dynamics.hpp"
#include "edgewbc/task.hpp"

namespace edgewbc {

struct TsidOptions {
  double force_reg_weight = 1e-6;  // cost weight on ||f||^2
};

// Least-squares QP over y = (qdd, f):
//   min sum_i w_i ||J_i qdd - t_i||^2 + w_f ||f||^2
//   s.t. A_eq y = b_eq (floating-base dynamics rows + contact rows),
//        A_in y <= b_in (friction cones, torque limits).
// Stored with sqrt-weighted task rows so the cost is ||C y - d||^2.
//
// Canonical row layout (ids shared with ActiveSet):
//   [0, base_dofs)                unactuated dynamics rows
//   [base_dofs, m_eq)             contact rows, 2 per contact
//   [m_eq, m_eq + 2k)             friction rows, 2 per contact
//   [m_eq + 2k, m_eq + m_in)      torque rows (all upper bounds, then lower),
//                                 only joints with finite limits
struct QpProblem {
  int n = 0;
  int nv = 0;
  ContactSet contacts;
  std::uint32_t mode_id = 0;

  Mat A_eq;
  Vec b_eq;
  Mat A_in;
  Vec b_in;
  Mat C;
  Vec d;

  int m_eq() const { return static_cast<int>(A_eq.rows()); }
  int m_in() const { return static_cast<int>(A_in.rows()); }
  int total_rows() const { return m_eq() + m_in(); }

  // Working set containing exactly the equality rows, the smallest valid one.
  ActiveSet equalities_active() const;
};

QpProblem build_problem(const RobotModel& m, const RobotState& state,
                        const std::vector<TaskSpec>& tasks, const ContactSet& contacts, double t,
                        const TsidOptions& opts = {});

// Rebuilds only the stacked right-hand side [b_bar; d] for a pinned working
// set from the current state: O(nv) dynamics sweeps plus O(n^2) assembly,
// no factorization. This is the per-cycle local computation; the matrix side
// lives in a cached decomposition. Throws ModeMismatch when the working set
// belongs to a different contact mode.
Vec build_b(const RobotModel& m, const RobotState& state, const std::vector<TaskSpec>& tasks,
            const ContactSet& contacts, const ActiveSet& active, double t,
            const TsidOptions& opts = {});

// Stacked system [A_bar; C] y ~ [b_bar; d] for a given working set; the
// solver factorizes exactly this.
struct StackedSystem {
  Mat A;
  Vec b;
  int m_bar = 0;  // boundary between constraint rows and task rows
};
StackedSystem stack_system(const QpProblem& p, const ActiveSet& active);

struct TorqueResult {
  Vec tau;
  bool saturated = false;
};

// Joint torques realizing a solution y: actuated rows of M qdd + h - Jc^T f,
// clamped to the model limits (clamping sets `saturated`).
TorqueResult extract_torque(const RobotModel& m, const RobotState& state,
                            const ContactSet& contacts, const Vec& y);

}  // namespace edgewbc

#pragma once

#include "edgewbc/decomposition.hpp"
#include "edgewbc/problem.hpp"

namespace edgewbc {

struct SolverOptions {
  int max_iter_factor = 10;  // iteration cap = factor x total constraint rows
  double feas_tol = 1e-8;    // primal feasibility slack
  double mult_tol = 1e-8;    // dual feasibility slack
  double rank_tol = 1e-10;   // relative QR diagonal threshold
};

struct EqualityResult {
  Vec y;
  Vec lambda;  // one multiplier per active row, aligned with active.rows
  Decomposition decomp;
};

struct Solution {
  Vec y;
  ActiveSet active;
  Vec multipliers;
  Decomposition decomp;
  int iterations = 0;
  double objective = 0.0;  // 0.5 ||C y - d||^2
};

// Minimizes the task rows subject to the given working set treated as
// equalities (nullspace method). Dependent active rows are dropped at the
// rank-revealing factorization and carry zero multiplier; an inconsistent
// working set throws InfeasibleProblem.
EqualityResult solve_equality(const QpProblem& p, const ActiveSet& active,
                              const SolverOptions& opts = {});

// Active-set iteration: solve the equality subproblem, then either activate
// the most-violated inequality or deactivate the one with the most negative
// multiplier (ties to the lowest row index), until primal and dual feasible.
// Throws SolverStalled past max_iter_factor x (total rows) iterations.
Solution solve(const QpProblem& p, const ActiveSet* warm_start = nullptr,
               const SolverOptions& opts = {});

}  // namespace edgewbc

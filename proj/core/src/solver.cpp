#include "edgewbc/solver.hpp"

#include <Eigen/QR>
#include <cassert>

namespace edgewbc {

namespace {

Decomposition factorize(const StackedSystem& s, const ActiveSet& active, double build_time,
                        const SolverOptions& opts) {
  const int n = static_cast<int>(s.A.cols());
  const int m_bar = s.m_bar;
  const int task_rows = static_cast<int>(s.A.rows()) - m_bar;

  Decomposition d;
  d.n = n;
  d.m_bar = m_bar;
  d.task_rows = task_rows;
  d.active = active;
  d.build_time = build_time;
  d.C = s.A.bottomRows(task_rows);

  if (m_bar > 0) {
    Eigen::ColPivHouseholderQR<Mat> qr;
    qr.setThreshold(opts.rank_tol);
    qr.compute(s.A.topRows(m_bar).transpose());
    d.rank_a = static_cast<int>(qr.rank());
    d.null_dim = n - d.rank_a;
    d.perm_a = qr.colsPermutation().indices().cast<int>();
    d.R11 = qr.matrixR().topLeftCorner(d.rank_a, d.rank_a).triangularView<Eigen::Upper>();
    const Mat Qfull = qr.householderQ() * Mat::Identity(n, n);
    d.Q1 = Qfull.leftCols(d.rank_a);
    d.Z = Qfull.rightCols(d.null_dim);
  } else {
    d.rank_a = 0;
    d.null_dim = n;
    d.perm_a = VecXi(0);
    d.R11 = Mat(0, 0);
    d.Q1 = Mat(n, 0);
    d.Z = Mat::Identity(n, n);
  }

  if (d.null_dim > 0) {
    Eigen::ColPivHouseholderQR<Mat> qr_g;
    qr_g.setThreshold(opts.rank_tol);
    qr_g.compute((d.C * d.Z).eval());
    d.rank_g = static_cast<int>(qr_g.rank());
    d.perm_g = qr_g.colsPermutation().indices().cast<int>();
    d.Qg = qr_g.householderQ() * Mat::Identity(task_rows, d.rank_g);
    d.Rg = qr_g.matrixR().topLeftCorner(d.rank_g, d.rank_g).triangularView<Eigen::Upper>();
  } else {
    d.rank_g = 0;
    d.perm_g = VecXi(0);
    d.Qg = Mat(task_rows, 0);
    d.Rg = Mat(0, 0);
  }
  return d;
}

// Multipliers of the active rows: solve A_bar^T lambda = -grad through the
// stored factors; rows dropped as dependent get zero.
Vec active_multipliers(const Decomposition& d, const Vec& grad) {
  Vec lambda = Vec::Zero(d.m_bar);
  if (d.rank_a == 0) return lambda;
  const Vec mu = d.R11.triangularView<Eigen::Upper>().solve((d.Q1.transpose() * (-grad)).eval());
  for (int i = 0; i < d.rank_a; ++i) lambda[d.perm_a[i]] = mu[i];
  return lambda;
}

}  // namespace

EqualityResult solve_equality(const QpProblem& p, const ActiveSet& active,
                              const SolverOptions& opts) {
  const StackedSystem s = stack_system(p, active);
  EqualityResult r;
  r.decomp = factorize(s, active, 0.0, opts);
  r.y = r.decomp.apply(s.b);

  if (s.m_bar > 0) {
    // Dependent rows were dropped at the factorization; make sure their
    // right-hand sides are actually implied by the kept rows.
    const double resid =
        (s.A.topRows(s.m_bar) * r.y - s.b.head(s.m_bar)).lpNorm<Eigen::Infinity>();
    if (resid > opts.feas_tol * (1.0 + s.b.head(s.m_bar).lpNorm<Eigen::Infinity>()))
      throw InfeasibleProblem("equality subproblem is inconsistent");
  }

  const Vec grad = r.decomp.C.transpose() * (r.decomp.C * r.y - s.b.tail(r.decomp.task_rows));
  r.lambda = active_multipliers(r.decomp, grad);
  return r;
}

Solution solve(const QpProblem& p, const ActiveSet* warm_start, const SolverOptions& opts) {
  ActiveSet active = p.equalities_active();
  if (warm_start && warm_start->mode_id == p.mode_id) {
    for (int id : warm_start->rows)
      if (id >= p.m_eq() && id < p.total_rows() && !active.contains(id)) active.rows.push_back(id);
  }

  const int max_iter = std::max(1, opts.max_iter_factor * std::max(p.total_rows(), 1));
  for (int iter = 1; iter <= max_iter; ++iter) {
    EqualityResult er;
    try {
      er = solve_equality(p, active, opts);
    } catch (const InfeasibleProblem&) {
      // The working set became inconsistent. Only an activation can cause
      // that (removals shrink a consistent system), so the offender is the
      // most recently added row unless the set was inherited inconsistent.
      if (active.rows.empty() || active.rows.back() < p.m_eq()) throw;
      const int offender = active.rows.back();
      active.rows.pop_back();

      EqualityResult base;
      try {
        base = solve_equality(p, active, opts);
      } catch (const InfeasibleProblem&) {
        // A stale warm start smuggled in a conflicting combination; restart
        // from the equality rows alone.
        active = p.equalities_active();
        continue;
      }

      // Expand the offending row over the working set: a_r = A_bar^T mu.
      // Feasibility of the problem requires some inequality row to carry a
      // positive coefficient; evicting it restores consistency.
      const Vec a_r = p.A_in.row(offender - p.m_eq()).transpose();
      const Vec mu = active_multipliers(base.decomp, Vec(-a_r));
      int evict = -1;
      double best = 1e-12 + 1e-9 * mu.lpNorm<Eigen::Infinity>();
      for (int i = 0; i < active.size(); ++i) {
        if (active.rows[i] < p.m_eq()) continue;
        if (mu[i] > best ||
            (evict >= 0 && mu[i] == best && active.rows[i] < active.rows[evict])) {
          best = mu[i];
          evict = i;
        }
      }
      if (evict < 0)
        throw InfeasibleProblem("inequality row conflicts with the equality rows");
      active.rows.erase(active.rows.begin() + evict);
      active.rows.push_back(offender);
      continue;
    }

    // Most violated inactive inequality, ties to the lowest row index.
    int worst_row = -1;
    double worst_viol = opts.feas_tol;
    for (int i = 0; i < p.m_in(); ++i) {
      const int id = p.m_eq() + i;
      if (active.contains(id)) continue;
      const double v = p.A_in.row(i).dot(er.y) - p.b_in[i];
      if (v > worst_viol) {
        worst_viol = v;
        worst_row = id;
      }
    }
    if (worst_row >= 0) {
      active.rows.push_back(worst_row);
      continue;
    }

    // Primal feasible: release the most negative inequality multiplier.
    int drop_pos = -1;
    double drop_val = -opts.mult_tol;
    for (int i = 0; i < active.size(); ++i) {
      if (active.rows[i] < p.m_eq()) continue;
      const double l = er.lambda[i];
      if (l < drop_val || (drop_pos >= 0 && l == drop_val && active.rows[i] < active.rows[drop_pos])) {
        drop_val = l;
        drop_pos = i;
      }
    }
    if (drop_pos >= 0) {
      active.rows.erase(active.rows.begin() + drop_pos);
      continue;
    }

    Solution sol;
    sol.y = std::move(er.y);
    sol.active = active;
    sol.multipliers = std::move(er.lambda);
    sol.decomp = std::move(er.decomp);
    sol.iterations = iter;
    sol.objective = 0.5 * (sol.decomp.C * sol.y - p.d).squaredNorm();

#ifndef NDEBUG
    {  // KKT residuals, asserted on every converged solve in debug builds.
      const Vec grad = p.C.transpose() * (p.C * sol.y - p.d);
      Vec station = grad;
      for (int i = 0; i < active.size(); ++i) {
        const int id = active.rows[i];
        const auto row = id < p.m_eq() ? p.A_eq.row(id) : p.A_in.row(id - p.m_eq());
        station += sol.multipliers[i] * row.transpose();
      }
      assert(station.lpNorm<Eigen::Infinity>() <= 1e-6 * (1.0 + grad.lpNorm<Eigen::Infinity>()));
      assert(((p.A_in * sol.y - p.b_in).array() <= 1e-6).all());
      if (p.m_eq() > 0)
        assert((p.A_eq * sol.y - p.b_eq).lpNorm<Eigen::Infinity>() <=
               1e-6 * (1.0 + p.b_eq.lpNorm<Eigen::Infinity>()));
    }
#endif
    return sol;
  }
  throw SolverStalled("active-set iteration cap exceeded");
}

}  // namespace edgewbc

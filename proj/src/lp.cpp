#include "coopq/lp.hpp"

#include <cmath>
#include <limits>

namespace coopq {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kReducedCostTol = 1e-9;

struct DualUnbounded {};

// Dense tableau for the dual problem: maximize cost.lam subject to
// Dnorm lam = rhs, lam >= 0, with one artificial per equality. Column
// layout: [0, m) real, [m, m+k) artificial, last column current RHS.
struct Tableau {
  int k, m;
  std::vector<double> t;   // (k+1) x (m+k+1), row-major
  std::vector<int> basis;  // basic variable per row

  int cols() const { return m + k + 1; }
  double& at(int r, int c) { return t[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return t[static_cast<std::size_t>(r) * cols() + c]; }

  void pivot(int row, int col) {
    const double p = at(row, col);
    for (int c = 0; c < cols(); ++c) at(row, c) /= p;
    for (int r = 0; r <= k; ++r) {
      if (r == row) continue;
      const double f = at(r, col);
      if (f == 0.0) continue;
      for (int c = 0; c < cols(); ++c) at(r, c) -= f * at(row, c);
    }
    basis[row] = col;
  }

  // Runs simplex iterations until optimal; throws SolverError when the
  // dual is unbounded or the iteration cap is hit.
  void run(int col_limit) {
    for (long iter = 0; step(col_limit); ++iter)
      if (iter > 200000) throw SolverError("simplex iteration cap exceeded");
  }

  // Bland's rule; entering restricted to columns < col_limit. Returns false
  // when optimal, throws SolverError when the dual is unbounded.
  bool step(int col_limit) {
    int enter = -1;
    for (int c = 0; c < col_limit; ++c) {
      if (at(k, c) > kReducedCostTol) {
        enter = c;
        break;
      }
    }
    if (enter < 0) return false;
    int leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int r = 0; r < k; ++r) {
      const double a = at(r, enter);
      if (a <= kPivotTol) continue;
      const double ratio = at(r, cols() - 1) / a;
      if (ratio < best_ratio - 1e-12 ||
          (ratio < best_ratio + 1e-12 && (leave < 0 || basis[r] < basis[leave]))) {
        best_ratio = ratio;
        leave = r;
      }
    }
    if (leave < 0) throw DualUnbounded{};
    pivot(leave, enter);
    return true;
  }
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp) {
  const int k = lp.num_vars;
  const int m = static_cast<int>(lp.rows.size());
  if (static_cast<int>(lp.objective.size()) != k)
    throw SolverError("objective size mismatch");

  // Dense normalized dual system: Dnorm[i][r] = sign_i * (coefficient of
  // y_i in row r), rhs_i = sign_i * c_i >= 0.
  std::vector<double> dnorm(static_cast<std::size_t>(k) * m, 0.0);
  std::vector<double> sign(static_cast<std::size_t>(k), 1.0);
  for (int r = 0; r < m; ++r)
    for (const auto& [var, coef] : lp.rows[r].coeffs) {
      if (var < 0 || var >= k) throw SolverError("row references unknown variable");
      dnorm[static_cast<std::size_t>(var) * m + r] += coef;
    }
  for (int i = 0; i < k; ++i)
    if (lp.objective[i] < 0.0) sign[i] = -1.0;

  Tableau tab;
  tab.k = k;
  tab.m = m;
  tab.t.assign(static_cast<std::size_t>(k + 1) * (m + k + 1), 0.0);
  tab.basis.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    for (int r = 0; r < m; ++r) tab.at(i, r) = sign[i] * dnorm[static_cast<std::size_t>(i) * m + r];
    tab.at(i, m + i) = 1.0;
    tab.at(i, tab.cols() - 1) = sign[i] * lp.objective[i];
    tab.basis[i] = m + i;
  }

  // Phase 1: maximize -(sum of artificials). Reduced-cost row for cost
  // vector (0,...,0,-1,...,-1) with the artificial basis: row_k = sum of
  // constraint rows over real columns, 0 on artificials.
  for (int c = 0; c < m; ++c) {
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += tab.at(i, c);
    tab.at(k, c) = s;
  }
  for (int c = m; c < m + k; ++c) tab.at(k, c) = 0.0;
  {
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += tab.at(i, tab.cols() - 1);
    tab.at(k, tab.cols() - 1) = s; // phase-1 infeasibility measure
  }
  try {
    tab.run(m);
  } catch (const DualUnbounded&) {
    // Phase-1 objective is bounded; reaching this means numerics broke down.
    throw SolverError("phase-1 pivot failure");
  }
  double obj_scale = 1.0;
  for (int i = 0; i < k; ++i) obj_scale += std::abs(lp.objective[i]);
  if (tab.at(k, tab.cols() - 1) > 1e-8 * obj_scale) {
    // Dual infeasible: the primal is unbounded (or vacuously infeasible in
    // degenerate uses; callers treat both as contract violations).
    return {LpStatus::Unbounded, 0.0, {}};
  }

  // Drive leftover artificials out of the basis where possible.
  for (int r = 0; r < k; ++r) {
    if (tab.basis[r] < m) continue;
    for (int c = 0; c < m; ++c) {
      if (std::abs(tab.at(r, c)) > 1e-9) {
        tab.pivot(r, c);
        break;
      }
    }
  }

  // Phase 2: maximize b.lam; artificials keep cost 0 and never re-enter.
  std::vector<double> cost(static_cast<std::size_t>(m + k), 0.0);
  for (int r = 0; r < m; ++r) cost[r] = lp.rows[r].rhs;
  for (int c = 0; c < m + k; ++c) {
    double z = 0.0;
    for (int i = 0; i < k; ++i) z += cost[tab.basis[i]] * tab.at(i, c);
    tab.at(k, c) = cost[c] - z;
  }
  {
    double z = 0.0;
    for (int i = 0; i < k; ++i) z += cost[tab.basis[i]] * tab.at(i, tab.cols() - 1);
    tab.at(k, tab.cols() - 1) = -z; // objective row tracks -(dual objective)
  }

  try {
    tab.run(m);
  } catch (const DualUnbounded&) {
    return {LpStatus::Infeasible, 0.0, {}}; // dual unbounded <=> primal infeasible
  }

  double dual_obj = 0.0;
  for (int i = 0; i < k; ++i)
    if (tab.basis[i] < m) dual_obj += cost[tab.basis[i]] * tab.at(i, tab.cols() - 1);

  // Primal recovery: simplex multipliers pi solve B^T pi = cost_B over the
  // basis columns in normalized space; y = sign * pi.
  std::vector<double> bmat(static_cast<std::size_t>(k) * k, 0.0);
  std::vector<double> rhs(static_cast<std::size_t>(k), 0.0);
  for (int j = 0; j < k; ++j) {
    const int var = tab.basis[j];
    if (var < m) {
      for (int i = 0; i < k; ++i)
        bmat[static_cast<std::size_t>(j) * k + i] =
            sign[i] * dnorm[static_cast<std::size_t>(i) * m + var];
      rhs[j] = cost[var];
    } else {
      bmat[static_cast<std::size_t>(j) * k + (var - m)] = 1.0;
      rhs[j] = 0.0;
    }
  }
  // Gaussian elimination with partial pivoting on the k x k system.
  std::vector<int> perm(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) perm[i] = i;
  for (int col = 0; col < k; ++col) {
    int best = col;
    for (int r = col + 1; r < k; ++r)
      if (std::abs(bmat[static_cast<std::size_t>(r) * k + col]) >
          std::abs(bmat[static_cast<std::size_t>(best) * k + col]))
        best = r;
    if (std::abs(bmat[static_cast<std::size_t>(best) * k + col]) < 1e-12)
      throw SolverError("singular basis during primal recovery");
    if (best != col) {
      for (int c = 0; c < k; ++c)
        std::swap(bmat[static_cast<std::size_t>(best) * k + c],
                  bmat[static_cast<std::size_t>(col) * k + c]);
      std::swap(rhs[best], rhs[col]);
    }
    for (int r = col + 1; r < k; ++r) {
      const double f = bmat[static_cast<std::size_t>(r) * k + col] /
                       bmat[static_cast<std::size_t>(col) * k + col];
      if (f == 0.0) continue;
      for (int c = col; c < k; ++c)
        bmat[static_cast<std::size_t>(r) * k + c] -=
            f * bmat[static_cast<std::size_t>(col) * k + c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> pi(static_cast<std::size_t>(k), 0.0);
  for (int r = k - 1; r >= 0; --r) {
    double s = rhs[r];
    for (int c = r + 1; c < k; ++c) s -= bmat[static_cast<std::size_t>(r) * k + c] * pi[c];
    pi[r] = s / bmat[static_cast<std::size_t>(r) * k + r];
  }
  std::vector<double> y(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) y[i] = sign[i] * pi[i];

  // Safety: primal feasibility and duality gap.
  double feas_scale = 1.0;
  for (int i = 0; i < k; ++i) feas_scale = std::max(feas_scale, std::abs(y[i]));
  for (const auto& row : lp.rows) {
    double lhs = 0.0;
    for (const auto& [var, coef] : row.coeffs) lhs += coef * y[var];
    if (lhs < row.rhs - 1e-6 * std::max(1.0, std::abs(row.rhs)) - 1e-9 * feas_scale)
      throw SolverError("recovered solution violates a constraint");
  }
  double primal_obj = 0.0;
  for (int i = 0; i < k; ++i) primal_obj += lp.objective[i] * y[i];
  if (std::abs(primal_obj - dual_obj) > 1e-6 * (1.0 + std::abs(dual_obj)))
    throw SolverError("duality gap exceeds tolerance");

  return {LpStatus::Optimal, primal_obj, std::move(y)};
}

}  // namespace coopq

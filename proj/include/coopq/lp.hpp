// Small dense linear programs: minimize c.y subject to A y >= b, y free.
//
// Solved through the dual (max b.lam, A^T lam = c, lam >= 0) with a
// two-phase tableau simplex under Bland's rule, so runs are deterministic
// and finite. Geared to programs with a handful of variables and up to a
// few thousand rows; the tableau is (k+1) x (m+k+1) for k variables and
// m rows. Numerical failures raise SolverError rather than returning a
// silently wrong solution.
#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace coopq {

class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

struct LinearProgram {
  int num_vars = 0;
  std::vector<double> objective; // size num_vars
  struct Row {
    std::vector<std::pair<int, double>> coeffs; // sparse (var, coefficient)
    double rhs = 0.0;                           // coeffs . y >= rhs
  };
  std::vector<Row> rows;

  void add_row(std::vector<std::pair<int, double>> coeffs, double rhs) {
    rows.push_back({std::move(coeffs), rhs});
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> y;
};

LpSolution solve_lp(const LinearProgram& lp);

}  // namespace coopq

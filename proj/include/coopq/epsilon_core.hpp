// Least relaxation eps making an efficient imputation robust against every
// partition's non-singleton blocks, via an exact mixed-integer search:
// branch-and-bound over which block per partition is enforced, LP bounds at
// every node, deterministic lexicographic tie-breaking among optimal
// selections, and an L1 anchor objective among optimal imputations.
#pragma once

#include <vector>

#include "coopq/pfg.hpp"

#include "json.hpp"

namespace coopq {

struct EpsilonProgram {
  struct Row {
    Coalition coalition;
    double rhs = 0.0; // worth of the coalition in the group's partition
  };
  // One group per partition outside the grand and all-singleton ones, in
  // canonical partition order; rows are the partition's non-singleton
  // blocks. At least one row per group must hold at slack eps.
  struct Group {
    int partition_index = -1;
    std::vector<Row> rows;
  };

  int n = 0;
  std::vector<Group> groups;
  std::vector<double> ir_rhs;    // worth of each singleton in the all-singleton partition
  double efficiency_rhs = 0.0;   // worth of the grand coalition
  double big_m = 0.0;            // value range + 1
  std::vector<double> anchor;    // imputation targeted by the secondary objective

  std::size_t row_count() const {
    std::size_t c = 0;
    for (const auto& g : groups) c += g.rows.size();
    return c;
  }
};

// Assembles the program from a complete game; the anchor is the
// externality-free value. Throws on incomplete games.
EpsilonProgram build_program(const PartitionFunctionGame& game);

struct EpsilonSolution {
  std::vector<double> x;
  double epsilon = 0.0;
  // Per group: the lexicographically smallest block choice among optimal
  // selections, then every block satisfied at (x, epsilon).
  std::vector<int> selection;
  std::vector<std::vector<Coalition>> enforced;
  struct Stats {
    long lp_solves = 0;
    long nodes = 0;
  } stats;
};

EpsilonSolution solve_exact(const EpsilonProgram& program);

// Least eps with every row of every group enforced at once (one LP, no
// selection search). Counterpart of is_fully_group_rational the way
// solve_exact is the counterpart of is_in_strong_core: the optimum is zero
// exactly when some efficient imputation satisfies all blocks jointly.
// Always >= the solve_exact optimum on the same program.
EpsilonSolution solve_strict(const EpsilonProgram& program);

struct DynamicEpochResult {
  std::vector<double> payments;
  std::vector<double> lifetime_x; // solution.x shifted by -pi_prev
  EpsilonSolution solution;
};

// Epoch program: solves the static program on the epoch game, then recovers
// payments p_i = grand_values[i] - x_i, folding the float residual into the
// first payment so the payments sum to exactly zero. pi_prev enters the
// reported lifetime imputation (solution.x stays the epoch-local one).
DynamicEpochResult solve_dynamic_epoch(const PartitionFunctionGame& pfg_t,
                                       const std::vector<double>& pi_prev,
                                       const std::vector<double>& grand_values);

// Constraint rows, selection and slacks in JSON for debugging / --dump-lp.
nlohmann::json dump_program(const EpsilonProgram& program,
                            const EpsilonSolution* solution = nullptr);

}  // namespace coopq

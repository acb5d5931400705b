// Batch studies: strong-core inclusion rates of the two values over sampled
// instances, dynamic-simulation stability grids, and a sweep checking that
// sampled lane-choice games keep a zero optimum.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "coopq/horizontal.hpp"

namespace coopq {

struct Table1Spec {
  std::vector<int> n_bars = {2, 3, 4, 5, 6, 7};
  std::vector<int> lane_counts = {2, 3, 4};
  int replications = 250;
  std::uint64_t seed = 1;
  bool delay_offset = false;
};

struct Table1Cell {
  int n_bar = 0;
  int lanes = 0;
  double pct_free = 0.0; // % of replicates with the value in the strong core
  double pct_mcq = 0.0;
};

struct Table1Result {
  Table1Spec spec;
  std::vector<Table1Cell> cells; // n_bar-major, lane-minor
};

// Replicates fan out across threads; per-replicate seeds and result slots
// keep the aggregate independent of the thread count.
Table1Result run_table1(const Table1Spec& spec);
std::string table1_csv(const Table1Result& result, bool mcquillin);

struct Table2Spec {
  std::vector<double> flows = {360.0, 540.0, 720.0};
  std::vector<int> lane_counts = {2, 3};
  int runs_per_cell = 6;
  std::uint64_t seed = 1;
  SimConfig base; // horizon and kinematics; lanes/flow/seed overridden per run
};

struct Table2Cell {
  double flow = 0.0;
  int lanes = 0;
  double stable_pct = 0.0;       // over all epochs of all runs
  double ratio = 0.0;            // mean epsilon / mean-cost over all epochs
  double ratio_unstable = 0.0;   // same, unstable epochs only
  // Same three under the stricter every-block epsilon. The grid CSVs report
  // stable_strict_pct and ratio_strict_unstable; per-run summary.json keeps
  // every metric.
  double stable_strict_pct = 0.0;
  double ratio_strict = 0.0;
  double ratio_strict_unstable = 0.0;
  std::size_t epochs = 0;
  // Worst observed invariant slack across the cell's runs.
  double max_budget_imbalance = 0.0;
  double min_departure_offset = 0.0;
  int max_participants = 0;
  bool leaf_counts_ok = true;
  double max_ir_violation = 0.0;
};

struct Table2Result {
  Table2Spec spec;
  std::vector<Table2Cell> cells; // flow-major, lane-minor
};

// Runs fan out across threads. When out_dir is non-empty each run writes its
// epochs.csv / vehicles.csv / summary.json under out_dir/q<flow>_L<lanes>/run<k>.
Table2Result run_table2(const Table2Spec& spec, const std::string& out_dir = "");
std::string table2_stable_csv(const Table2Result& result);
std::string table2_ratio_csv(const Table2Result& result);

struct SweepSpec {
  long instances = 1000;
  int n_bar = 6;
  int lanes_max = 4; // lanes ~ U{1..lanes_max} per instance
  std::uint64_t seed = 1;
  bool delay_offset = false;
  std::size_t archive_cap = 16;
};

struct SweepResult {
  SweepSpec spec;
  long violations = 0;  // instances with optimum above 1e-7
  double max_epsilon = 0.0;
  std::vector<nlohmann::json> counterexamples; // instance + epsilon, capped
};

SweepResult run_conjecture_sweep(const SweepSpec& spec);

}  // namespace coopq

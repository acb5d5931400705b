// Acceptance gate: eight checks covering oracle equivalence, search
// exactness, value axioms, reproduction of the reference result grids,
// the non-emptiness sweep, dynamic invariants, complexity bounds, and
// byte-level determinism. Each check prints one [PASS]/[FAIL] line; the
// process exits non-zero if any required check fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "coopq/epsilon_core.hpp"
#include "coopq/experiments.hpp"
#include "coopq/horizontal.hpp"
#include "coopq/partitions.hpp"
#include "coopq/pfg.hpp"
#include "coopq/sampling.hpp"
#include "coopq/vertical.hpp"
#include "json.hpp"
#include "support/oracles.hpp"

using namespace coopq;

namespace {

constexpr std::uint64_t kSeed = 20260821;
const std::string kArtifactDir = "acceptance_out";

// Reference strong-core inclusion rates the implementation is expected to
// reproduce within +-10 points at 250 replications per cell. Rows are
// n_bar = 2..7, columns lane counts 2..4.
constexpr double kReferenceFree[6][3] = {
    {100.0, 100.0, 100.0}, {100.0, 97.2, 98.0}, {96.0, 85.2, 88.4},
    {87.6, 75.6, 72.4},    {84.0, 67.6, 64.0},  {74.4, 52.8, 61.6}};
constexpr double kReferenceMcq[6][3] = {
    {100.0, 100.0, 100.0}, {100.0, 97.2, 98.0}, {96.0, 85.2, 88.4},
    {88.0, 75.6, 72.4},    {83.6, 67.6, 64.0},  {74.4, 53.2, 62.0}};

// Reference stable-optimization percentages for the dynamic grid, rows
// q_in = 360, 540, 720, columns lane counts 2..3; checked at +-15 points.
constexpr double kReferenceStable[3][2] = {{91.5, 99.6}, {88.5, 95.1}, {78.7, 93.2}};

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

bool report(int index, const std::string& label, bool ok, double secs,
            const std::string& note = "") {
  std::printf("[%s] %d. %s (%.1f s)%s%s\n", ok ? "PASS" : "FAIL", index, label.c_str(), secs,
              note.empty() ? "" : " - ", note.c_str());
  std::fflush(stdout);
  return ok;
}

std::string fmt1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

// 1. Aggregated-state recursion vs the explicit lane-choice tree.
bool criterion_vertical_oracle() {
  Timer timer;
  bool ok = true;
  std::string note;
  for (int i = 0; i < 200 && ok; ++i) {
    Rng rng(derive_seed(kSeed, 101, static_cast<std::uint64_t>(i)));
    const int lanes = rng.uniform_int(1, 3);
    const VerticalInstance inst = sample_vertical_instance(rng, 4, lanes);
    for (const Partition& p : enumerate_partitions(inst.n())) {
      const StackelbergResult fast = solve_stackelberg(inst, p);
      const testing::FullHistoryResult slow = testing::solve_full_history(inst, p);
      if (fast.assignment != slow.assignment) ok = false;
      for (std::size_t b = 0; b < slow.block_values.size() && ok; ++b)
        if (std::abs(fast.block_values[b] - slow.block_values[b]) > 1e-9) ok = false;
      if (!ok) note = "mismatch on instance " + std::to_string(i);
    }
  }
  const double secs = timer.seconds();
  if (secs >= 10.0) {
    ok = false;
    note = "exceeded the 10 s budget";
  }
  return report(1, "vertical recursion matches the full-history oracle on 200 instances", ok,
                secs, note);
}

// 2. Branch-and-bound optimum vs cross-product enumeration.
bool criterion_milp_exactness() {
  Timer timer;
  bool ok = true;
  std::string note;
  double worst_gap = 0.0;
  for (int i = 0; i < 100 && ok; ++i) {
    Rng rng(derive_seed(kSeed, 102, static_cast<std::uint64_t>(i)));
    const VerticalInstance inst = sample_vertical_instance(rng, 5, rng.uniform_int(1, 3));
    const PartitionFunctionGame game = build_pfg(inst);
    const EpsilonSolution sol = solve_exact(build_program(game));
    const testing::EnumerationResult ref = testing::epsilon_enumeration(game);
    worst_gap = std::max(worst_gap, std::abs(sol.epsilon - ref.epsilon));
    if (std::abs(sol.epsilon - ref.epsilon) > 1e-7) {
      ok = false;
      note = "gap " + std::to_string(sol.epsilon - ref.epsilon) + " on instance " +
             std::to_string(i);
    }
  }
  const double secs = timer.seconds();
  if (ok) note = "max gap " + std::to_string(worst_gap);
  if (secs >= 60.0) {
    ok = false;
    note = "exceeded the 60 s budget";
  }
  return report(2, "relaxation optimum matches enumeration on 100 games", ok, secs, note);
}

// 3. Efficiency, symmetry, null-player, and the permutation form.
bool criterion_value_axioms() {
  Timer timer;
  bool ok = true;
  std::string note;

  // Constructed embedding-free game: agents 0/1 symmetric, agent 3 null.
  {
    const int n = 4;
    const auto w = [](AgentMask mask) {
      const int pair = ((mask >> 0) & 1u) + ((mask >> 1) & 1u);
      const int third = (mask >> 2) & 1u;
      return 5.0 * pair + 2.0 * third + 1.5 * pair * third;
    };
    PartitionFunctionGame game(n);
    for (int pi = 0; pi < game.partition_count(); ++pi)
      for (int b = 0; b < game.partitions()[pi].block_count(); ++b)
        game.set_value(pi, b, w(game.partitions()[pi].blocks[b].bits));
    for (const auto& phi : {externality_free_value(game), mcquillin_value(game)}) {
      double total = 0.0;
      for (double v : phi) total += v;
      if (std::abs(total - game.grand_value()) > 1e-9) ok = false;   // efficiency
      if (std::abs(phi[0] - phi[1]) > 1e-9) ok = false;              // symmetry
      if (std::abs(phi[3]) > 1e-9) ok = false;                       // null player
    }
    if (!ok) note = "axiom failure on the constructed game";
  }

  // Permutation-form equivalence on sampled games, both embeddings.
  for (int i = 0; i < 12 && ok; ++i) {
    Rng rng(derive_seed(kSeed, 103, static_cast<std::uint64_t>(i)));
    const VerticalInstance inst = sample_vertical_instance(rng, 5, rng.uniform_int(1, 3));
    const PartitionFunctionGame game = build_pfg(inst);
    const int n = game.n();
    const auto w_free = [&](AgentMask mask) {
      std::vector<Coalition> blocks{Coalition{mask}};
      for (int a = 0; a < n; ++a)
        if (!((mask >> a) & 1u)) blocks.push_back(Coalition::of({a}));
      return game.value(Coalition{mask}, Partition::from_blocks(n, blocks));
    };
    const auto w_mcq = [&](AgentMask mask) {
      const AgentMask rest = static_cast<AgentMask>(full_coalition(n).bits & ~mask);
      std::vector<Coalition> blocks{Coalition{mask}};
      if (rest) blocks.push_back(Coalition{rest});
      return game.value(Coalition{mask}, Partition::from_blocks(n, blocks));
    };
    const std::vector<double> free_value = externality_free_value(game);
    const std::vector<double> mcq_value = mcquillin_value(game);
    const std::vector<double> free_ref = testing::shapley_permutation(n, w_free);
    const std::vector<double> mcq_ref = testing::shapley_permutation(n, w_mcq);
    double sum_free = 0.0, sum_mcq = 0.0;
    for (int a = 0; a < n; ++a) {
      if (std::abs(free_value[a] - free_ref[a]) > 1e-9) ok = false;
      if (std::abs(mcq_value[a] - mcq_ref[a]) > 1e-9) ok = false;
      sum_free += free_value[a];
      sum_mcq += mcq_value[a];
    }
    if (std::abs(sum_free - game.grand_value()) > 1e-9) ok = false;
    if (std::abs(sum_mcq - game.grand_value()) > 1e-9) ok = false;
    if (!ok) note = "permutation-form mismatch on instance " + std::to_string(i);
  }
  return report(3, "both values satisfy the axioms and their permutation forms", ok,
                timer.seconds(), note);
}

// 4. Strong-core inclusion grid at 250 replications per cell.
bool criterion_inclusion_grid() {
  Timer timer;
  Table1Spec spec;
  spec.seed = 1;
  const Table1Result res = run_table1(spec);
  bool ok = true;
  std::string note;
  double worst = 0.0;
  double worst_over = 0.0;
  for (const Table1Cell& cell : res.cells) {
    const int row = cell.n_bar - 2;
    const int col = cell.lanes - 2;
    const double dev_free = std::abs(cell.pct_free - kReferenceFree[row][col]);
    const double dev_mcq = std::abs(cell.pct_mcq - kReferenceMcq[row][col]);
    worst = std::max({worst, dev_free, dev_mcq});
    const double dev = std::max(dev_free, dev_mcq);
    if (dev > 10.0 && dev > worst_over) {
      ok = false;
      worst_over = dev;
      note = "cell n_bar=" + std::to_string(cell.n_bar) + " M=" + std::to_string(cell.lanes) +
             " off by " + fmt1(dev) + " points";
    }
    if (cell.n_bar == 2 && (cell.pct_free != 100.0 || cell.pct_mcq != 100.0)) {
      ok = false;
      note = "n_bar=2 row must be exactly 100";
    }
    if (std::abs(cell.pct_free - cell.pct_mcq) > 2.0) {
      ok = false;
      note = "values disagree by more than 2 points at n_bar=" + std::to_string(cell.n_bar) +
             " M=" + std::to_string(cell.lanes);
    }
  }
  std::filesystem::create_directories(kArtifactDir);
  std::ofstream(kArtifactDir + "/table1_free.csv") << table1_csv(res, false);
  std::ofstream(kArtifactDir + "/table1_mcquillin.csv") << table1_csv(res, true);
  if (ok) note = "max deviation " + fmt1(worst) + " points";
  return report(4, "strong-core inclusion grid within 10 points of the reference", ok,
                timer.seconds(), note);
}

// 5. Non-emptiness sweep; a report, not a hard gate.
bool criterion_conjecture_sweep() {
  Timer timer;
  SweepSpec spec;
  spec.instances = 1000;
  spec.seed = 1;
  const SweepResult res = run_conjecture_sweep(spec);
  std::filesystem::create_directories(kArtifactDir);
  nlohmann::json out;
  out["instances"] = res.spec.instances;
  out["violations"] = res.violations;
  out["max_epsilon"] = res.max_epsilon;
  out["counterexamples"] = res.counterexamples;
  std::ofstream(kArtifactDir + "/sweep.json") << out.dump(2) << "\n";
  char eps[32];
  std::snprintf(eps, sizeof eps, "%.3g", res.max_epsilon);
  const std::string note = std::to_string(res.violations) +
                           " optima above 1e-7 over 1000 instances, max epsilon " + eps +
                           (res.violations > 0 ? ", counterexamples archived in " + kArtifactDir +
                                                     "/sweep.json"
                                               : "");
  return report(5, "zero-optimum sweep (reported, never a hard failure)", true, timer.seconds(),
                note);
}

// 6. Dynamic grid: invariants, reference stability window, trends.
bool criterion_dynamic_grid() {
  Timer timer;
  Table2Spec spec;
  spec.seed = 1;
  const Table2Result res = run_table2(spec, kArtifactDir + "/table2");
  std::ofstream(kArtifactDir + "/table2_stable.csv") << table2_stable_csv(res);
  std::ofstream(kArtifactDir + "/table2_ratio.csv") << table2_ratio_csv(res);

  bool ok = true;
  std::string note;
  const double h_q = spec.base.saturation_headway();
  const std::size_t lanes_n = spec.lane_counts.size();
  for (std::size_t f = 0; f < spec.flows.size() && ok; ++f) {
    for (std::size_t l = 0; l < lanes_n && ok; ++l) {
      const Table2Cell& cell = res.cells[f * lanes_n + l];
      if (cell.max_budget_imbalance > 1e-9) {
        ok = false;
        note = "budget imbalance " + std::to_string(cell.max_budget_imbalance);
      } else if (cell.min_departure_offset < h_q - 1e-9) {
        ok = false;
        note = "departure offset below the saturation headway";
      } else if (cell.max_participants > spec.base.participant_cap) {
        ok = false;
        note = "participant cap exceeded";
      } else if (!cell.leaf_counts_ok) {
        ok = false;
        note = "uneven lane-choice trees";
      } else if (cell.max_ir_violation > 1e-7) {
        ok = false;
        note = "individual rationality violated by " + std::to_string(cell.max_ir_violation);
      } else if (std::abs(cell.stable_strict_pct - kReferenceStable[f][l]) > 15.0) {
        // The reference grid was produced by the every-block program, so the
        // strict fraction is the comparable one.
        ok = false;
        note = "stable % " + fmt1(cell.stable_strict_pct) + " at q=" + fmt1(cell.flow) +
               " M=" + std::to_string(cell.lanes) + " outside the 15-point window around " +
               fmt1(kReferenceStable[f][l]);
      }
    }
    if (ok) {
      // Lanes trend on the solution concept's own stable fraction.
      const Table2Cell& two = res.cells[f * lanes_n + 0];
      const Table2Cell& three = res.cells[f * lanes_n + 1];
      if (three.stable_pct + 1e-9 < two.stable_pct) {
        ok = false;
        note = "three lanes less stable than two at q=" + fmt1(two.flow);
      }
    }
  }
  // Highest inflow must carry the smallest relaxation-to-cost ratio (the
  // reported one: strict epsilon over unstable epochs).
  for (std::size_t l = 0; l < lanes_n && ok; ++l) {
    const double last = res.cells[(spec.flows.size() - 1) * lanes_n + l].ratio_strict_unstable;
    for (std::size_t f = 0; f + 1 < spec.flows.size(); ++f)
      if (last > res.cells[f * lanes_n + l].ratio_strict_unstable + 1e-12) {
        ok = false;
        note = "ratio at the highest inflow is not the smallest for M=" +
               std::to_string(res.cells[l].lanes);
      }
  }
  const double secs = timer.seconds();
  if (secs >= 1800.0) {
    ok = false;
    note = "exceeded the 30 min budget";
  }
  if (ok) {
    note = "strict stable %:";
    for (const auto& cell : res.cells) note += " " + fmt1(cell.stable_strict_pct);
    // Disclose when the strict fractions themselves order the other way.
    for (std::size_t f = 0; f < spec.flows.size(); ++f) {
      const Table2Cell& two = res.cells[f * lanes_n + 0];
      const Table2Cell& three = res.cells[f * lanes_n + 1];
      if (three.stable_strict_pct < two.stable_strict_pct)
        note += "; strict trend reversed at q=" + fmt1(two.flow) + " (" +
                fmt1(three.stable_strict_pct) + " < " + fmt1(two.stable_strict_pct) + ")";
    }
  }
  return report(6, "dynamic grid holds every invariant and tracks the reference stability", ok,
                secs, note);
}

// 7. Instrumented complexity bounds.
bool criterion_complexity_bounds() {
  Timer timer;
  bool ok = true;
  std::string note;
  for (int i = 0; i < 50 && ok; ++i) {
    Rng rng(derive_seed(kSeed, 107, static_cast<std::uint64_t>(i)));
    const int lanes = rng.uniform_int(1, 4);
    const VerticalInstance inst = sample_vertical_instance(rng, 7, lanes);
    const StackelbergResult r = solve_stackelberg(inst, grand_partition(inst.n()));
    const double bound = inst.n() * std::pow(inst.n() + lanes, lanes);
    if (static_cast<double>(r.dp_states) > bound) {
      ok = false;
      note = "state count " + std::to_string(r.dp_states) + " above the bound";
    }
  }
  SimConfig cfg;
  cfg.lanes = 3;
  for (int i = 0; i < 30 && ok; ++i) {
    Rng rng(derive_seed(kSeed, 108, static_cast<std::uint64_t>(i)));
    const int n = rng.uniform_int(1, 6);
    LaneState state(cfg.lanes);
    for (int m = 0; m < cfg.lanes; ++m)
      if (rng.bernoulli(0.5)) state.last_departure[m] = 100.0 + rng.uniform() * 8.0;
    std::vector<Vehicle> storage;
    for (int v = 0; v < n; ++v) {
      Vehicle veh;
      veh.id = v;
      veh.theta = sample_theta(rng);
      veh.entry_time = 95.0 + rng.uniform() * 5.0;
      veh.free_exit_time = veh.entry_time + cfg.link_length / cfg.free_speed;
      storage.push_back(veh);
    }
    std::vector<const Vehicle*> parts;
    for (const auto& v : storage) parts.push_back(&v);
    const EpochGame game = build_epoch_pfg(parts, state, cfg);
    std::size_t expected = 1;
    for (int k = 0; k < n; ++k) expected *= static_cast<std::size_t>(cfg.lanes);
    if (game.leaves_per_partition != expected) {
      ok = false;
      note = "leaf count " + std::to_string(game.leaves_per_partition) + " != " +
             std::to_string(expected);
    }
  }
  return report(7, "state counts and leaf counts respect their combinatorial bounds", ok,
                timer.seconds(), note);
}

// 8. Byte-identical artifacts under identical seeds.
bool criterion_determinism() {
  Timer timer;
  bool ok = true;
  std::string note;

  Table1Spec t1;
  t1.n_bars = {2, 4};
  t1.lane_counts = {2, 3};
  t1.replications = 40;
  t1.seed = 17;
  const std::string grid_a = table1_csv(run_table1(t1), false);
  const std::string grid_b = table1_csv(run_table1(t1), false);
  if (grid_a != grid_b) {
    ok = false;
    note = "inclusion grid differs between identical runs";
  }

  SimConfig cfg;
  cfg.horizon = 300.0;
  cfg.rng_seed = 9;
  const std::string dir_a = kArtifactDir + "/determinism/a";
  const std::string dir_b = kArtifactDir + "/determinism/b";
  write_run_outputs(run_simulation(cfg), dir_a);
  write_run_outputs(run_simulation(cfg), dir_b);
  for (const char* name : {"/epochs.csv", "/vehicles.csv", "/summary.json"}) {
    std::ifstream fa(dir_a + name, std::ios::binary), fb(dir_b + name, std::ios::binary);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    if (sa.str().empty() || sa.str() != sb.str()) {
      ok = false;
      note = std::string("simulation artifact ") + name + " differs or is empty";
    }
  }

  SweepSpec sweep;
  sweep.instances = 25;
  sweep.n_bar = 4;
  sweep.seed = 23;
  const SweepResult sa = run_conjecture_sweep(sweep);
  const SweepResult sb = run_conjecture_sweep(sweep);
  if (sa.violations != sb.violations || sa.max_epsilon != sb.max_epsilon) {
    ok = false;
    note = "sweep results differ between identical runs";
  }
  return report(8, "identical seeds reproduce byte-identical artifacts", ok, timer.seconds(),
                note);
}

}  // namespace

int main() {
  std::printf("acceptance checks, artifacts under %s/\n", kArtifactDir.c_str());
  bool all = true;
  all &= criterion_vertical_oracle();
  all &= criterion_milp_exactness();
  all &= criterion_value_axioms();
  all &= criterion_inclusion_grid();
  all &= criterion_conjecture_sweep();
  all &= criterion_dynamic_grid();
  all &= criterion_complexity_bounds();
  all &= criterion_determinism();
  std::printf("%s\n", all ? "acceptance: all checks passed" : "acceptance: FAILURES PRESENT");
  return all ? 0 : 1;
}

#include "coopq/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "coopq/epsilon_core.hpp"
#include "coopq/json_io.hpp"
#include "coopq/sampling.hpp"

namespace coopq {

namespace {

std::string pct(double v) {
  if (v < 0.0 || v > 100.0) throw std::logic_error("percentage out of [0,100]");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string num(double v, const char* spec = "%.4g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

Table1Result run_table1(const Table1Spec& spec) {
  if (spec.replications < 1) throw std::invalid_argument("replications must be >= 1");
  Table1Result out;
  out.spec = spec;
  int cell_id = 0;
  for (int n_bar : spec.n_bars) {
    for (int lanes : spec.lane_counts) {
      const int reps = spec.replications;
      std::vector<unsigned char> in_free(static_cast<std::size_t>(reps), 0);
      std::vector<unsigned char> in_mcq(static_cast<std::size_t>(reps), 0);
#ifdef COOPQ_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
      for (int r = 0; r < reps; ++r) {
        Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(cell_id) + 1,
                            static_cast<std::uint64_t>(r)));
        VerticalInstance inst = sample_vertical_instance(rng, n_bar, lanes);
        inst.delay_offset = spec.delay_offset;
        const PartitionFunctionGame game = build_pfg(inst);
        in_free[static_cast<std::size_t>(r)] =
            is_fully_group_rational(game, externality_free_value(game)).in_core;
        in_mcq[static_cast<std::size_t>(r)] =
            is_fully_group_rational(game, mcquillin_value(game)).in_core;
      }
      int f = 0, m = 0;
      for (int r = 0; r < reps; ++r) {
        f += in_free[static_cast<std::size_t>(r)];
        m += in_mcq[static_cast<std::size_t>(r)];
      }
      Table1Cell cell;
      cell.n_bar = n_bar;
      cell.lanes = lanes;
      cell.pct_free = 100.0 * f / reps;
      cell.pct_mcq = 100.0 * m / reps;
      out.cells.push_back(cell);
      ++cell_id;
    }
  }
  return out;
}

std::string table1_csv(const Table1Result& result, bool mcquillin) {
  std::string s = "n_bar";
  for (int lanes : result.spec.lane_counts) s += ",M=" + std::to_string(lanes);
  s += '\n';
  std::size_t k = 0;
  for (int n_bar : result.spec.n_bars) {
    s += std::to_string(n_bar);
    for (std::size_t c = 0; c < result.spec.lane_counts.size(); ++c, ++k) {
      const Table1Cell& cell = result.cells[k];
      s += ',' + pct(mcquillin ? cell.pct_mcq : cell.pct_free);
    }
    s += '\n';
  }
  return s;
}

Table2Result run_table2(const Table2Spec& spec, const std::string& out_dir) {
  if (spec.runs_per_cell < 1) throw std::invalid_argument("runs_per_cell must be >= 1");
  spec.base.validate();
  Table2Result out;
  out.spec = spec;

  struct Task {
    std::size_t cell;
    int run;
    SimConfig cfg;
  };
  std::vector<Task> tasks;
  std::size_t cell_id = 0;
  for (double flow : spec.flows) {
    for (int lanes : spec.lane_counts) {
      for (int r = 0; r < spec.runs_per_cell; ++r) {
        SimConfig cfg = spec.base;
        cfg.arrival_flow = flow;
        cfg.lanes = lanes;
        cfg.rng_seed = derive_seed(spec.seed, cell_id + 1, static_cast<std::uint64_t>(r));
        tasks.push_back({cell_id, r, cfg});
      }
      ++cell_id;
    }
  }

  std::vector<SimulationReport> reports(tasks.size());
#ifdef COOPQ_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (long i = 0; i < static_cast<long>(tasks.size()); ++i)
    reports[static_cast<std::size_t>(i)] = run_simulation(tasks[static_cast<std::size_t>(i)].cfg);

  out.cells.resize(cell_id);
  std::vector<std::size_t> stable(cell_id, 0);
  std::vector<double> ratio_sum(cell_id, 0.0), ratio_unstable_sum(cell_id, 0.0);
  std::vector<std::size_t> unstable(cell_id, 0);
  std::vector<std::size_t> stable_s(cell_id, 0), unstable_s(cell_id, 0);
  std::vector<double> ratio_s_sum(cell_id, 0.0), ratio_s_unstable_sum(cell_id, 0.0);
  for (std::size_t c = 0; c < cell_id; ++c) {
    out.cells[c].flow = spec.flows[c / spec.lane_counts.size()];
    out.cells[c].lanes = spec.lane_counts[c % spec.lane_counts.size()];
    out.cells[c].min_departure_offset = spec.base.saturation_headway();
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const std::size_t c = tasks[i].cell;
    const SimulationReport& rep = reports[i];
    Table2Cell& cell = out.cells[c];
    for (const auto& e : rep.epochs) {
      cell.epochs += 1;
      const double ratio = e.mean_cost > 1e-12 ? e.epsilon / e.mean_cost : 0.0;
      ratio_sum[c] += ratio;
      if (e.epsilon <= 1e-9) {
        stable[c] += 1;
      } else {
        unstable[c] += 1;
        ratio_unstable_sum[c] += ratio;
      }
      const double ratio_s = e.mean_cost > 1e-12 ? e.epsilon_strict / e.mean_cost : 0.0;
      ratio_s_sum[c] += ratio_s;
      if (e.epsilon_strict <= 1e-9) {
        stable_s[c] += 1;
      } else {
        unstable_s[c] += 1;
        ratio_s_unstable_sum[c] += ratio_s;
      }
    }
    cell.max_budget_imbalance = std::max(cell.max_budget_imbalance, rep.max_budget_imbalance);
    cell.min_departure_offset = std::min(cell.min_departure_offset, rep.min_departure_offset);
    cell.max_participants = std::max(cell.max_participants, rep.max_participants);
    cell.leaf_counts_ok = cell.leaf_counts_ok && rep.leaf_counts_ok;
    cell.max_ir_violation = std::max(cell.max_ir_violation, rep.max_ir_violation);
    if (!out_dir.empty()) {
      char sub[96];
      std::snprintf(sub, sizeof sub, "/q%g_L%d/run%d", tasks[i].cfg.arrival_flow,
                    tasks[i].cfg.lanes, tasks[i].run);
      write_run_outputs(rep, out_dir + sub);
    }
  }
  for (std::size_t c = 0; c < cell_id; ++c) {
    Table2Cell& cell = out.cells[c];
    cell.stable_pct = cell.epochs == 0
                          ? 100.0
                          : 100.0 * static_cast<double>(stable[c]) /
                                static_cast<double>(cell.epochs);
    cell.ratio = cell.epochs == 0 ? 0.0 : ratio_sum[c] / static_cast<double>(cell.epochs);
    cell.ratio_unstable = unstable[c] == 0 ? 0.0
                                           : ratio_unstable_sum[c] /
                                                 static_cast<double>(unstable[c]);
    cell.stable_strict_pct = cell.epochs == 0
                                 ? 100.0
                                 : 100.0 * static_cast<double>(stable_s[c]) /
                                       static_cast<double>(cell.epochs);
    cell.ratio_strict =
        cell.epochs == 0 ? 0.0 : ratio_s_sum[c] / static_cast<double>(cell.epochs);
    cell.ratio_strict_unstable = unstable_s[c] == 0
                                     ? 0.0
                                     : ratio_s_unstable_sum[c] /
                                           static_cast<double>(unstable_s[c]);
  }
  return out;
}

namespace {

// The grid CSVs carry the strict-epsilon metrics: stability as the share of
// epochs whose program is satisfiable with every block enforced, and the
// cost ratio averaged over the epochs that are not. Per-run summary.json
// keeps the full metric set, headline and strict.
std::string table2_grid(const Table2Result& result, bool ratios) {
  std::string s = "q_in";
  for (int lanes : result.spec.lane_counts) s += ",M=" + std::to_string(lanes);
  s += '\n';
  std::size_t k = 0;
  for (double flow : result.spec.flows) {
    s += num(flow, "%g");
    for (std::size_t c = 0; c < result.spec.lane_counts.size(); ++c, ++k)
      s += ',' + (ratios ? num(result.cells[k].ratio_strict_unstable)
                         : pct(result.cells[k].stable_strict_pct));
    s += '\n';
  }
  return s;
}

}  // namespace

std::string table2_stable_csv(const Table2Result& result) { return table2_grid(result, false); }
std::string table2_ratio_csv(const Table2Result& result) { return table2_grid(result, true); }

SweepResult run_conjecture_sweep(const SweepSpec& spec) {
  if (spec.instances < 1) throw std::invalid_argument("instances must be >= 1");
  if (spec.lanes_max < 1 || spec.lanes_max > 4)
    throw std::invalid_argument("lanes_max out of range");
  SweepResult out;
  out.spec = spec;
  std::vector<double> eps(static_cast<std::size_t>(spec.instances), 0.0);
#ifdef COOPQ_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (long i = 0; i < spec.instances; ++i) {
    Rng rng(derive_seed(spec.seed, 0xC0, static_cast<std::uint64_t>(i)));
    const int lanes = rng.uniform_int(1, spec.lanes_max);
    VerticalInstance inst = sample_vertical_instance(rng, spec.n_bar, lanes);
    inst.delay_offset = spec.delay_offset;
    const PartitionFunctionGame game = build_pfg(inst);
    eps[static_cast<std::size_t>(i)] = solve_exact(build_program(game)).epsilon;
  }
  for (long i = 0; i < spec.instances; ++i) {
    const double e = eps[static_cast<std::size_t>(i)];
    out.max_epsilon = std::max(out.max_epsilon, e);
    if (e > 1e-7) {
      out.violations += 1;
      if (out.counterexamples.size() < spec.archive_cap) {
        // Re-sample the same stream to archive the instance.
        Rng rng(derive_seed(spec.seed, 0xC0, static_cast<std::uint64_t>(i)));
        const int lanes = rng.uniform_int(1, spec.lanes_max);
        VerticalInstance inst = sample_vertical_instance(rng, spec.n_bar, lanes);
        inst.delay_offset = spec.delay_offset;
        nlohmann::json c;
        c["index"] = i;
        c["instance"] = instance_to_json(inst);
        c["epsilon"] = e;
        out.counterexamples.push_back(std::move(c));
      }
    }
  }
  return out;
}

}  // namespace coopq

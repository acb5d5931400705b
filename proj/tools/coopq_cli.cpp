// Batch driver: sampled strong-core studies, dynamic simulation grids,
// single-instance solving and game diagnostics.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "coopq/epsilon_core.hpp"
#include "coopq/experiments.hpp"
#include "coopq/json_io.hpp"
#include "coopq/vertical.hpp"

namespace {

using namespace coopq;

nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config file: " + path);
  nlohmann::json j;
  f >> j;
  return j;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << content;
}

std::string joined(const std::vector<double>& v) {
  std::string s;
  char buf[48];
  for (double x : v) {
    if (!s.empty()) s += ", ";
    std::snprintf(buf, sizeof buf, "%.6g", x);
    s += buf;
  }
  return s;
}

int mode_table1(std::uint64_t seed, int reps, bool delay_offset,
                const nlohmann::json& cfg, const std::string& out_dir) {
  Table1Spec spec;
  spec.seed = seed;
  spec.replications = reps;
  spec.delay_offset = delay_offset;
  if (cfg.contains("n_bars")) spec.n_bars = cfg["n_bars"].get<std::vector<int>>();
  if (cfg.contains("lane_counts"))
    spec.lane_counts = cfg["lane_counts"].get<std::vector<int>>();
  const Table1Result res = run_table1(spec);
  const std::string free_csv = table1_csv(res, false);
  const std::string mcq_csv = table1_csv(res, true);
  std::filesystem::create_directories(out_dir);
  write_file(out_dir + "/table1_free.csv", free_csv);
  write_file(out_dir + "/table1_mcquillin.csv", mcq_csv);
  std::cout << "strong-core inclusion %, externality-free value\n"
            << free_csv << "\nstrong-core inclusion %, McQuillin value\n"
            << mcq_csv;
  return 0;
}

int mode_table2(std::uint64_t seed, int runs, const nlohmann::json& cfg,
                const std::string& out_dir) {
  Table2Spec spec;
  spec.seed = seed;
  spec.runs_per_cell = runs;
  if (cfg.contains("flows")) spec.flows = cfg["flows"].get<std::vector<double>>();
  if (cfg.contains("lane_counts"))
    spec.lane_counts = cfg["lane_counts"].get<std::vector<int>>();
  if (cfg.contains("sim")) spec.base = SimConfig::from_json(cfg["sim"]);
  std::filesystem::create_directories(out_dir);
  const Table2Result res = run_table2(spec, out_dir);
  const std::string stable_csv = table2_stable_csv(res);
  const std::string ratio_csv = table2_ratio_csv(res);
  write_file(out_dir + "/table2_stable.csv", stable_csv);
  write_file(out_dir + "/table2_ratio.csv", ratio_csv);
  std::cout << "% of stable optimizations (every-block criterion)\n" << stable_csv
            << "\nepsilon / mean-cost over unstable optimizations\n" << ratio_csv;
  return 0;
}

int mode_solve(const std::string& instance_path, bool dump_lp, bool delay_offset,
               const std::string& out_dir) {
  VerticalInstance inst = load_instance(instance_path);
  if (delay_offset) inst.delay_offset = true;
  const PartitionFunctionGame game = build_pfg(inst);
  const Partition grand = grand_partition(inst.n());
  const StackelbergResult play = solve_stackelberg(inst, grand);
  const EpsilonProgram prog = build_program(game);
  const EpsilonSolution sol = solve_exact(prog);
  const std::vector<double> phi_free = externality_free_value(game);
  const std::vector<double> phi_mcq = mcquillin_value(game);

  std::cout << "agents: " << inst.n() << ", lanes: " << inst.lanes() << "\n";
  std::cout << "assignment (grand play):";
  for (int i = 0; i < inst.n(); ++i)
    std::cout << " agent " << i + 1 << "->lane " << play.assignment[static_cast<std::size_t>(i)];
  std::cout << "\ngrand worth: " << game.grand_value() << "\n";
  std::cout << "value (externality-free): [" << joined(phi_free) << "]\n";
  std::cout << "value (McQuillin):        [" << joined(phi_mcq) << "]\n";
  std::cout << "imputation x*: [" << joined(sol.x) << "]\n";
  char eps_buf[48];
  std::snprintf(eps_buf, sizeof eps_buf, "%.12g", sol.epsilon);
  std::cout << "epsilon*: " << eps_buf << "\n";

  nlohmann::json out;
  out["instance"] = instance_to_json(inst);
  out["assignment"] = play.assignment;
  out["grand_worth"] = game.grand_value();
  out["value_externality_free"] = phi_free;
  out["value_mcquillin"] = phi_mcq;
  out["x"] = sol.x;
  out["epsilon"] = sol.epsilon;
  std::filesystem::create_directories(out_dir);
  write_file(out_dir + "/solution.json", out.dump(2) + "\n");
  if (dump_lp)
    write_file(out_dir + "/program.json", dump_program(prog, &sol).dump(2) + "\n");
  return sol.epsilon > 1e-9 ? 2 : 0;
}

int mode_analyze(const std::string& instance_path, bool delay_offset,
                 const std::string& out_dir) {
  VerticalInstance inst = load_instance(instance_path);
  if (delay_offset) inst.delay_offset = true;
  const PartitionFunctionGame game = build_pfg(inst);
  const FcfsResult fcfs = fcfs_baseline(inst);

  auto savings = [&](const Coalition& c, double worth) {
    double base = 0.0;
    for (int i : c.members()) base += fcfs.values[static_cast<std::size_t>(i)];
    return worth - base;
  };

  std::cout << "agents: " << inst.n() << ", lanes: " << inst.lanes()
            << ", grand worth: " << game.grand_value() << "\n";
  if (inst.n() <= 6) {
    const ExternalitySummary ext = classify_all_externalities(game);
    std::cout << "externalities: " << ext.negative << " negative, " << ext.positive
              << " positive, " << ext.zero << " zero\n";
    for (const auto& w : ext.negative_witnesses) {
      const Partition split = Partition::from_blocks(
          inst.n(), [&] {
            std::vector<Coalition> blocks{w.s, w.t, w.c};
            blocks.insert(blocks.end(), w.rho.begin(), w.rho.end());
            return blocks;
          }());
      const Partition merged = Partition::from_blocks(
          inst.n(), [&] {
            std::vector<Coalition> blocks{Coalition{static_cast<AgentMask>(w.s.bits | w.t.bits)}, w.c};
            blocks.insert(blocks.end(), w.rho.begin(), w.rho.end());
            return blocks;
          }());
      const double before = game.value(w.c, split);
      const double after = game.value(w.c, merged);
      std::cout << "  merging {" << coalition_to_string(w.s) << "} and {"
                << coalition_to_string(w.t) << "} moves {" << coalition_to_string(w.c)
                << "} from " << before << " to " << after << " (savings "
                << savings(w.c, before) << " -> " << savings(w.c, after) << ")\n";
    }
    const auto violations = check_superadditivity(game);
    if (violations.empty()) {
      std::cout << "superadditive: yes\n";
    } else {
      std::cout << "superadditive: no (" << violations.size() << " violations)\n";
      const auto& v = violations.front();
      std::cout << "  e.g. {" << coalition_to_string(v.s) << "} + {"
                << coalition_to_string(v.t) << "}: merged " << v.merged
                << " < split sum " << v.split_sum << "\n";
    }
  } else {
    std::cout << "externality scan skipped (more than 6 agents)\n";
  }
  const std::vector<double> phi_free = externality_free_value(game);
  const std::vector<double> phi_mcq = mcquillin_value(game);
  const CoreMembership in_free = is_in_strong_core(game, phi_free);
  const CoreMembership in_mcq = is_in_strong_core(game, phi_mcq);
  const CoreMembership full_free = is_fully_group_rational(game, phi_free);
  const CoreMembership full_mcq = is_fully_group_rational(game, phi_mcq);
  std::cout << "value (externality-free): [" << joined(phi_free) << "] "
            << (in_free.in_core ? "in strong core" : "NOT in strong core") << "\n";
  std::cout << "value (McQuillin):        [" << joined(phi_mcq) << "] "
            << (in_mcq.in_core ? "in strong core" : "NOT in strong core") << "\n";
  std::cout << "every-block rationality: externality-free "
            << (full_free.in_core ? "yes" : "no") << ", McQuillin "
            << (full_mcq.in_core ? "yes" : "no") << "\n";

  nlohmann::json out;
  out["instance"] = instance_to_json(inst);
  out["pfg"] = pfg_to_json(game);
  out["value_externality_free"] = phi_free;
  out["value_mcquillin"] = phi_mcq;
  out["in_core_externality_free"] = in_free.in_core;
  out["in_core_mcquillin"] = in_mcq.in_core;
  out["fully_group_rational_externality_free"] = full_free.in_core;
  out["fully_group_rational_mcquillin"] = full_mcq.in_core;
  std::filesystem::create_directories(out_dir);
  write_file(out_dir + "/analysis.json", out.dump(2) + "\n");
  return 0;
}

int mode_sweep(std::uint64_t seed, int reps, bool delay_offset,
               const nlohmann::json& cfg, const std::string& out_dir) {
  SweepSpec spec;
  spec.seed = seed;
  spec.instances = reps;
  spec.delay_offset = delay_offset;
  if (cfg.contains("n_bar")) spec.n_bar = cfg["n_bar"].get<int>();
  if (cfg.contains("lanes_max")) spec.lanes_max = cfg["lanes_max"].get<int>();
  const SweepResult res = run_conjecture_sweep(spec);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", res.max_epsilon);
  std::cout << "instances: " << spec.instances << ", optimum above 1e-7: "
            << res.violations << ", max epsilon: " << buf << "\n";
  std::filesystem::create_directories(out_dir);
  nlohmann::json out;
  out["instances"] = spec.instances;
  out["violations"] = res.violations;
  out["max_epsilon"] = res.max_epsilon;
  out["counterexamples"] = res.counterexamples;
  write_file(out_dir + "/sweep.json", out.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coalition-stable multi-lane queue assignment"};
  std::string mode;
  std::uint64_t seed = 1;
  int reps = -1;
  std::string out_dir = ".";
  std::string config_path;
  std::string instance_path;
  bool dump_lp = false;
  bool delay_offset = false;

  app.add_option("--mode", mode,
                 "vertical_table1 | dynamic_table2 | solve_instance | analyze_pfg | "
                 "conjecture_sweep")
      ->required();
  app.add_option("--seed", seed, "master seed");
  app.add_option("--reps", reps,
                 "replications per cell (table1, default 250), runs per cell "
                 "(table2, default 6) or instances (sweep, default 1000)");
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--instance", instance_path, "JSON instance file");
  app.add_flag("--dump-lp", dump_lp, "write the constraint program as JSON");
  app.add_flag("--delay-offset", delay_offset, "count delay as queue length minus one");

  CLI11_PARSE(app, argc, argv);

  try {
    const nlohmann::json cfg = load_config(config_path);
    if (mode == "vertical_table1")
      return mode_table1(seed, reps < 0 ? 250 : reps, delay_offset, cfg, out_dir);
    if (mode == "dynamic_table2")
      return mode_table2(seed, reps < 0 ? 6 : reps, cfg, out_dir);
    if (mode == "solve_instance") {
      if (instance_path.empty())
        throw std::invalid_argument("solve_instance requires --instance");
      return mode_solve(instance_path, dump_lp, delay_offset, out_dir);
    }
    if (mode == "analyze_pfg") {
      if (instance_path.empty())
        throw std::invalid_argument("analyze_pfg requires --instance");
      return mode_analyze(instance_path, delay_offset, out_dir);
    }
    if (mode == "conjecture_sweep")
      return mode_sweep(seed, reps < 0 ? 1000 : reps, delay_offset, cfg, out_dir);
    throw std::invalid_argument("unknown mode: " + mode);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

// Compares the parallel game construction against the serial reference on a
// batch of sampled instances, then times the exact solver on the results.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "CLI11.hpp"
#include "coopq/epsilon_core.hpp"
#include "coopq/pfg.hpp"
#include "coopq/sampling.hpp"
#include "coopq/vertical.hpp"

using namespace coopq;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

int main(int argc, char** argv) {
  int instances = 32;
  int n_bar = 7;
  int lanes = 3;
  std::uint64_t seed = 1;

  CLI::App app{"game construction and solver benchmark"};
  app.add_option("--instances", instances, "batch size")->check(CLI::PositiveNumber);
  app.add_option("--n-bar", n_bar, "agent count upper bound")->check(CLI::Range(1, 9));
  app.add_option("--lanes", lanes, "lane count")->check(CLI::Range(1, 6));
  app.add_option("--seed", seed, "master seed");
  CLI11_PARSE(app, argc, argv);

  std::vector<VerticalInstance> batch;
  batch.reserve(static_cast<std::size_t>(instances));
  for (int i = 0; i < instances; ++i) {
    Rng rng(derive_seed(seed, 1, static_cast<std::uint64_t>(i)));
    batch.push_back(sample_vertical_instance(rng, n_bar, lanes));
  }

  double t0 = now_seconds();
  std::vector<PartitionFunctionGame> serial;
  serial.reserve(batch.size());
  for (const auto& inst : batch) serial.push_back(build_pfg_serial(inst));
  const double serial_secs = now_seconds() - t0;

  t0 = now_seconds();
  std::vector<PartitionFunctionGame> parallel;
  parallel.reserve(batch.size());
  for (const auto& inst : batch) parallel.push_back(build_pfg(inst));
  const double parallel_secs = now_seconds() - t0;

  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (int pi = 0; pi < serial[i].partition_count(); ++pi) {
      const auto& p = serial[i].partitions()[pi];
      for (int b = 0; b < p.block_count(); ++b)
        if (serial[i].value(pi, b) != parallel[i].value(pi, b)) {
          std::fprintf(stderr, "construction mismatch on instance %zu\n", i);
          return 1;
        }
    }
  }

  t0 = now_seconds();
  int nonzero = 0;
  double max_eps = 0.0;
  for (const auto& game : parallel) {
    const EpsilonSolution sol = solve_exact(build_program(game));
    if (sol.epsilon > 1e-9) ++nonzero;
    max_eps = std::max(max_eps, sol.epsilon);
  }
  const double solve_secs = now_seconds() - t0;

  std::printf("instances: %d (n_bar=%d, lanes=%d)\n", instances, n_bar, lanes);
  std::printf("construction, serial:   %8.1f ms total, %7.2f ms each\n", serial_secs * 1e3,
              serial_secs * 1e3 / instances);
  std::printf("construction, parallel: %8.1f ms total, %7.2f ms each, speedup %.2fx\n",
              parallel_secs * 1e3, parallel_secs * 1e3 / instances,
              parallel_secs > 0 ? serial_secs / parallel_secs : 0.0);
  std::printf("exact solver:           %8.1f ms total, %7.2f ms each\n", solve_secs * 1e3,
              solve_secs * 1e3 / instances);
  std::printf("nonzero optima: %d of %d, max %.3g\n", nonzero, instances, max_eps);
  return 0;
}

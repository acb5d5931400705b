// Deterministic random sampling. All draws go through engine words directly
// (no std distributions), so identical seeds give identical streams on any
// platform.
#pragma once

#include <cstdint>
#include <random>

#include "coopq/vertical.hpp"

namespace coopq {

// Child seed for (a, b) under a master seed; cells and replicates get
// independent reproducible streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t word() { return engine_(); }
  double uniform();                  // [0, 1)
  int uniform_int(int lo, int hi);   // inclusive, rejection-sampled
  bool bernoulli(double p);
  double normal();                   // Box-Muller, one draw per pair of words
  double lognormal(double mu, double sigma);

 private:
  std::mt19937_64 engine_;
};

// Value-of-time draw shared by both studies: lognormal(2.16, 0.7).
double sample_theta(Rng& rng);

// One study instance: n ~ U{1..n_bar} agents, thetas lognormal, lane queues
// from the chain Q_last ~ U{1..4}, Q_i ~ U{1..Q_{i+1}}, reordered
// non-increasing. Draw order: n, thetas, queues.
VerticalInstance sample_vertical_instance(Rng& rng, int n_bar, int lanes);

}  // namespace coopq

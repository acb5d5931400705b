#include "coopq/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace coopq {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = master;
  for (std::uint64_t v : {a, b}) {
    s += 0x9e3779b97f4a7c15ULL + v;
    s = (s ^ (s >> 30)) * 0xbf58476d1ce4e5b9ULL;
    s = (s ^ (s >> 27)) * 0x94d049bb133111ebULL;
    s ^= s >> 31;
  }
  return s;
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

int Rng::uniform_int(int lo, int hi) {
  if (lo > hi) throw std::invalid_argument("empty range");
  const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
  const std::uint64_t zone =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % span;
  for (;;) {
    const std::uint64_t u = engine_();
    if (u < zone) return lo + static_cast<int>(u % span);
  }
}

bool Rng::bernoulli(double p) { return uniform() < p; }

double Rng::normal() {
  // (0,1] keeps the log finite.
  const double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::lognormal(double mu, double sigma) {
  return std::exp(mu + sigma * normal());
}

double sample_theta(Rng& rng) { return rng.lognormal(2.16, 0.7); }

VerticalInstance sample_vertical_instance(Rng& rng, int n_bar, int lanes) {
  if (n_bar < 1 || lanes < 1) throw std::invalid_argument("bad sampling bounds");
  VerticalInstance inst;
  const int n = rng.uniform_int(1, n_bar);
  inst.thetas.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) inst.thetas.push_back(sample_theta(rng));
  inst.initial_queues.resize(static_cast<std::size_t>(lanes));
  inst.initial_queues[lanes - 1] = rng.uniform_int(1, 4);
  for (int m = lanes - 2; m >= 0; --m)
    inst.initial_queues[m] = rng.uniform_int(1, inst.initial_queues[m + 1]);
  std::sort(inst.initial_queues.begin(), inst.initial_queues.end(), std::greater<>());
  inst.validate();
  return inst;
}

}  // namespace coopq

#include "coopq/vertical.hpp"

#include <stdexcept>

#ifdef COOPQ_HAVE_OPENMP
#include <omp.h>
#endif

namespace coopq {

void VerticalInstance::validate() const {
  if (n() < 1 || n() > kMaxAgents)
    throw std::out_of_range("instance must have between 1 and " +
                            std::to_string(kMaxAgents) + " agents");
  if (lanes() < 1 || lanes() > 4)
    throw std::invalid_argument("instance must have between 1 and 4 lanes");
  for (double t : thetas)
    if (!(t > 0.0)) throw std::invalid_argument("thetas must be positive");
  for (std::size_t m = 0; m < initial_queues.size(); ++m) {
    if (initial_queues[m] < 0)
      throw std::invalid_argument("queue lengths must be non-negative");
    if (m > 0 && initial_queues[m] > initial_queues[m - 1])
      throw std::invalid_argument("queue lengths must be non-increasing per lane");
  }
}

int delay(const VerticalInstance& inst, const LaneCountState& state, int lane) {
  if (lane < 0 || lane >= inst.lanes())
    throw std::out_of_range("lane index out of range");
  if (static_cast<int>(state.counts.size()) != inst.lanes())
    throw std::invalid_argument("state has wrong lane count");
  return inst.initial_queues[lane] + state.counts[lane] - (inst.delay_offset ? 1 : 0);
}

namespace {

// Dense mixed-radix index for a lane-count vector; each count <= n.
struct CountIndexer {
  int lanes, base;
  explicit CountIndexer(int n, int lanes) : lanes(lanes), base(n + 1) {}
  std::size_t size() const {
    std::size_t s = 1;
    for (int m = 0; m < lanes; ++m) s *= static_cast<std::size_t>(base);
    return s;
  }
  std::size_t operator()(const std::vector<int>& counts) const {
    std::size_t idx = 0;
    for (int m = 0; m < lanes; ++m) idx = idx * base + counts[m];
    return idx;
  }
};

void for_each_count_vector(int total, int lanes, std::vector<int>& counts,
                           const auto& fn, int lane = 0) {
  if (lane == lanes - 1) {
    counts[lane] = total;
    fn();
    return;
  }
  for (int c = 0; c <= total; ++c) {
    counts[lane] = c;
    for_each_count_vector(total - c, lanes, counts, fn, lane + 1);
  }
}

}  // namespace

StackelbergResult solve_stackelberg(const VerticalInstance& inst, const Partition& p) {
  inst.validate();
  if (p.n() != inst.n()) throw std::invalid_argument("partition size mismatch");

  const int n = inst.n();
  const int l = inst.lanes();
  const int nblocks = p.block_count();
  const CountIndexer indexer(n, l);

  // Value vectors (one double per block) per state, plus the chosen lane.
  // Level i holds every counts vector summing to i.
  std::vector<std::vector<double>> next_values, cur_values;
  std::vector<std::vector<std::uint8_t>> choices(static_cast<std::size_t>(n));
  next_values.assign(indexer.size(), {});
  cur_values.assign(indexer.size(), {});

  StackelbergResult result;
  std::vector<int> counts(static_cast<std::size_t>(l), 0);

  for (int level = n - 1; level >= 0; --level) {
    choices[level].assign(indexer.size(), 0);
    const int block = p.block_of(level);
    const double theta = inst.thetas[level];
    for_each_count_vector(level, l, counts, [&] {
      const std::size_t idx = indexer(counts);
      double best_total = -std::numeric_limits<double>::infinity();
      int best_lane = 0;
      for (int m = 0; m < l; ++m) {
        const int d = inst.initial_queues[m] + counts[m] - (inst.delay_offset ? 1 : 0);
        double total = -theta * d;
        if (level + 1 < n) {
          counts[m] += 1;
          total += next_values[indexer(counts)][block];
          counts[m] -= 1;
        }
        if (total > best_total) {
          best_total = total;
          best_lane = m;
        }
      }
      choices[level][idx] = static_cast<std::uint8_t>(best_lane);
      std::vector<double> vec;
      if (level + 1 < n) {
        counts[best_lane] += 1;
        vec = next_values[indexer(counts)];
        counts[best_lane] -= 1;
      } else {
        vec.assign(static_cast<std::size_t>(nblocks), 0.0);
      }
      const int d = inst.initial_queues[best_lane] + counts[best_lane] -
                    (inst.delay_offset ? 1 : 0);
      vec[block] += -theta * d;
      cur_values[idx] = std::move(vec);
      result.dp_states += 1;
    });
    std::swap(cur_values, next_values);
  }

  // Forward replay of the argmax choices.
  std::fill(counts.begin(), counts.end(), 0);
  result.assignment.resize(static_cast<std::size_t>(n));
  for (int level = 0; level < n; ++level) {
    const int lane = choices[level][indexer(counts)];
    result.assignment[level] = lane;
    counts[lane] += 1;
  }
  result.block_values = next_values[indexer(std::vector<int>(static_cast<std::size_t>(l), 0))];
  return result;
}

FcfsResult fcfs_baseline(const VerticalInstance& inst) {
  inst.validate();
  FcfsResult r;
  std::vector<int> counts(static_cast<std::size_t>(inst.lanes()), 0);
  for (int i = 0; i < inst.n(); ++i) {
    int best_lane = 0;
    int best_d = std::numeric_limits<int>::max();
    for (int m = 0; m < inst.lanes(); ++m) {
      const int d = inst.initial_queues[m] + counts[m];
      if (d < best_d) {
        best_d = d;
        best_lane = m;
      }
    }
    r.assignment.push_back(best_lane);
    r.values.push_back(-inst.thetas[i] * (best_d - (inst.delay_offset ? 1 : 0)));
    counts[best_lane] += 1;
  }
  return r;
}

namespace {

PartitionFunctionGame build_pfg_impl(const VerticalInstance& inst, bool parallel) {
  inst.validate();
  PartitionFunctionGame game(inst.n());
  const int pcount = game.partition_count();

#ifdef COOPQ_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
  for (int pi = 0; pi < pcount; ++pi) {
    const StackelbergResult r = solve_stackelberg(inst, game.partitions()[pi]);
    for (int b = 0; b < game.partitions()[pi].block_count(); ++b)
      game.set_value(pi, b, r.block_values[b]);
  }
  (void)parallel;
  return game;
}

}  // namespace

PartitionFunctionGame build_pfg(const VerticalInstance& inst) {
  return build_pfg_impl(inst, true);
}

PartitionFunctionGame build_pfg_serial(const VerticalInstance& inst) {
  return build_pfg_impl(inst, false);
}

}  // namespace coopq

// Sequential lane-choice game over initial queues, solved by backward
// recursion per coalition structure.
#pragma once

#include <cstddef>
#include <vector>

#include "coopq/partitions.hpp"
#include "coopq/pfg.hpp"

namespace coopq {

// Agents indexed by arrival order: agent 0 chooses first. Lanes indexed
// 0..lanes-1 with non-increasing initial queue lengths.
struct VerticalInstance {
  std::vector<double> thetas;      // delay cost per unit, > 0
  std::vector<int> initial_queues; // one per lane, non-increasing, >= 0
  bool delay_offset = false;       // subtract 1 from every delay

  int n() const { return static_cast<int>(thetas.size()); }
  int lanes() const { return static_cast<int>(initial_queues.size()); }

  // Throws std::invalid_argument / std::out_of_range on contract violations:
  // 1 <= n <= kMaxAgents, 1 <= lanes <= 4, thetas > 0, queues >= 0 and
  // non-increasing.
  void validate() const;
};

// Position in the game: `level` agents have already chosen, counts[m] of
// them joined lane m (sum(counts) == level).
struct LaneCountState {
  int level = 0;
  std::vector<int> counts;
};

// Delay experienced by the agent acting at `state` if it joins `lane`:
// initial queue plus prior joiners, minus 1 when the offset flag is set.
int delay(const VerticalInstance& inst, const LaneCountState& state, int lane);

struct StackelbergResult {
  std::vector<double> block_values; // realized value per partition block
  std::vector<int> assignment;      // realized lane per agent
  std::size_t dp_states = 0;        // memo entries allocated across levels
};

// Backward recursion over (level, lane counts). Each agent picks the lane
// maximizing its own valuation plus its block's continuation value, ties
// going to the lowest lane index. Valuations are -theta_i * delay.
StackelbergResult solve_stackelberg(const VerticalInstance& inst, const Partition& p);

struct FcfsResult {
  std::vector<int> assignment;
  std::vector<double> values; // per-agent valuation under the greedy play
};

// Greedy shortest-effective-queue play; coincides with the all-singleton
// partition recursion.
FcfsResult fcfs_baseline(const VerticalInstance& inst);

// Coalition values for every partition of the agents, canonical order.
PartitionFunctionGame build_pfg(const VerticalInstance& inst);        // parallel
PartitionFunctionGame build_pfg_serial(const VerticalInstance& inst); // reference

}  // namespace coopq

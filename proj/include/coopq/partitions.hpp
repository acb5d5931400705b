// Coalitions as bitmasks and set partitions in restricted-growth-string order.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace coopq {

// Hard cap on the number of agents; keeps coalition masks in 16 bits and
// partition counts (Bell numbers) small enough for exhaustive enumeration.
inline constexpr int kMaxAgents = 10;

using AgentMask = std::uint16_t;

// A set of agents, agent i stored in bit i.
struct Coalition {
  AgentMask bits = 0;

  int size() const;
  bool empty() const { return bits == 0; }
  bool contains(int agent) const { return (bits >> agent) & 1u; }
  std::vector<int> members() const;

  static Coalition of(const std::vector<int>& agents);

  friend bool operator==(const Coalition&, const Coalition&) = default;
  auto operator<=>(const Coalition&) const = default;
};

Coalition full_coalition(int n);

// A partition of {0, ..., n-1}.
//
// rgs is the restricted growth string: rgs[i] is the block id of agent i,
// rgs[0] == 0 and rgs[i+1] <= max(rgs[0..i]) + 1. Blocks are kept in rgs id
// order, which coincides with ordering blocks by smallest member.
struct Partition {
  std::vector<std::uint8_t> rgs;
  std::vector<Coalition> blocks;

  int n() const { return static_cast<int>(rgs.size()); }
  int block_count() const { return static_cast<int>(blocks.size()); }
  int block_of(int agent) const { return rgs.at(agent); }
  bool is_singletons() const { return block_count() == n(); }
  bool is_grand() const { return block_count() == 1; }

  // Index of the block equal to c, or -1.
  int find_block(const Coalition& c) const;

  static Partition from_rgs(std::vector<std::uint8_t> rgs);
  // Blocks in any order; must cover {0..n-1} exactly once.
  static Partition from_blocks(int n, const std::vector<Coalition>& blocks);

  friend bool operator==(const Partition& a, const Partition& b) { return a.rgs == b.rgs; }
};

// All partitions of {0..n-1} in ascending restricted-growth-string
// lexicographic order. First entry is the grand partition, last the
// all-singleton one. Throws std::out_of_range unless 1 <= n <= kMaxAgents.
std::vector<Partition> enumerate_partitions(int n);

// All 2^n - 1 non-empty coalitions, ordered by ascending bitmask value.
std::vector<Coalition> enumerate_coalitions(int n);

Partition singleton_partition(int n);
Partition grand_partition(int n);

std::uint64_t bell_number(int n);

std::string to_string(const Coalition& c);
std::string to_string(const Partition& p);

}  // namespace coopq

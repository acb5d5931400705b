#include "coopq/partitions.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace coopq {

namespace {

void check_agent_count(int n) {
  if (n < 1 || n > kMaxAgents)
    throw std::out_of_range("agent count must be in [1, " + std::to_string(kMaxAgents) +
                            "], got " + std::to_string(n));
}

}  // namespace

int Coalition::size() const { return std::popcount(bits); }

std::vector<int> Coalition::members() const {
  std::vector<int> out;
  for (int i = 0; i < kMaxAgents; ++i)
    if (contains(i)) out.push_back(i);
  return out;
}

Coalition Coalition::of(const std::vector<int>& agents) {
  Coalition c;
  for (int a : agents) {
    if (a < 0 || a >= kMaxAgents) throw std::out_of_range("agent index out of range");
    c.bits |= static_cast<AgentMask>(1u << a);
  }
  return c;
}

Coalition full_coalition(int n) {
  check_agent_count(n);
  return Coalition{static_cast<AgentMask>((1u << n) - 1u)};
}

int Partition::find_block(const Coalition& c) const {
  for (int b = 0; b < block_count(); ++b)
    if (blocks[b] == c) return b;
  return -1;
}

Partition Partition::from_rgs(std::vector<std::uint8_t> rgs) {
  const int n = static_cast<int>(rgs.size());
  check_agent_count(n);
  Partition p;
  p.rgs = std::move(rgs);
  int max_seen = -1;
  for (int i = 0; i < n; ++i) {
    const int b = p.rgs[i];
    if (b > max_seen + 1)
      throw std::invalid_argument("not a restricted growth string");
    if (b == max_seen + 1) {
      p.blocks.emplace_back();
      max_seen = b;
    }
    p.blocks[b].bits |= static_cast<AgentMask>(1u << i);
  }
  return p;
}

Partition Partition::from_blocks(int n, const std::vector<Coalition>& blocks) {
  check_agent_count(n);
  std::vector<std::uint8_t> rgs(static_cast<std::size_t>(n), 255);
  AgentMask seen = 0;
  for (const Coalition& b : blocks) {
    if (b.empty()) throw std::invalid_argument("empty block");
    if (b.bits & seen) throw std::invalid_argument("blocks overlap");
    seen |= b.bits;
  }
  if (seen != full_coalition(n).bits)
    throw std::invalid_argument("blocks do not cover all agents");
  // Renumber blocks by smallest member to recover the canonical string.
  std::vector<Coalition> sorted = blocks;
  std::sort(sorted.begin(), sorted.end(),
            [](const Coalition& a, const Coalition& b) {
              return std::countr_zero(a.bits) < std::countr_zero(b.bits);
            });
  for (std::size_t id = 0; id < sorted.size(); ++id)
    for (int a : sorted[id].members()) rgs[a] = static_cast<std::uint8_t>(id);
  return from_rgs(std::move(rgs));
}

std::vector<Partition> enumerate_partitions(int n) {
  check_agent_count(n);
  std::vector<Partition> out;
  out.reserve(bell_number(n));
  std::vector<std::uint8_t> rgs(static_cast<std::size_t>(n), 0);
  // Depth-first generation in ascending lexicographic order: at position i
  // the digit runs from 0 to (max of the prefix) + 1.
  auto rec = [&](auto&& self, int i, int max_used) -> void {
    if (i == n) {
      out.push_back(Partition::from_rgs(rgs));
      return;
    }
    for (int d = 0; d <= max_used + 1; ++d) {
      rgs[i] = static_cast<std::uint8_t>(d);
      self(self, i + 1, std::max(max_used, d));
    }
  };
  rgs[0] = 0;
  rec(rec, 1, 0);
  return out;
}

std::vector<Coalition> enumerate_coalitions(int n) {
  check_agent_count(n);
  std::vector<Coalition> out;
  out.reserve((1u << n) - 1u);
  for (AgentMask m = 1; m < (1u << n); ++m) out.push_back(Coalition{m});
  return out;
}

Partition singleton_partition(int n) {
  check_agent_count(n);
  std::vector<std::uint8_t> rgs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) rgs[i] = static_cast<std::uint8_t>(i);
  return Partition::from_rgs(std::move(rgs));
}

Partition grand_partition(int n) {
  check_agent_count(n);
  return Partition::from_rgs(std::vector<std::uint8_t>(static_cast<std::size_t>(n), 0));
}

std::uint64_t bell_number(int n) {
  check_agent_count(n);
  // Bell triangle.
  std::vector<std::uint64_t> row{1};
  for (int i = 1; i < n; ++i) {
    std::vector<std::uint64_t> next;
    next.reserve(row.size() + 1);
    next.push_back(row.back());
    for (std::uint64_t v : row) next.push_back(next.back() + v);
    row = std::move(next);
  }
  return row.back();
}

std::string to_string(const Coalition& c) {
  std::string s = "{";
  bool first = true;
  for (int a : c.members()) {
    if (!first) s += ",";
    s += std::to_string(a + 1);  // 1-based in human-readable output
    first = false;
  }
  return s + "}";
}

std::string to_string(const Partition& p) {
  std::string s = "{";
  for (int b = 0; b < p.block_count(); ++b) {
    if (b) s += ", ";
    s += to_string(p.blocks[b]);
  }
  return s + "}";
}

}  // namespace coopq

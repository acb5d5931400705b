#include "coopq/pfg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace coopq {

namespace {

std::string rgs_key(const Partition& p) {
  return std::string(p.rgs.begin(), p.rgs.end());
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

PartitionFunctionGame::PartitionFunctionGame(int n)
    : n_(n), partitions_(enumerate_partitions(n)) {
  values_.resize(partitions_.size());
  for (std::size_t p = 0; p < partitions_.size(); ++p)
    values_[p].assign(partitions_[p].blocks.size(),
                      std::numeric_limits<double>::quiet_NaN());
  index_.reserve(partitions_.size());
  for (std::size_t p = 0; p < partitions_.size(); ++p)
    index_.emplace(rgs_key(partitions_[p]), static_cast<int>(p));
}

int PartitionFunctionGame::partition_index(const Partition& p) const {
  auto it = index_.find(rgs_key(p));
  if (it == index_.end()) throw std::invalid_argument("unknown partition");
  return it->second;
}

void PartitionFunctionGame::set_value(int partition, int block, double v) {
  values_.at(partition).at(block) = v;
}

double PartitionFunctionGame::value(int partition, int block) const {
  const double v = values_.at(partition).at(block);
  if (std::isnan(v)) throw std::invalid_argument("partition function entry not set");
  return v;
}

double PartitionFunctionGame::value(const Coalition& c, const Partition& p) const {
  const int pi = partition_index(p);
  const int b = partitions_[pi].find_block(c);
  if (b < 0)
    throw std::invalid_argument("coalition " + to_string(c) +
                                " is not a block of " + to_string(p));
  return value(pi, b);
}

double PartitionFunctionGame::grand_value() const { return value(grand_index(), 0); }

bool PartitionFunctionGame::complete() const {
  for (const auto& row : values_)
    for (double v : row)
      if (std::isnan(v)) return false;
  return true;
}

void PartitionFunctionGame::require_complete() const {
  if (!complete())
    throw std::invalid_argument("partition function game has unset entries");
}

std::size_t PartitionFunctionGame::entry_count() const {
  std::size_t c = 0;
  for (const auto& row : values_) c += row.size();
  return c;
}

namespace {

// Builds the full partition {fixed blocks} cup rho and validates that rho
// partitions exactly the leftover agents.
Partition embed(int n, std::vector<Coalition> fixed, const std::vector<Coalition>& rho,
                AgentMask leftover) {
  AgentMask seen = 0;
  for (const Coalition& r : rho) {
    if (r.empty()) throw std::invalid_argument("rho has an empty block");
    if (r.bits & ~leftover || r.bits & seen)
      throw std::invalid_argument("rho must partition the remaining agents");
    seen |= r.bits;
    fixed.push_back(r);
  }
  if (seen != leftover)
    throw std::invalid_argument("rho must cover the remaining agents");
  return Partition::from_blocks(n, fixed);
}

}  // namespace

double classify_externality(const PartitionFunctionGame& game, const Coalition& c,
                            const Coalition& s, const Coalition& t,
                            const std::vector<Coalition>& rho) {
  if (c.empty() || s.empty() || t.empty())
    throw std::invalid_argument("c, s, t must be non-empty");
  if ((c.bits & s.bits) || (c.bits & t.bits) || (s.bits & t.bits))
    throw std::invalid_argument("c, s, t must be pairwise disjoint");
  const AgentMask all = full_coalition(game.n()).bits;
  const AgentMask leftover =
      static_cast<AgentMask>(all & ~(c.bits | s.bits | t.bits));
  const Partition merged =
      embed(game.n(), {Coalition{static_cast<AgentMask>(s.bits | t.bits)}, c}, rho, leftover);
  const Partition split = embed(game.n(), {s, t, c}, rho, leftover);
  return game.value(c, merged) - game.value(c, split);
}

namespace {

// Enumerates partitions of the agents inside `mask`, as blocks.
void for_each_sub_partition(AgentMask mask,
                            const std::function<void(const std::vector<Coalition>&)>& fn) {
  std::vector<int> agents = Coalition{mask}.members();
  const int k = static_cast<int>(agents.size());
  if (k == 0) {
    fn({});
    return;
  }
  std::vector<std::uint8_t> rgs(static_cast<std::size_t>(k), 0);
  auto rec = [&](auto&& self, int i, int max_used) -> void {
    if (i == k) {
      int nblocks = max_used + 1;
      std::vector<Coalition> blocks(static_cast<std::size_t>(nblocks));
      for (int j = 0; j < k; ++j)
        blocks[rgs[j]].bits |= static_cast<AgentMask>(1u << agents[j]);
      fn(blocks);
      return;
    }
    for (int d = 0; d <= max_used + 1; ++d) {
      rgs[i] = static_cast<std::uint8_t>(d);
      self(self, i + 1, std::max(max_used, d));
    }
  };
  rec(rec, 1, 0);
}

}  // namespace

std::vector<SuperadditivityViolation> check_superadditivity(const PartitionFunctionGame& game,
                                                            double tol) {
  game.require_complete();
  const int n = game.n();
  std::vector<SuperadditivityViolation> out;
  if (n < 2) return out;
  const AgentMask all = full_coalition(n).bits;
  // Unordered disjoint pairs (s, t): iterate s over coalitions, t over
  // coalitions of the complement with t's lowest agent above s's to avoid
  // the mirrored pair.
  for (AgentMask sb = 1; sb < (1u << n); ++sb) {
    for (AgentMask tb = 1; tb < (1u << n); ++tb) {
      if ((sb & tb) || tb < sb) continue;
      const AgentMask leftover = static_cast<AgentMask>(all & ~(sb | tb));
      for_each_sub_partition(leftover, [&](const std::vector<Coalition>& rho) {
        std::vector<Coalition> merged_blocks{Coalition{static_cast<AgentMask>(sb | tb)}};
        std::vector<Coalition> split_blocks{Coalition{sb}, Coalition{tb}};
        for (const Coalition& r : rho) {
          merged_blocks.push_back(r);
          split_blocks.push_back(r);
        }
        const Partition merged = Partition::from_blocks(n, merged_blocks);
        const Partition split = Partition::from_blocks(n, split_blocks);
        const double vm = game.value(Coalition{static_cast<AgentMask>(sb | tb)}, merged);
        const double vs = game.value(Coalition{sb}, split);
        const double vt = game.value(Coalition{tb}, split);
        if (vm < vs + vt - tol)
          out.push_back({Coalition{sb}, Coalition{tb}, rho, vm, vs + vt});
      });
    }
  }
  return out;
}

ExternalitySummary classify_all_externalities(const PartitionFunctionGame& game,
                                              double tol, std::size_t witness_cap) {
  game.require_complete();
  const int n = game.n();
  if (n > 6)
    throw std::invalid_argument("exhaustive externality classification capped at 6 agents");
  ExternalitySummary summary;
  if (n < 3) return summary;
  const AgentMask all = full_coalition(n).bits;
  for (AgentMask cb = 1; cb < (1u << n); ++cb) {
    for (AgentMask sb = 1; sb < (1u << n); ++sb) {
      if (sb & cb) continue;
      for (AgentMask tb = 1; tb < (1u << n); ++tb) {
        if ((tb & cb) || (tb & sb) || tb < sb) continue;
        const AgentMask leftover = static_cast<AgentMask>(all & ~(cb | sb | tb));
        for_each_sub_partition(leftover, [&](const std::vector<Coalition>& rho) {
          const double delta =
              classify_externality(game, Coalition{cb}, Coalition{sb}, Coalition{tb}, rho);
          if (delta > tol) {
            summary.positive += 1;
          } else if (delta < -tol) {
            summary.negative += 1;
            if (summary.negative_witnesses.size() < witness_cap)
              summary.negative_witnesses.push_back(
                  {Coalition{cb}, Coalition{sb}, Coalition{tb}, rho, delta});
          } else {
            summary.zero += 1;
          }
        });
      }
    }
  }
  return summary;
}

namespace {

// Characteristic function w over coalitions, then the Shapley combination
// with weights (|S|-1)!(n-|S|)!/n! for S containing i and
// -|S|!(n-|S|-1)!/n! otherwise.
std::vector<double> shapley_of_embedding(const PartitionFunctionGame& game,
                                         const std::function<double(const Coalition&)>& w) {
  const int n = game.n();
  const double nfact = factorial(n);
  std::vector<double> phi(static_cast<std::size_t>(n), 0.0);
  for (AgentMask sb = 1; sb < (1u << n); ++sb) {
    const Coalition s{sb};
    const int size = s.size();
    const double ws = w(s);
    const double in_weight = factorial(size - 1) * factorial(n - size) / nfact;
    const double out_weight = factorial(size) * factorial(n - size - 1) / nfact;
    for (int i = 0; i < n; ++i) {
      if (s.contains(i))
        phi[i] += in_weight * ws;
      else
        phi[i] -= out_weight * ws;
    }
  }
  return phi;
}

}  // namespace

std::vector<double> externality_free_value(const PartitionFunctionGame& game) {
  game.require_complete();
  const int n = game.n();
  return shapley_of_embedding(game, [&](const Coalition& s) {
    std::vector<Coalition> blocks{s};
    for (int i = 0; i < n; ++i)
      if (!s.contains(i)) blocks.push_back(Coalition::of({i}));
    return game.value(s, Partition::from_blocks(n, blocks));
  });
}

std::vector<double> mcquillin_value(const PartitionFunctionGame& game) {
  game.require_complete();
  const int n = game.n();
  const AgentMask all = full_coalition(n).bits;
  return shapley_of_embedding(game, [&](const Coalition& s) {
    std::vector<Coalition> blocks{s};
    const AgentMask rest = static_cast<AgentMask>(all & ~s.bits);
    if (rest) blocks.push_back(Coalition{rest});
    return game.value(s, Partition::from_blocks(n, blocks));
  });
}

CoreMembership is_in_strong_core(const PartitionFunctionGame& game,
                                 const std::vector<double>& x, double tol,
                                 double efficiency_tol) {
  game.require_complete();
  const int n = game.n();
  if (static_cast<int>(x.size()) != n)
    throw std::invalid_argument("imputation size mismatch");
  double total = 0.0;
  for (double v : x) total += v;
  if (std::abs(total - game.grand_value()) > efficiency_tol)
    throw std::invalid_argument("imputation is not efficient");

  CoreMembership result;
  result.in_core = true;
  const auto& partitions = game.partitions();
  for (int pi = 0; pi < game.partition_count(); ++pi) {
    const Partition& p = partitions[pi];
    if (p.is_grand() && n > 1) continue; // covered by efficiency
    if (p.is_singletons()) {
      // Individual rationality against the all-singleton partition.
      bool ok = true;
      for (int i = 0; i < n; ++i)
        if (x[i] < game.value(pi, p.block_of(i)) - tol) ok = false;
      if (!ok) {
        result.in_core = false;
        result.blocking_partitions.push_back(pi);
      }
      continue;
    }
    bool satisfied = false;
    for (int b = 0; b < p.block_count() && !satisfied; ++b) {
      if (p.blocks[b].size() < 2) continue;
      double sum = 0.0;
      for (int i : p.blocks[b].members()) sum += x[i];
      if (sum >= game.value(pi, b) - tol) satisfied = true;
    }
    if (!satisfied) {
      result.in_core = false;
      result.blocking_partitions.push_back(pi);
    }
  }
  return result;
}

CoreMembership is_fully_group_rational(const PartitionFunctionGame& game,
                                       const std::vector<double>& x, double tol,
                                       double efficiency_tol) {
  game.require_complete();
  const int n = game.n();
  if (static_cast<int>(x.size()) != n)
    throw std::invalid_argument("imputation size mismatch");
  double total = 0.0;
  for (double v : x) total += v;
  if (std::abs(total - game.grand_value()) > efficiency_tol)
    throw std::invalid_argument("imputation is not efficient");

  CoreMembership result;
  result.in_core = true;
  const auto& partitions = game.partitions();
  for (int pi = 0; pi < game.partition_count(); ++pi) {
    const Partition& p = partitions[pi];
    if (p.is_grand() && n > 1) continue; // covered by efficiency
    bool ok = true;
    for (int b = 0; b < p.block_count(); ++b) {
      if (p.blocks[b].size() < 2 && !p.is_singletons()) continue;
      double sum = 0.0;
      for (int i : p.blocks[b].members()) sum += x[i];
      if (sum < game.value(pi, b) - tol) ok = false;
    }
    if (!ok) {
      result.in_core = false;
      result.blocking_partitions.push_back(pi);
    }
  }
  return result;
}

}  // namespace coopq

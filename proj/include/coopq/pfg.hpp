// Partition function games: per-partition coalition worths, solution
// concepts (externality-free and McQuillin values), externality and
// superadditivity diagnostics, strong-core membership.
#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "coopq/partitions.hpp"

namespace coopq {

// Worth of every block of every partition of {0..n-1}. Partitions are the
// canonical enumeration; values_[p][b] follows the block order of
// partitions()[p].
class PartitionFunctionGame {
 public:
  explicit PartitionFunctionGame(int n);

  int n() const { return n_; }
  const std::vector<Partition>& partitions() const { return partitions_; }
  int partition_count() const { return static_cast<int>(partitions_.size()); }

  int partition_index(const Partition& p) const; // throws if absent
  int grand_index() const { return 0; }          // first in canonical order
  int singleton_index() const { return partition_count() - 1; }

  void set_value(int partition, int block, double v);
  double value(int partition, int block) const;
  // Worth of coalition c embedded in partition p; throws std::invalid_argument
  // if c is not a block of p or the entry was never set.
  double value(const Coalition& c, const Partition& p) const;
  double grand_value() const; // v(N, {N})

  // True once every block of every partition has a value.
  bool complete() const;
  void require_complete() const; // throws std::invalid_argument if not

  std::size_t entry_count() const;

 private:
  int n_;
  std::vector<Partition> partitions_;
  std::vector<std::vector<double>> values_;
  std::unordered_map<std::string, int> index_;
};

// rho partitions the agents outside c, s and t (may be empty).
// Returns v(c; {s cup t, c} cup rho) - v(c; {s, t, c} cup rho): negative
// when the merge of s and t hurts c.
double classify_externality(const PartitionFunctionGame& game, const Coalition& c,
                            const Coalition& s, const Coalition& t,
                            const std::vector<Coalition>& rho);

struct SuperadditivityViolation {
  Coalition s, t;
  std::vector<Coalition> rho;
  double merged;    // v(s cup t; {s cup t} cup rho)
  double split_sum; // v(s; {s,t} cup rho) + v(t; {s,t} cup rho)
};

// All (s, t, rho) with v(s cup t) < v(s) + v(t) - tol under matching
// embeddings. Empty result means the game is superadditive.
std::vector<SuperadditivityViolation> check_superadditivity(const PartitionFunctionGame& game,
                                                            double tol = 1e-9);

struct ExternalityWitness {
  Coalition c, s, t;
  std::vector<Coalition> rho;
  double delta;
};

struct ExternalitySummary {
  long long positive = 0, negative = 0, zero = 0;
  std::vector<ExternalityWitness> negative_witnesses; // capped
};

// Exhaustive classification over all admissible (c, s, t, rho); n <= 6.
ExternalitySummary classify_all_externalities(const PartitionFunctionGame& game,
                                              double tol = 1e-9,
                                              std::size_t witness_cap = 8);

// Shapley-style value over the embedding where the complement of each
// coalition is split into singletons.
std::vector<double> externality_free_value(const PartitionFunctionGame& game);
// Same weights over the embedding {S, N \ S}.
std::vector<double> mcquillin_value(const PartitionFunctionGame& game);

struct CoreMembership {
  bool in_core = false;
  // Indices of partitions with no weakly satisfied non-singleton block, plus
  // the singleton partition when individual rationality fails.
  std::vector<int> blocking_partitions;
};

// Strong-core membership of an efficient imputation x. Pre: |sum(x) - v(N,{N})|
// <= efficiency_tol (throws otherwise). Block satisfaction tested at `tol`.
CoreMembership is_in_strong_core(const PartitionFunctionGame& game,
                                 const std::vector<double>& x, double tol = 1e-9,
                                 double efficiency_tol = 1e-6);

// Stricter test: every non-singleton block of every partition must be weakly
// satisfied (not just one per partition), plus singleton individual
// rationality. The inclusion-rate experiment uses this notion.
// is_fully_group_rational(x) implies is_in_strong_core(x), not conversely.
CoreMembership is_fully_group_rational(const PartitionFunctionGame& game,
                                       const std::vector<double>& x, double tol = 1e-9,
                                       double efficiency_tol = 1e-6);

}  // namespace coopq

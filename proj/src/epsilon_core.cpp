#include "coopq/epsilon_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "coopq/lp.hpp"

namespace coopq {

namespace {

constexpr double kEpsZero = 1e-12;   // below this the optimum counts as zero
constexpr double kTieTol = 1e-9;     // slack admitted when breaking selection ties
constexpr long kLpCap = 2'000'000;   // loud failure instead of a silent stall

}  // namespace

EpsilonProgram build_program(const PartitionFunctionGame& game) {
  game.require_complete();
  EpsilonProgram prog;
  prog.n = game.n();
  const auto& partitions = game.partitions();

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int pi = 0; pi < game.partition_count(); ++pi)
    for (int b = 0; b < partitions[pi].block_count(); ++b) {
      const double v = game.value(pi, b);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  prog.big_m = (hi - lo) + 1.0;

  for (int pi = 0; pi < game.partition_count(); ++pi) {
    const Partition& p = partitions[pi];
    if (p.is_grand() || p.is_singletons()) continue;
    EpsilonProgram::Group g;
    g.partition_index = pi;
    for (int b = 0; b < p.block_count(); ++b)
      if (p.blocks[b].size() >= 2) g.rows.push_back({p.blocks[b], game.value(pi, b)});
    prog.groups.push_back(std::move(g));
  }

  const int si = game.singleton_index();
  prog.ir_rhs.resize(static_cast<std::size_t>(prog.n));
  for (int i = 0; i < prog.n; ++i)
    prog.ir_rhs[i] = game.value(si, partitions[si].block_of(i));
  prog.efficiency_rhs = game.grand_value();
  prog.anchor = externality_free_value(game);
  return prog;
}

namespace {

double coalition_sum(const Coalition& c, const std::vector<double>& x) {
  double s = 0.0;
  for (int i : c.members()) s += x[i];
  return s;
}

// Incremental LP state for the search: base rows are shared, selected group
// rows appended per node. Variables are (x_0..x_{n-1}, eps).
struct NodeLp {
  const EpsilonProgram& prog;
  LinearProgram lp;
  EpsilonSolution::Stats* stats;

  explicit NodeLp(const EpsilonProgram& p, EpsilonSolution::Stats* stats)
      : prog(p), stats(stats) {
    const int n = p.n;
    lp.num_vars = n + 1;
    lp.objective.assign(static_cast<std::size_t>(n) + 1, 0.0);
    lp.objective[n] = 1.0;
    lp.add_row({{n, 1.0}}, 0.0); // eps >= 0
    std::vector<std::pair<int, double>> eff;
    for (int i = 0; i < n; ++i) eff.push_back({i, 1.0});
    lp.add_row(eff, p.efficiency_rhs);
    for (auto& [v, c] : eff) c = -1.0;
    lp.add_row(eff, -p.efficiency_rhs);
    for (int i = 0; i < n; ++i) lp.add_row({{i, 1.0}, {n, 1.0}}, p.ir_rhs[i]);
  }

  void push(const EpsilonProgram::Row& row) {
    std::vector<std::pair<int, double>> coeffs;
    for (int i : row.coalition.members()) coeffs.push_back({i, 1.0});
    coeffs.push_back({prog.n, 1.0});
    lp.add_row(std::move(coeffs), row.rhs);
  }
  void pop() { lp.rows.pop_back(); }

  // Minimal eps for the current rows; the program is always feasible.
  LpSolution solve() {
    if (++stats->lp_solves > kLpCap)
      throw SolverError("relaxation solve cap exceeded");
    LpSolution s = solve_lp(lp);
    if (s.status != LpStatus::Optimal)
      throw SolverError("relaxation unexpectedly infeasible or unbounded");
    return s;
  }
};

struct SearchContext {
  const EpsilonProgram& prog;
  NodeLp lp;
  // Indices into prog.groups of every group with >= 2 rows, canonical order.
  std::vector<int> multi;
  // Positions in `multi` to branch on, ordered by descending max row worth.
  std::vector<int> branch;
  // For each multi group: a row index known to be implied by the forced
  // single-row groups, or -1.
  std::vector<int> implied_row;
};

SearchContext make_context(const EpsilonProgram& prog, EpsilonSolution::Stats* stats_out) {
  SearchContext ctx{prog, NodeLp(prog, stats_out), {}, {}, {}};

  // Forced rows: groups with a single non-singleton block always hold.
  std::map<AgentMask, double> forced_rhs;
  for (const auto& g : prog.groups)
    if (g.rows.size() == 1) {
      ctx.lp.push(g.rows[0]);
      auto [it, fresh] = forced_rhs.emplace(g.rows[0].coalition.bits, g.rows[0].rhs);
      if (!fresh) it->second = std::max(it->second, g.rows[0].rhs);
    }

  for (int gi = 0; gi < static_cast<int>(prog.groups.size()); ++gi) {
    const auto& g = prog.groups[gi];
    if (g.rows.size() < 2) continue;
    ctx.multi.push_back(gi);
    int implied = -1;
    for (int j = 0; j < static_cast<int>(g.rows.size()) && implied < 0; ++j) {
      auto it = forced_rhs.find(g.rows[j].coalition.bits);
      if (it != forced_rhs.end() && g.rows[j].rhs <= it->second + kEpsZero) implied = j;
    }
    ctx.implied_row.push_back(implied);
  }

  for (int q = 0; q < static_cast<int>(ctx.multi.size()); ++q)
    if (ctx.implied_row[q] < 0) ctx.branch.push_back(q);
  std::sort(ctx.branch.begin(), ctx.branch.end(), [&](int a, int b) {
    auto worth = [&](int q) {
      double w = -std::numeric_limits<double>::infinity();
      for (const auto& r : prog.groups[ctx.multi[q]].rows) w = std::max(w, r.rhs);
      return w;
    };
    const double wa = worth(a), wb = worth(b);
    if (wa != wb) return wa > wb;
    return a < b;
  });
  return ctx;
}

struct Incumbent {
  double eps = std::numeric_limits<double>::infinity();
  std::vector<double> x;
  std::vector<int> rows; // row choice per ctx.branch position
};

// Depth-first exact search over branch-group row choices.
void dfs(SearchContext& ctx, std::size_t depth, std::vector<int>& chosen,
         Incumbent& best, EpsilonSolution::Stats& stats) {
  stats.nodes += 1;
  const LpSolution bound = ctx.lp.solve();
  if (bound.objective >= best.eps - kEpsZero) return;
  if (depth == ctx.branch.size()) {
    best.eps = bound.objective;
    best.x.assign(bound.y.begin(), bound.y.begin() + ctx.prog.n);
    best.rows = chosen;
    return;
  }
  const auto& g = ctx.prog.groups[ctx.multi[ctx.branch[depth]]];
  for (int j = 0; j < static_cast<int>(g.rows.size()); ++j) {
    ctx.lp.push(g.rows[j]);
    chosen[depth] = j;
    dfs(ctx, depth + 1, chosen, best, stats);
    ctx.lp.pop();
  }
  chosen[depth] = -1;
}

// True when some assignment of rows to the multi groups at positions
// [q, end) keeps min eps <= target, with earlier groups' rows already
// pushed. On success `witness[q..]` holds the found completion.
bool completable(SearchContext& ctx, std::size_t q, double target,
                 std::vector<int>& witness, EpsilonSolution::Stats& stats) {
  stats.nodes += 1;
  const LpSolution bound = ctx.lp.solve();
  if (bound.objective > target) return false;
  if (q == ctx.multi.size()) return true;
  const auto& g = ctx.prog.groups[ctx.multi[q]];
  // Try the known-good row first, then the rest in canonical order.
  std::vector<int> order;
  if (witness[q] >= 0) order.push_back(witness[q]);
  for (int j = 0; j < static_cast<int>(g.rows.size()); ++j)
    if (j != witness[q]) order.push_back(j);
  for (int j : order) {
    ctx.lp.push(g.rows[j]);
    const bool ok = completable(ctx, q + 1, target, witness, stats);
    ctx.lp.pop();
    if (ok) {
      witness[q] = j;
      return true;
    }
  }
  return false;
}

}  // namespace

EpsilonSolution solve_exact(const EpsilonProgram& prog) {
  if (prog.n < 1) throw std::invalid_argument("empty program");
  EpsilonSolution sol;
  SearchContext ctx = make_context(prog, &sol.stats);

  // Incumbent from the anchor: per branch group the least-violated row.
  Incumbent best;
  best.rows.assign(ctx.branch.size(), 0);
  for (std::size_t d = 0; d < ctx.branch.size(); ++d) {
    const auto& g = ctx.prog.groups[ctx.multi[ctx.branch[d]]];
    int arg = 0;
    double least = std::numeric_limits<double>::infinity();
    for (int j = 0; j < static_cast<int>(g.rows.size()); ++j) {
      const double gap = g.rows[j].rhs - coalition_sum(g.rows[j].coalition, prog.anchor);
      if (gap < least - 1e-15) {
        least = gap;
        arg = j;
      }
    }
    best.rows[d] = arg;
    ctx.lp.push(g.rows[arg]);
  }
  {
    const LpSolution s = ctx.lp.solve();
    best.eps = s.objective;
    best.x.assign(s.y.begin(), s.y.begin() + prog.n);
  }
  for (std::size_t d = 0; d < ctx.branch.size(); ++d) ctx.lp.pop();

  if (best.eps > kEpsZero && !ctx.branch.empty()) {
    std::vector<int> chosen(ctx.branch.size(), -1);
    dfs(ctx, 0, chosen, best, sol.stats);
  }
  const double eps_star = std::max(best.eps, 0.0);

  // Lexicographically smallest selection among optima (ties at kTieTol):
  // scan multi groups in canonical order, accepting the first row that a
  // feasible witness solution certifies or a completion probe validates.
  std::vector<int> witness(ctx.multi.size(), -1);
  for (std::size_t q = 0; q < ctx.multi.size(); ++q) witness[q] = ctx.implied_row[q];
  for (std::size_t d = 0; d < ctx.branch.size(); ++d)
    witness[ctx.branch[d]] = best.rows[d];

  const double target = eps_star + kTieTol;
  std::vector<double> wx = best.x; // satisfies every witness row at eps_star
  for (std::size_t q = 0; q < ctx.multi.size(); ++q) {
    const auto& g = ctx.prog.groups[ctx.multi[q]];
    int picked = -1;
    for (int j = 0; j < static_cast<int>(g.rows.size()); ++j) {
      if (j == witness[q] ||
          coalition_sum(g.rows[j].coalition, wx) + target >= g.rows[j].rhs) {
        picked = j;
        break;
      }
      ctx.lp.push(g.rows[j]);
      std::vector<int> completion(witness.begin(), witness.end());
      const bool ok = completable(ctx, q + 1, target, completion, sol.stats);
      ctx.lp.pop();
      if (ok) {
        picked = j;
        for (std::size_t r = q + 1; r < ctx.multi.size(); ++r) witness[r] = completion[r];
        // The probe's solution replaces the witness imputation.
        ctx.lp.push(g.rows[j]);
        for (std::size_t r = q + 1; r < ctx.multi.size(); ++r)
          ctx.lp.push(ctx.prog.groups[ctx.multi[r]].rows[witness[r]]);
        const LpSolution s = ctx.lp.solve();
        wx.assign(s.y.begin(), s.y.begin() + prog.n);
        for (std::size_t r = q; r < ctx.multi.size(); ++r) ctx.lp.pop();
        break;
      }
    }
    if (picked < 0) throw SolverError("selection pass lost feasibility");
    witness[q] = picked;
    ctx.lp.push(g.rows[picked]); // now fixed
  }

  // Secondary objective: among imputations within the tie tolerance of
  // eps_star under the fixed selection, minimize the L1 distance to the
  // anchor. Variables (x, eps, t): t_i >= |x_i - anchor_i|.
  {
    const int n = prog.n;
    LinearProgram lp2;
    lp2.num_vars = 2 * n + 1;
    lp2.objective.assign(static_cast<std::size_t>(2 * n) + 1, 0.0);
    for (int i = 0; i < n; ++i) lp2.objective[n + 1 + i] = 1.0;
    for (const auto& row : ctx.lp.lp.rows) lp2.add_row(row.coeffs, row.rhs);
    lp2.add_row({{n, -1.0}}, -(eps_star + kTieTol));
    for (int i = 0; i < n; ++i) {
      lp2.add_row({{n + 1 + i, 1.0}, {i, -1.0}}, -prog.anchor[i]);
      lp2.add_row({{n + 1 + i, 1.0}, {i, 1.0}}, prog.anchor[i]);
    }
    sol.stats.lp_solves += 1;
    const LpSolution s2 = solve_lp(lp2);
    if (s2.status != LpStatus::Optimal)
      throw SolverError("anchor refinement solve failed");
    sol.x.assign(s2.y.begin(), s2.y.begin() + n);
  }

  sol.epsilon = eps_star;

  // Report the selection over all groups and, per group, every block the
  // final imputation satisfies at eps_star.
  sol.selection.assign(prog.groups.size(), 0);
  for (std::size_t q = 0; q < ctx.multi.size(); ++q)
    sol.selection[static_cast<std::size_t>(ctx.multi[q])] = witness[q];
  sol.enforced.resize(prog.groups.size());
  for (std::size_t gi = 0; gi < prog.groups.size(); ++gi)
    for (const auto& row : prog.groups[gi].rows)
      if (coalition_sum(row.coalition, sol.x) + eps_star + 2 * kTieTol >= row.rhs)
        sol.enforced[gi].push_back(row.coalition);
  return sol;
}

EpsilonSolution solve_strict(const EpsilonProgram& prog) {
  if (prog.n < 1) throw std::invalid_argument("empty program");
  EpsilonSolution sol;
  NodeLp node(prog, &sol.stats);
  for (const auto& g : prog.groups)
    for (const auto& row : g.rows) node.push(row);
  const LpSolution s = node.solve();
  const double eps_star = std::max(s.objective, 0.0);

  // Anchor refinement as in solve_exact, over the full row set.
  {
    const int n = prog.n;
    LinearProgram lp2;
    lp2.num_vars = 2 * n + 1;
    lp2.objective.assign(static_cast<std::size_t>(2 * n) + 1, 0.0);
    for (int i = 0; i < n; ++i) lp2.objective[n + 1 + i] = 1.0;
    for (const auto& row : node.lp.rows) lp2.add_row(row.coeffs, row.rhs);
    lp2.add_row({{n, -1.0}}, -(eps_star + kTieTol));
    for (int i = 0; i < n; ++i) {
      lp2.add_row({{n + 1 + i, 1.0}, {i, -1.0}}, -prog.anchor[i]);
      lp2.add_row({{n + 1 + i, 1.0}, {i, 1.0}}, prog.anchor[i]);
    }
    sol.stats.lp_solves += 1;
    const LpSolution s2 = solve_lp(lp2);
    if (s2.status != LpStatus::Optimal)
      throw SolverError("anchor refinement solve failed");
    sol.x.assign(s2.y.begin(), s2.y.begin() + n);
  }

  sol.epsilon = eps_star;
  sol.selection.assign(prog.groups.size(), 0);
  sol.enforced.resize(prog.groups.size());
  for (std::size_t gi = 0; gi < prog.groups.size(); ++gi)
    for (const auto& row : prog.groups[gi].rows)
      if (coalition_sum(row.coalition, sol.x) + eps_star + 2 * kTieTol >= row.rhs)
        sol.enforced[gi].push_back(row.coalition);
  return sol;
}

DynamicEpochResult solve_dynamic_epoch(const PartitionFunctionGame& pfg_t,
                                       const std::vector<double>& pi_prev,
                                       const std::vector<double>& grand_values) {
  const int n = pfg_t.n();
  if (static_cast<int>(pi_prev.size()) != n || static_cast<int>(grand_values.size()) != n)
    throw std::invalid_argument("epoch vector size mismatch");
  double gsum = 0.0, scale = 1.0;
  for (double v : grand_values) {
    gsum += v;
    scale = std::max(scale, std::abs(v));
  }
  if (std::abs(gsum - pfg_t.grand_value()) > 1e-6 * scale)
    throw std::invalid_argument("grand play values do not sum to the grand worth");

  DynamicEpochResult out;
  out.solution = solve_exact(build_program(pfg_t));
  out.payments.resize(static_cast<std::size_t>(n));
  out.lifetime_x.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out.payments[i] = grand_values[i] - out.solution.x[i];
    out.lifetime_x[i] = out.solution.x[i] - pi_prev[i];
  }
  // Fold the float residual into the first payment; transfers then sum to
  // exactly zero in doubles.
  for (int pass = 0; pass < 3; ++pass) {
    double r = 0.0;
    for (double p : out.payments) r += p;
    if (r == 0.0) break;
    if (std::abs(r) > 1e-6 * scale) throw SolverError("payment residual too large");
    out.payments[0] -= r;
  }
  return out;
}

namespace {

nlohmann::json coalition_json(const Coalition& c) {
  nlohmann::json ids = nlohmann::json::array();
  for (int i : c.members()) ids.push_back(i + 1);
  return ids;
}

}  // namespace

nlohmann::json dump_program(const EpsilonProgram& prog, const EpsilonSolution* sol) {
  nlohmann::json j;
  j["agents"] = prog.n;
  j["big_m"] = prog.big_m;
  j["efficiency_rhs"] = prog.efficiency_rhs;
  j["individual_rationality_rhs"] = prog.ir_rhs;
  j["anchor"] = prog.anchor;
  j["group_count"] = prog.groups.size();
  j["row_count"] = prog.row_count();
  nlohmann::json groups = nlohmann::json::array();
  for (std::size_t gi = 0; gi < prog.groups.size(); ++gi) {
    const auto& g = prog.groups[gi];
    nlohmann::json gj;
    gj["partition_index"] = g.partition_index;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t ri = 0; ri < g.rows.size(); ++ri) {
      nlohmann::json rj;
      rj["coalition"] = coalition_json(g.rows[ri].coalition);
      rj["rhs"] = g.rows[ri].rhs;
      if (sol) {
        rj["selected"] = sol->selection[gi] == static_cast<int>(ri);
        double s = 0.0;
        for (int i : g.rows[ri].coalition.members()) s += sol->x[i];
        rj["slack"] = s + sol->epsilon - g.rows[ri].rhs;
        rj["enforced"] = std::find(sol->enforced[gi].begin(), sol->enforced[gi].end(),
                                   g.rows[ri].coalition) != sol->enforced[gi].end();
      }
      rows.push_back(std::move(rj));
    }
    gj["rows"] = std::move(rows);
    groups.push_back(std::move(gj));
  }
  j["groups"] = std::move(groups);
  if (sol) {
    j["solution"] = {{"x", sol->x},
                     {"epsilon", sol->epsilon},
                     {"lp_solves", sol->stats.lp_solves},
                     {"nodes", sol->stats.nodes}};
  }
  return j;
}

}  // namespace coopq

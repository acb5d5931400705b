#include "coopq/horizontal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

#include "coopq/sampling.hpp"

namespace coopq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kStableEps = 1e-9;

std::string fmt(double v, const char* spec = "%.12g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

void SimConfig::validate() const {
  auto fail = [](const char* msg) { throw std::invalid_argument(msg); };
  if (!(link_length > 0)) fail("link_length must be positive");
  if (lanes < 1 || lanes > 4) fail("lanes must be in [1,4]");
  if (!(arrival_flow >= 0)) fail("arrival_flow must be non-negative");
  if (!(bottleneck_outflow > 0)) fail("bottleneck_outflow must be positive");
  if (!(free_speed > 0) || !(queue_speed > 0)) fail("speeds must be positive");
  if (!(queue_speed < free_speed)) fail("queue_speed must be below free_speed");
  if (!(queue_spacing > 0)) fail("queue_spacing must be positive");
  if (!(horizon >= 0)) fail("horizon must be non-negative");
  if (participant_cap < 1 || participant_cap > kMaxAgents)
    fail("participant_cap out of range");
  if (!(time_step > 0)) fail("time_step must be positive");
  if (arrival_flow * time_step > 3600.0)
    fail("arrival_flow * time_step exceeds one vehicle per lane per step");
  const double h_q = saturation_headway();
  if (std::abs(queue_spacing / queue_speed - h_q) > 1e-9 * h_q)
    fail("queue_spacing / queue_speed must equal 3600 / bottleneck_outflow");
}

SimConfig SimConfig::from_json(const nlohmann::json& j) {
  SimConfig c;
  c.link_length = j.value("link_length", c.link_length);
  c.lanes = j.value("lanes", c.lanes);
  c.arrival_flow = j.value("arrival_flow", c.arrival_flow);
  c.bottleneck_outflow = j.value("bottleneck_outflow", c.bottleneck_outflow);
  c.free_speed = j.value("free_speed", c.free_speed);
  c.queue_speed = j.value("queue_speed", c.queue_speed);
  c.queue_spacing = j.value("queue_spacing", c.queue_spacing);
  c.horizon = j.value("horizon", c.horizon);
  c.participant_cap = j.value("participant_cap", c.participant_cap);
  c.rng_seed = j.value("rng_seed", c.rng_seed);
  c.time_step = j.value("time_step", c.time_step);
  c.validate();
  return c;
}

nlohmann::json SimConfig::to_json() const {
  return {{"link_length", link_length},
          {"lanes", lanes},
          {"arrival_flow", arrival_flow},
          {"bottleneck_outflow", bottleneck_outflow},
          {"free_speed", free_speed},
          {"queue_speed", queue_speed},
          {"queue_spacing", queue_spacing},
          {"horizon", horizon},
          {"participant_cap", participant_cap},
          {"rng_seed", rng_seed},
          {"time_step", time_step}};
}

LaneState::LaneState(int lanes)
    : last_departure(static_cast<std::size_t>(lanes), -kInf),
      queued(static_cast<std::size_t>(lanes), 0) {}

double LaneState::back_position(int lane, double link_length, double spacing) const {
  return link_length - queued[static_cast<std::size_t>(lane)] * spacing;
}

double predict_delay(double prev_dep, double follower_offset, double free_exit) {
  return std::max(prev_dep + follower_offset, free_exit) - free_exit;
}

namespace {

// Backward induction over the lane-choice tree for one coalition structure.
// State: per-lane latest scheduled exit. Returns realized value per block.
struct TreeSolver {
  const std::vector<const Vehicle*>& parts;
  const Partition& p;
  int lanes;
  double h_q;
  std::size_t leaves = 0;

  std::vector<double> solve(int level, std::vector<double>& dep) {
    if (level == static_cast<int>(parts.size())) {
      ++leaves;
      return std::vector<double>(static_cast<std::size_t>(p.block_count()), 0.0);
    }
    const Vehicle& v = *parts[static_cast<std::size_t>(level)];
    const int c = p.block_of(level);
    std::vector<double> best;
    double best_score = -kInf, best_val = 0.0;
    for (int k = 0; k < lanes; ++k) {
      const double prev = dep[static_cast<std::size_t>(k)];
      const double exit = std::max(prev + h_q, v.free_exit_time);
      const double val = -v.theta * (exit - v.free_exit_time);
      dep[static_cast<std::size_t>(k)] = exit;
      std::vector<double> child = solve(level + 1, dep);
      dep[static_cast<std::size_t>(k)] = prev;
      const double score = child[static_cast<std::size_t>(c)] + val;
      if (best.empty() || score > best_score) {
        best_score = score;
        best_val = val;
        best = std::move(child);
      }
    }
    best[static_cast<std::size_t>(c)] += best_val;
    return best;
  }
};

}  // namespace

EpochGame build_epoch_pfg(const std::vector<const Vehicle*>& participants,
                          const LaneState& lane_state, const SimConfig& cfg) {
  const int n = static_cast<int>(participants.size());
  if (n < 1 || n > cfg.participant_cap)
    throw std::invalid_argument("participant count out of range");
  if (static_cast<int>(lane_state.last_departure.size()) != cfg.lanes)
    throw std::invalid_argument("lane state does not match config");

  EpochGame out{PartitionFunctionGame(n), {}, {}, {}, 0};
  const auto& partitions = out.pfg.partitions();
  const double h_q = cfg.saturation_headway();
  for (int pi = 0; pi < out.pfg.partition_count(); ++pi) {
    TreeSolver solver{participants, partitions[static_cast<std::size_t>(pi)],
                      cfg.lanes, h_q, 0};
    std::vector<double> dep = lane_state.last_departure;
    const std::vector<double> vals = solver.solve(0, dep);
    if (pi == 0)
      out.leaves_per_partition = solver.leaves;
    else if (solver.leaves != out.leaves_per_partition)
      throw std::logic_error("uneven tree exploration");
    for (int b = 0; b < partitions[static_cast<std::size_t>(pi)].block_count(); ++b)
      out.pfg.set_value(pi, b, vals[static_cast<std::size_t>(b)]);
  }

  // Realized grand-coalition play: replay the chooser at every level.
  const Partition& grand = partitions[static_cast<std::size_t>(out.pfg.grand_index())];
  out.grand_assignment.resize(static_cast<std::size_t>(n));
  out.grand_delays.resize(static_cast<std::size_t>(n));
  out.grand_values.resize(static_cast<std::size_t>(n));
  std::vector<double> dep = lane_state.last_departure;
  for (int level = 0; level < n; ++level) {
    const Vehicle& v = *participants[static_cast<std::size_t>(level)];
    int best_lane = -1;
    double best_score = -kInf, best_exit = 0.0;
    for (int k = 0; k < cfg.lanes; ++k) {
      const double prev = dep[static_cast<std::size_t>(k)];
      const double exit = std::max(prev + h_q, v.free_exit_time);
      dep[static_cast<std::size_t>(k)] = exit;
      TreeSolver solver{participants, grand, cfg.lanes, h_q, 0};
      const double cont = solver.solve(level + 1, dep)[0];
      dep[static_cast<std::size_t>(k)] = prev;
      const double score = cont - v.theta * (exit - v.free_exit_time);
      if (best_lane < 0 || score > best_score) {
        best_score = score;
        best_lane = k;
        best_exit = exit;
      }
    }
    out.grand_assignment[static_cast<std::size_t>(level)] = best_lane;
    out.grand_delays[static_cast<std::size_t>(level)] = best_exit - v.free_exit_time;
    out.grand_values[static_cast<std::size_t>(level)] =
        -v.theta * out.grand_delays[static_cast<std::size_t>(level)];
    dep[static_cast<std::size_t>(best_lane)] = best_exit;
  }
  double replay = 0.0;
  for (double v : out.grand_values) replay += v;
  if (std::abs(replay - out.pfg.grand_value()) >
      1e-9 * std::max(1.0, std::abs(replay)))
    throw std::logic_error("grand replay disagrees with the recursion");
  return out;
}

namespace {

struct Sim {
  const SimConfig& cfg;
  LaneState lanes;
  std::vector<Vehicle> vehicles;
  Rng rng;
  SimulationReport rep;

  double ratio_all = 0.0, ratio_unstable = 0.0;
  std::size_t stable = 0, unstable = 0;
  double ratio_strict_all = 0.0, ratio_strict_unstable = 0.0;
  std::size_t stable_strict = 0, unstable_strict = 0;
  double min_offset = kInf;
  double last_kin_t = 0.0;

  explicit Sim(const SimConfig& c) : cfg(c), lanes(c.lanes), rng(c.rng_seed) {
    rep.config = c;
  }

  double back_of(int lane) const {
    return lanes.back_position(lane, cfg.link_length, cfg.queue_spacing);
  }

  void advance(double t) {
    const double dt = t - last_kin_t;
    for (auto& v : vehicles)
      if (v.status == Vehicle::Status::approaching) v.position += cfg.free_speed * dt;
    last_kin_t = t;
  }

  void process_departures(double t) {
    for (;;) {
      Vehicle* next = nullptr;
      for (auto& v : vehicles)
        if (v.status == Vehicle::Status::queued && v.depart_time <= t &&
            (!next || v.depart_time < next->depart_time ||
             (v.depart_time == next->depart_time && v.id < next->id)))
          next = &v;
      if (!next) return;
      next->status = Vehicle::Status::departed;
      lanes.queued[static_cast<std::size_t>(next->lane)] -= 1;
    }
  }

  // Approaching vehicles by distance to their target lane's queue back.
  std::vector<int> approach_order() const {
    std::vector<int> ids;
    for (const auto& v : vehicles)
      if (v.status == Vehicle::Status::approaching) ids.push_back(v.id);
    std::sort(ids.begin(), ids.end(), [&](int a, int b) {
      const Vehicle& va = vehicles[static_cast<std::size_t>(a)];
      const Vehicle& vb = vehicles[static_cast<std::size_t>(b)];
      const double da = back_of(va.lane) - va.position;
      const double db = back_of(vb.lane) - vb.position;
      if (da != db) return da < db;
      return a < b;
    });
    return ids;
  }

  void run_epoch(double t) {
    std::vector<int> order = approach_order();
    if (order.empty()) return;
    if (static_cast<int>(order.size()) > cfg.participant_cap)
      order.resize(static_cast<std::size_t>(cfg.participant_cap));

    std::vector<const Vehicle*> parts;
    std::vector<double> pi_prev;
    for (int id : order) {
      parts.push_back(&vehicles[static_cast<std::size_t>(id)]);
      pi_prev.push_back(vehicles[static_cast<std::size_t>(id)].payment);
    }
    const EpochGame game = build_epoch_pfg(parts, lanes, cfg);
    const DynamicEpochResult res =
        solve_dynamic_epoch(game.pfg, pi_prev, game.grand_values);

    EpochRecord rec;
    rec.t = t;
    rec.participants = order;
    rec.epsilon = res.solution.epsilon;
    rec.epsilon_strict = solve_strict(build_program(game.pfg)).epsilon;
    rec.payments = res.payments;
    rec.assignment = game.grand_assignment;
    double cost = 0.0;
    for (std::size_t j = 0; j < parts.size(); ++j)
      cost += parts[j]->theta * game.grand_delays[j];
    rec.mean_cost = cost / static_cast<double>(parts.size());

    for (std::size_t j = 0; j < order.size(); ++j) {
      Vehicle& v = vehicles[static_cast<std::size_t>(order[j])];
      v.payment += res.payments[j];
      const int target = game.grand_assignment[j];
      if (target != v.lane) {
        v.lane = target;
        v.lane_history.push_back({t, target});
      }
    }

    // Invariant instrumentation for the report.
    rep.max_participants = std::max(rep.max_participants, static_cast<int>(order.size()));
    double pi_sum = 0.0;
    for (const auto& v : vehicles) pi_sum += v.payment;
    rep.max_budget_imbalance = std::max(rep.max_budget_imbalance, std::abs(pi_sum));
    std::size_t expected = 1;
    for (int i = 0; i < game.pfg.n(); ++i)
      expected *= static_cast<std::size_t>(cfg.lanes);
    if (game.leaves_per_partition != expected) rep.leaf_counts_ok = false;
    const int si = game.pfg.singleton_index();
    const Partition& singles = game.pfg.partitions()[static_cast<std::size_t>(si)];
    for (std::size_t j = 0; j < order.size(); ++j) {
      const double ir = game.pfg.value(si, singles.block_of(static_cast<int>(j)));
      rep.max_ir_violation = std::max(
          rep.max_ir_violation, ir - rec.epsilon - res.solution.x[j]);
    }

    if (rec.epsilon <= kStableEps) {
      stable += 1;
    } else {
      unstable += 1;
    }
    const double ratio = rec.mean_cost > 1e-12 ? rec.epsilon / rec.mean_cost : 0.0;
    ratio_all += ratio;
    if (rec.epsilon > kStableEps) ratio_unstable += ratio;
    if (rec.epsilon_strict <= kStableEps) {
      stable_strict += 1;
    } else {
      unstable_strict += 1;
    }
    const double ratio_s =
        rec.mean_cost > 1e-12 ? rec.epsilon_strict / rec.mean_cost : 0.0;
    ratio_strict_all += ratio_s;
    if (rec.epsilon_strict > kStableEps) ratio_strict_unstable += ratio_s;
    rep.epochs.push_back(std::move(rec));
  }

  void join(Vehicle& v, double t) {
    const double prev = lanes.last_departure[static_cast<std::size_t>(v.lane)];
    const double exit = std::max(prev + cfg.saturation_headway(), v.free_exit_time);
    if (prev != -kInf) min_offset = std::min(min_offset, exit - prev);
    lanes.last_departure[static_cast<std::size_t>(v.lane)] = exit;
    lanes.queued[static_cast<std::size_t>(v.lane)] += 1;
    v.status = Vehicle::Status::queued;
    v.depart_time = exit;
    (void)t;
  }

  // Lowest-(distance, id) approaching vehicle within the join threshold.
  int first_imminent() const {
    int best = -1;
    double best_d = kInf;
    const double threshold = cfg.free_speed * cfg.time_step;
    for (const auto& v : vehicles) {
      if (v.status != Vehicle::Status::approaching) continue;
      const double d = back_of(v.lane) - v.position;
      if (d <= threshold && (d < best_d || (d == best_d && v.id < best))) {
        best = v.id;
        best_d = d;
      }
    }
    return best;
  }

  void run() {
    const double p_arrival = cfg.arrival_flow * cfg.time_step / 3600.0;
    const long ticks = std::lround(std::floor(cfg.horizon / cfg.time_step + 1e-9));
    for (long k = 1; k <= ticks; ++k) {
      const double t = static_cast<double>(k) * cfg.time_step;
      advance(t);
      process_departures(t);

      std::vector<int> arrived;
      for (int m = 0; m < cfg.lanes; ++m) {
        if (!rng.bernoulli(p_arrival)) continue;
        Vehicle v;
        v.id = static_cast<int>(vehicles.size());
        v.theta = sample_theta(rng);
        v.entry_time = t;
        v.free_exit_time = t + cfg.link_length / cfg.free_speed;
        v.lane = m;
        v.position = 0.0;
        v.lane_history.push_back({t, m});
        vehicles.push_back(std::move(v));
        arrived.push_back(vehicles.back().id);
      }
      for (std::size_t a = 0; a < arrived.size(); ++a) run_epoch(t);

      for (;;) {
        const int s = first_imminent();
        if (s < 0) break;
        const std::vector<int> order = approach_order();
        const auto pos = std::find(order.begin(), order.end(), s) - order.begin();
        if (pos < cfg.participant_cap) run_epoch(t);
        join(vehicles[static_cast<std::size_t>(s)], t);
      }
    }

    const std::size_t total = rep.epochs.size();
    rep.stable_fraction =
        total == 0 ? 1.0 : static_cast<double>(stable) / static_cast<double>(total);
    rep.mean_ratio_all = total == 0 ? 0.0 : ratio_all / static_cast<double>(total);
    rep.mean_ratio_unstable =
        unstable == 0 ? 0.0 : ratio_unstable / static_cast<double>(unstable);
    rep.stable_fraction_strict =
        total == 0 ? 1.0 : static_cast<double>(stable_strict) / static_cast<double>(total);
    rep.mean_ratio_strict_all =
        total == 0 ? 0.0 : ratio_strict_all / static_cast<double>(total);
    rep.mean_ratio_strict_unstable =
        unstable_strict == 0
            ? 0.0
            : ratio_strict_unstable / static_cast<double>(unstable_strict);
    rep.min_departure_offset = min_offset == kInf ? cfg.saturation_headway() : min_offset;
    rep.vehicles = vehicles;
  }
};

}  // namespace

SimulationReport run_simulation(const SimConfig& cfg) {
  cfg.validate();
  Sim sim(cfg);
  sim.run();
  return std::move(sim.rep);
}

nlohmann::json summary_json(const SimulationReport& rep) {
  std::size_t departed = 0, queued = 0;
  for (const auto& v : rep.vehicles) {
    departed += v.status == Vehicle::Status::departed;
    queued += v.status == Vehicle::Status::queued;
  }
  return {{"config", rep.config.to_json()},
          {"epochs", rep.epochs.size()},
          {"vehicles", rep.vehicles.size()},
          {"vehicles_departed", departed},
          {"vehicles_queued_at_end", queued},
          {"stable_fraction", rep.stable_fraction},
          {"mean_eps_cost_ratio", rep.mean_ratio_all},
          {"mean_eps_cost_ratio_unstable", rep.mean_ratio_unstable},
          {"stable_fraction_strict", rep.stable_fraction_strict},
          {"mean_eps_cost_ratio_strict", rep.mean_ratio_strict_all},
          {"mean_eps_cost_ratio_strict_unstable", rep.mean_ratio_strict_unstable},
          {"max_budget_imbalance", rep.max_budget_imbalance},
          {"min_departure_offset", rep.min_departure_offset},
          {"max_participants", rep.max_participants},
          {"leaf_counts_ok", rep.leaf_counts_ok},
          {"max_ir_violation", rep.max_ir_violation}};
}

void write_run_outputs(const SimulationReport& rep, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream f(out_dir + "/epochs.csv");
    f << "t,participants,epsilon,mean_cost,stable\n";
    for (const auto& e : rep.epochs)
      f << fmt(e.t, "%.10g") << ',' << e.participants.size() << ','
        << fmt(e.epsilon) << ',' << fmt(e.mean_cost) << ','
        << (e.epsilon <= kStableEps ? 1 : 0) << '\n';
  }
  {
    std::ofstream f(out_dir + "/vehicles.csv");
    f << "id,theta,entry_time,lane_history,departure_time,total_delay,payment,status\n";
    for (const auto& v : rep.vehicles) {
      f << v.id + 1 << ',' << fmt(v.theta) << ',' << fmt(v.entry_time, "%.10g") << ',';
      for (std::size_t h = 0; h < v.lane_history.size(); ++h) {
        if (h) f << '|';
        f << fmt(v.lane_history[h].first, "%.10g") << ':' << v.lane_history[h].second;
      }
      f << ',';
      const bool scheduled = v.status != Vehicle::Status::approaching;
      if (scheduled)
        f << fmt(v.depart_time, "%.10g") << ',' << fmt(v.depart_time - v.free_exit_time);
      else
        f << ',';
      f << ',' << fmt(v.payment) << ',';
      switch (v.status) {
        case Vehicle::Status::approaching: f << "approaching"; break;
        case Vehicle::Status::queued: f << "queued"; break;
        case Vehicle::Status::departed: f << "departed"; break;
      }
      f << '\n';
    }
  }
  {
    std::ofstream f(out_dir + "/summary.json");
    f << summary_json(rep).dump(2) << '\n';
  }
}

}  // namespace coopq

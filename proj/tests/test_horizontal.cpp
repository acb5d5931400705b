#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "coopq/horizontal.hpp"
#include "coopq/sampling.hpp"
#include "support/oracles.hpp"

using namespace coopq;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vehicle make_vehicle(int id, double theta, double entry, const SimConfig& cfg, int lane = 0) {
  Vehicle v;
  v.id = id;
  v.theta = theta;
  v.entry_time = entry;
  v.free_exit_time = entry + cfg.link_length / cfg.free_speed;
  v.lane = lane;
  return v;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("predicted delay follows the car-following rule") {
  CHECK(predict_delay(-kInf, 4.0, 120.0) == doctest::Approx(0.0));
  CHECK(predict_delay(105.0, 4.0, 99.0) == doctest::Approx(10.0));
  CHECK(predict_delay(90.0, 4.0, 99.0) == doctest::Approx(0.0));
  // A saturated chain spaces exits one headway apart.
  double dep = 100.0;
  for (int i = 0; i < 5; ++i) {
    const double d = predict_delay(dep, 4.0, 50.0);
    const double exit = 50.0 + d;
    CHECK(exit == doctest::Approx(dep + 4.0));
    dep = exit;
  }
}

TEST_CASE("config validation") {
  SimConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.saturation_headway() == doctest::Approx(4.0));

  SimConfig bad = cfg;
  bad.lanes = 5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.queue_speed = 30.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.queue_spacing = 8.0; // 8 / 1.75 != 3600 / 900
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.arrival_flow = 4000.0;
  bad.time_step = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.participant_cap = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.time_step = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("config json round trip") {
  SimConfig cfg;
  cfg.arrival_flow = 540.0;
  cfg.lanes = 3;
  cfg.rng_seed = 99;
  const SimConfig back = SimConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
  nlohmann::json j = cfg.to_json();
  j["lanes"] = 9;
  CHECK_THROWS_AS(SimConfig::from_json(j), std::invalid_argument);
}

TEST_CASE("a lone vehicle takes the undelayed lane") {
  SimConfig cfg;
  LaneState state(cfg.lanes);
  state.last_departure[0] = 100.0;
  const Vehicle v = make_vehicle(0, 3.0, 87.0, cfg); // free exit 95
  const EpochGame game = build_epoch_pfg({&v}, state, cfg);
  CHECK(game.grand_assignment == std::vector<int>{1});
  CHECK(game.grand_delays[0] == doctest::Approx(0.0));
  CHECK(game.grand_values[0] == doctest::Approx(0.0));
  CHECK(game.leaves_per_partition == 2);
  CHECK(game.pfg.partition_count() == 1);
  CHECK(game.pfg.grand_value() == doctest::Approx(0.0));
}

TEST_CASE("two vehicles pick the joint optimum over all four sequences") {
  SimConfig cfg;
  LaneState state(cfg.lanes);
  state.last_departure[1] = 9.0;
  const Vehicle a = make_vehicle(0, 10.0, 0.0, cfg); // free exit 8
  const Vehicle b = make_vehicle(1, 1.0, 0.0, cfg);
  const EpochGame game = build_epoch_pfg({&a, &b}, state, cfg);

  CHECK(game.leaves_per_partition == 4);
  // Joint play stacks both on the empty lane: the heavy leader rides free,
  // the light follower absorbs one headway.
  CHECK(game.pfg.grand_value() == doctest::Approx(-4.0));
  CHECK(game.grand_assignment == std::vector<int>{0, 0});
  CHECK(game.grand_delays[0] == doctest::Approx(0.0));
  CHECK(game.grand_delays[1] == doctest::Approx(4.0));
  CHECK(game.grand_values[1] == doctest::Approx(-4.0));
  // Selfish play lands in the same spot here.
  const int si = game.pfg.singleton_index();
  CHECK(game.pfg.value(si, 0) == doctest::Approx(0.0));
  CHECK(game.pfg.value(si, 1) == doctest::Approx(-4.0));
}

TEST_CASE("epoch worths match the from-scratch replay oracle") {
  SimConfig cfg;
  cfg.lanes = 3;
  Rng rng(derive_seed(20260821, 30));
  for (int trial = 0; trial < 8; ++trial) {
    LaneState state(cfg.lanes);
    for (int m = 0; m < cfg.lanes; ++m)
      if (rng.bernoulli(0.6)) state.last_departure[m] = 100.0 + rng.uniform() * 10.0;

    std::vector<Vehicle> storage;
    for (int i = 0; i < 4; ++i)
      storage.push_back(make_vehicle(i, sample_theta(rng), 95.0 + rng.uniform() * 6.0, cfg));
    std::vector<const Vehicle*> parts;
    for (const auto& v : storage) parts.push_back(&v);

    const EpochGame game = build_epoch_pfg(parts, state, cfg);
    CHECK(game.leaves_per_partition == 81);
    for (int pi = 0; pi < game.pfg.partition_count(); ++pi) {
      const Partition& p = game.pfg.partitions()[pi];
      long long leaves = 0;
      const std::vector<double> ref = testing::epoch_values_oracle(parts, state, cfg, p, &leaves);
      CHECK(leaves == 81);
      for (int b = 0; b < p.block_count(); ++b)
        CHECK(game.pfg.value(pi, b) == doctest::Approx(ref[b]).epsilon(1e-12));
    }
  }
}

TEST_CASE("epoch construction validates participants and lane state") {
  SimConfig cfg;
  LaneState state(cfg.lanes);
  CHECK_THROWS_AS(build_epoch_pfg({}, state, cfg), std::invalid_argument);
  const Vehicle v = make_vehicle(0, 1.0, 0.0, cfg);
  LaneState wrong(cfg.lanes + 1);
  CHECK_THROWS_AS(build_epoch_pfg({&v}, wrong, cfg), std::invalid_argument);
  std::vector<Vehicle> many;
  for (int i = 0; i < cfg.participant_cap + 1; ++i)
    many.push_back(make_vehicle(i, 1.0, 0.0, cfg));
  std::vector<const Vehicle*> parts;
  for (const auto& m : many) parts.push_back(&m);
  CHECK_THROWS_AS(build_epoch_pfg(parts, state, cfg), std::invalid_argument);
}

TEST_CASE("no arrivals means no epochs and a clean report") {
  SimConfig cfg;
  cfg.arrival_flow = 0.0;
  cfg.horizon = 60.0;
  const SimulationReport rep = run_simulation(cfg);
  CHECK(rep.epochs.empty());
  CHECK(rep.vehicles.empty());
  CHECK(rep.stable_fraction == doctest::Approx(1.0));
  CHECK(rep.stable_fraction_strict == doctest::Approx(1.0));
  CHECK(rep.mean_ratio_all == doctest::Approx(0.0));
  CHECK(rep.max_budget_imbalance == doctest::Approx(0.0));
  CHECK(rep.min_departure_offset == doctest::Approx(cfg.saturation_headway()));
}

TEST_CASE("a short run keeps every bookkept invariant") {
  SimConfig cfg;
  cfg.horizon = 240.0;
  cfg.rng_seed = 7;
  const SimulationReport rep = run_simulation(cfg);
  REQUIRE(!rep.epochs.empty());
  REQUIRE(!rep.vehicles.empty());

  const double h_q = cfg.saturation_headway();
  CHECK(rep.max_budget_imbalance <= 1e-9);
  CHECK(rep.min_departure_offset >= h_q - 1e-9);
  CHECK(rep.max_participants >= 1);
  CHECK(rep.max_participants <= cfg.participant_cap);
  CHECK(rep.leaf_counts_ok);
  CHECK(rep.max_ir_violation <= 1e-7);
  CHECK(rep.stable_fraction >= 0.0);
  CHECK(rep.stable_fraction <= 1.0);
  CHECK(rep.stable_fraction_strict <= rep.stable_fraction + 1e-12);
  CHECK(rep.stable_fraction_strict >= 0.0);

  double prev_t = 0.0;
  bool any_multi = false;
  for (const auto& e : rep.epochs) {
    CHECK(e.t >= prev_t);
    prev_t = e.t;
    REQUIRE(!e.participants.empty());
    CHECK(e.participants.size() == e.payments.size());
    CHECK(e.participants.size() == e.assignment.size());
    any_multi = any_multi || e.participants.size() > 1;
    CHECK(e.mean_cost >= 0.0);
    CHECK(e.epsilon >= 0.0);
    // Enforcing every block can only need more slack than enforcing one
    // per partition.
    CHECK(e.epsilon_strict >= e.epsilon - 1e-9);
    double paid = 0.0;
    for (double p : e.payments) paid += p;
    CHECK(paid == 0.0);
    for (int lane : e.assignment) {
      CHECK(lane >= 0);
      CHECK(lane < cfg.lanes);
    }
  }
  CHECK(any_multi);

  std::map<int, std::vector<double>> exits_by_lane;
  for (const auto& v : rep.vehicles) {
    REQUIRE(!v.lane_history.empty());
    CHECK(v.lane_history.front().first == doctest::Approx(v.entry_time));
    if (v.status == Vehicle::Status::approaching) {
      CHECK(v.depart_time == doctest::Approx(-1.0));
    } else {
      CHECK(v.depart_time >= v.free_exit_time - 1e-9);
      exits_by_lane[v.lane].push_back(v.depart_time);
    }
  }
  for (auto& [lane, exits] : exits_by_lane) {
    std::sort(exits.begin(), exits.end());
    for (std::size_t i = 1; i < exits.size(); ++i)
      CHECK(exits[i] - exits[i - 1] >= h_q - 1e-9);
  }
}

TEST_CASE("identical seeds reproduce identical artifacts") {
  SimConfig cfg;
  cfg.horizon = 120.0;
  cfg.rng_seed = 11;
  const SimulationReport a = run_simulation(cfg);
  const SimulationReport b = run_simulation(cfg);
  CHECK(a.epochs.size() == b.epochs.size());
  CHECK(a.vehicles.size() == b.vehicles.size());

  const std::filesystem::path base = std::filesystem::current_path() / "horizontal_tmp";
  std::filesystem::remove_all(base);
  write_run_outputs(a, (base / "a").string());
  write_run_outputs(b, (base / "b").string());
  for (const char* name : {"epochs.csv", "vehicles.csv", "summary.json"}) {
    const std::string fa = slurp(base / "a" / name);
    const std::string fb = slurp(base / "b" / name);
    CHECK(!fa.empty());
    CHECK(fa == fb);
  }

  const std::string header = slurp(base / "a" / "epochs.csv");
  CHECK(header.rfind("t,participants,epsilon,mean_cost,stable\n", 0) == 0);
  const std::string vheader = slurp(base / "a" / "vehicles.csv");
  CHECK(vheader.rfind("id,theta,entry_time,lane_history,departure_time,total_delay,payment,status\n",
                      0) == 0);
  const nlohmann::json summary = nlohmann::json::parse(slurp(base / "a" / "summary.json"));
  CHECK(summary["vehicles"] == a.vehicles.size());
  CHECK(summary["epochs"] == a.epochs.size());
  CHECK(summary.contains("stable_fraction"));
  CHECK(summary.contains("stable_fraction_strict"));
  std::filesystem::remove_all(base);
}

// Event-driven multi-lane bottleneck simulation. Arrivals cruise down the
// link, an optimization runs at every arrival and imminent queue join, and
// vehicles enter their assigned lane's queue at its back. Departure times
// follow the car-following rule dep = max(prev_dep + s_q/v_q, free_exit).
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "coopq/epsilon_core.hpp"
#include "coopq/pfg.hpp"

namespace coopq {

struct SimConfig {
  double link_length = 200.0;        // m
  int lanes = 2;
  double arrival_flow = 360.0;       // veh/h per lane
  double bottleneck_outflow = 900.0; // veh/h per lane
  double free_speed = 25.0;          // m/s
  double queue_speed = 1.75;         // m/s
  double queue_spacing = 7.0;        // m
  double horizon = 3600.0;           // s
  int participant_cap = 6;
  std::uint64_t rng_seed = 1;
  double time_step = 1.0;            // s, arrival process resolution

  double saturation_headway() const { return 3600.0 / bottleneck_outflow; }

  // Throws std::invalid_argument unless all quantities are positive,
  // queue_speed < free_speed, and queue_spacing / queue_speed matches the
  // saturation headway 3600 / bottleneck_outflow.
  void validate() const;

  static SimConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct Vehicle {
  int id = 0;
  double theta = 0.0;
  double entry_time = 0.0;     // when it entered the link
  double free_exit_time = 0.0; // entry + link_length / free_speed
  int lane = 0;                // target while approaching, queue lane after
  double position = 0.0;       // m from the link entry, while approaching
  enum class Status { approaching, queued, departed } status = Status::approaching;
  double payment = 0.0;        // accumulated transfers
  double depart_time = -1.0;   // scheduled bottleneck exit once queued
  std::vector<std::pair<double, int>> lane_history; // (time, lane) changes
};

// Per-lane schedule the epoch games branch on.
struct LaneState {
  std::vector<double> last_departure; // latest scheduled exit, -inf if none
  std::vector<int> queued;            // currently queued vehicles

  explicit LaneState(int lanes);
  // Queue back position for joining, measured from the link entry.
  double back_position(int lane, double link_length, double spacing) const;
};

// Delay if the subject follows a predecessor departing at prev_dep:
// max(prev_dep + offset, free_exit) - free_exit. Use -inf prev_dep for an
// empty lane.
double predict_delay(double prev_dep, double follower_offset, double free_exit);

// Full lane-choice tree over the participants in order (no aggregation:
// payoffs depend on per-lane departure times). Worth of every coalition in
// every partition, plus the realized grand-coalition play.
struct EpochGame {
  PartitionFunctionGame pfg;
  std::vector<int> grand_assignment; // lane per participant
  std::vector<double> grand_delays;  // seconds per participant
  std::vector<double> grand_values;  // -theta * delay
  std::size_t leaves_per_partition = 0; // instrumented, lanes^n each
};

EpochGame build_epoch_pfg(const std::vector<const Vehicle*>& participants,
                          const LaneState& lane_state, const SimConfig& cfg);

struct EpochRecord {
  double t = 0.0;
  std::vector<int> participants; // vehicle ids, decision order
  double epsilon = 0.0;          // one satisfied block per partition (solve_exact)
  double epsilon_strict = 0.0;   // every block of every partition (solve_strict)
  double mean_cost = 0.0;        // mean theta*delay under the grand play
  std::vector<double> payments;  // aligned with participants
  std::vector<int> assignment;   // target lane per participant
};

struct SimulationReport {
  SimConfig config;
  std::vector<EpochRecord> epochs;
  std::vector<Vehicle> vehicles;

  // Aggregates; ratio contributions use epsilon / mean_cost per epoch.
  double stable_fraction = 1.0;            // epsilon <= 1e-9, 1.0 when no epochs
  double mean_ratio_all = 0.0;             // averaged over every epoch
  double mean_ratio_unstable = 0.0;        // averaged over unstable epochs only

  // Same three aggregates under the stricter every-block epsilon.
  double stable_fraction_strict = 1.0;
  double mean_ratio_strict_all = 0.0;
  double mean_ratio_strict_unstable = 0.0;

  // Invariant instrumentation.
  double max_budget_imbalance = 0.0;       // max |sum of all payments| seen
  double min_departure_offset = 0.0;       // min gap between same-lane exits
  int max_participants = 0;
  bool leaf_counts_ok = true;              // every solve saw lanes^n leaves
  double max_ir_violation = 0.0;           // against singleton worth - eps
};

SimulationReport run_simulation(const SimConfig& cfg);

// epochs.csv, vehicles.csv, summary.json under out_dir (created if needed).
void write_run_outputs(const SimulationReport& report, const std::string& out_dir);

nlohmann::json summary_json(const SimulationReport& report);

}  // namespace coopq

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dvrp/policies.hpp"

namespace dvrp {

struct WaitRecord {
  int task_id = 0;
  int vehicle_id = 0;
  double arrival_time = 0.0;
  double service_start = 0.0;
  double service_end = 0.0;
  int iteration = 0;  // plan iteration whose commitment serviced the task

  double wait() const { return service_start - arrival_time; }
  double system_time() const { return service_end - arrival_time; }
};

struct IterationRecord {
  int iteration = 0;  // per-vehicle, 1-based
  int vehicle_id = 0;
  double epoch_time = 0.0;
  int n_outstanding = 0;
  // Travel time of the full planned tour (sum of leg times).
  double planned_travel_time = 0.0;
  // Time to execute the whole plan under expected service times:
  // planned_travel_time + n * s_bar.
  double planned_span = 0.0;
};

// Per-vehicle time accounting; the event loop advances these three clocks
// and defines the current time as their sum, so busy + travel + idle equals
// elapsed time by construction.
struct VehicleClocks {
  double busy = 0.0;
  double travel = 0.0;
  double idle = 0.0;
  double horizon() const { return busy + travel + idle; }
};

struct SimulationTrace {
  std::vector<WaitRecord> waits;
  std::vector<IterationRecord> iterations;
  std::vector<VehicleClocks> clocks;  // indexed by vehicle id
  double end_time = 0.0;
  double speed = 1.0;
  double s_bar = 0.0;
  // Multiplies planned_travel_time into the exported tour length column;
  // speed for euclidean runs, 1 on roadmaps whose edge weights are times.
  double length_scale = 1.0;
  std::vector<std::string> event_log;
};

struct SimOptions {
  std::uint64_t policy_seed = 1;
  bool record_event_log = false;
};

// Single-vehicle run: processes every task to completion. The vehicle idles
// at the environment waiting pose, diverts as soon as work arrives, executes
// one commitment at a time, and enqueues arrivals at their exact timestamps.
SimulationTrace run_single(std::span<const Task> tasks,
                           const PolicyParams& policy,
                           const SolverConfig& solver, const Environment& env,
                           double speed, double s_bar,
                           const SimOptions& opts = {});

struct Partition {
  int vehicle_id = 0;
  Pose depot{};
};

// Lloyd iteration over env travel time: centroid update is the coordinate
// mean (euclidean) or the time-medoid node (roadmap). Throws when m exceeds
// the sample or when assignments fail to stabilize within 100 rounds.
std::vector<Partition> k_means_partition(std::span<const Pose> sample, int m,
                                         std::uint64_t seed,
                                         const Environment& env, double speed);

int nearest_partition(std::span<const Partition> partitions, const Pose& p,
                      const Environment& env, double speed);

struct FleetOptions {
  std::uint64_t policy_seed = 1;
  std::uint64_t partition_seed = 1;
  bool record_event_log = false;
};

struct FleetResult {
  SimulationTrace trace;
  std::vector<Partition> partitions;
  std::vector<int> task_counts;      // tasks routed to each vehicle
  std::vector<double> load_factors;  // per-vehicle lambda_i * s_bar
};

// Partitions on the workload's own locations, then runs one independent
// single-vehicle lane per partition (each lane waits at its depot). m=1
// reduces exactly to run_single. `policies` holds either one entry
// (broadcast) or one per vehicle. `lambda` is the overall arrival rate, used
// only to report per-partition load factors.
FleetResult run_fleet(std::span<const Task> tasks,
                      const std::vector<PolicyParams>& policies, int m,
                      const SolverConfig& solver, const Environment& env,
                      double speed, double s_bar, double lambda,
                      const FleetOptions& opts = {});

// CSV serializers; column layouts are stable and byte-identical across
// reruns of the same trace.
std::string waits_csv(const SimulationTrace& trace);
std::string queue_csv(const SimulationTrace& trace);

}  // namespace dvrp

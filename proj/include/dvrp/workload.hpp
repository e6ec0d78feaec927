#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dvrp/environment.hpp"

namespace dvrp {

struct Task {
  int id = 0;
  Pose location{};
  double arrival_time = 0.0;
  double service_duration = 0.0;
};

// Where task locations come from. Region/node laws draw fresh locations;
// the point/node set laws resample uniformly from an empirical set.
struct SpatialLaw {
  enum class Kind { RegionUniform, NodeUniform, NodeWeighted, PointSet, NodeSet };
  Kind kind = Kind::RegionUniform;
  std::vector<double> node_weights;  // NodeWeighted, indexed by node
  std::vector<Point> points;         // PointSet
  std::vector<int> nodes;            // NodeSet

  static SpatialLaw region_uniform();
  static SpatialLaw node_uniform();
  static SpatialLaw node_weighted(std::vector<double> weights);
  // Reads requests.csv with either x,y columns (euclidean) or a node_id
  // column (roadmap). Unknown node ids are an error.
  static SpatialLaw from_requests_csv(const Environment& env,
                                      const std::string& path);
};

struct WorkloadSpec {
  int n_tasks = 0;
  double rho = 0.0;    // target load factor; may be >= 1 for unstable runs
  double s_bar = 1.0;  // mean service duration
  double s_std = 0.0;  // service duration standard deviation
  int m = 1;           // fleet size the arrival rate is scaled for
  double speed = 1.0;
  SpatialLaw spatial{};
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

// Poisson arrival rate implied by the spec: rho * m / s_bar.
double arrival_rate(const WorkloadSpec& spec);

// Draws arrivals, locations and service durations from three independent
// substreams of spec.seed, so changing one law never perturbs the others.
// Service durations are normal, resampled while below s_bar / 100.
std::vector<Task> generate_workload(const WorkloadSpec& spec,
                                    const Environment& env);

}  // namespace dvrp

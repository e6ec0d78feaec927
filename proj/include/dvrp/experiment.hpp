#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dvrp/analysis.hpp"
#include "dvrp/environment.hpp"
#include "dvrp/policies.hpp"
#include "dvrp/tour_opt.hpp"

namespace dvrp {

// A declarative experiment: one environment, one workload shape, a policy
// list and a (rho x seed) grid. Parsed from JSON; see configs/ for examples.
struct ExperimentConfig {
  struct EnvSpec {
    enum class Kind { Euclidean, RoadmapCsv, GridRoadmap };
    Kind kind = Kind::Euclidean;
    // Euclidean
    double width = 1.0;
    double height = 1.0;
    // RoadmapCsv; paths are resolved against the config file's directory
    std::string nodes_path;
    std::string edges_path;
    // GridRoadmap: cols x rows lattice, jittered edge times, optional
    // rectangular hole of removed nodes
    int cols = 0;
    int rows = 0;
    double cell_time = 1.0;
    double jitter = 0.0;
    std::uint64_t seed = 0;
    bool has_hole = false;
    int hole_col = 0, hole_row = 0, hole_cols = 0, hole_rows = 0;
  };

  struct SpatialSpec {
    enum class Kind { RegionUniform, NodeUniform, NodeBlobs, RequestsCsv };
    struct Blob {
      double x = 0.0, y = 0.0, sigma = 1.0, weight = 1.0;
    };
    Kind kind = Kind::RegionUniform;
    std::vector<Blob> blobs;  // NodeBlobs: gaussian bumps over node coords
    double floor = 0.0;       // NodeBlobs: weight floor added to every node
    std::string requests_path;
  };

  std::string name;
  EnvSpec env;
  SpatialSpec spatial;
  int n_tasks = 0;
  double s_bar = 1.0;
  double s_std = 0.0;
  int m = 1;
  double speed = 1.0;
  std::vector<PolicyParams> policies;  // labels are unique, used as dir names
  SolverConfig solver;
  std::vector<double> rho_grid;
  std::vector<std::uint64_t> seeds;
  double warmup_fraction = 0.0;
  std::string reference_policy;
  std::string out_dir;
  bool bound_report = false;

  std::string base_dir;     // directory the config was loaded from
  std::string config_hash;  // canonical-form FNV-1a, keys experiment resume

  void validate() const;
};

// Parses config JSON; error messages carry line and column of the offending
// construct. `source_name` is used in diagnostics, `base_dir` resolves
// relative paths.
ExperimentConfig parse_experiment_json(const std::string& text, const std::string& source_name,
                                       const std::string& base_dir);
ExperimentConfig load_experiment_config(const std::string& path);

Environment build_environment(const ExperimentConfig::EnvSpec& spec,
                              const std::string& base_dir);
SpatialLaw build_spatial_law(const ExperimentConfig::SpatialSpec& spec, const Environment& env,
                             const std::string& base_dir);

struct ExperimentOptions {
  int jobs = 1;
  bool dry_run = false;
  std::string out_override;  // replaces config out_dir when non-empty
};

struct VehicleCellStats {
  int vehicle_id = 0;
  int task_count = 0;
  double load_factor = 0.0;
  WaitStats stats;
};

struct CellStats {
  std::string policy;
  double rho = 0.0;
  std::uint64_t seed = 0;
  WaitStats stats;
  std::vector<VehicleCellStats> vehicles;  // fleet cells only
};

struct ExperimentResult {
  std::string out_dir;
  std::vector<CellStats> cells;  // config grid order
  int executed = 0;              // cells actually simulated this invocation
  int skipped = 0;               // cells restored from a previous run
};

// Runs the grid, writing per-cell waits.csv / queue.csv / stats.json (plus
// vehicles.csv for fleets and bound.json when enabled), then summary.csv,
// vehicle_summary.csv and comparison.json at the root. Cells already present
// in the manifest under the same config hash are not re-simulated.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const ExperimentOptions& opts = {});

}  // namespace dvrp

#include "dvrp/workload.hpp"

#include <stdexcept>

#include "dvrp/csv.hpp"
#include "dvrp/rng.hpp"

namespace dvrp {

SpatialLaw SpatialLaw::region_uniform() {
  return SpatialLaw{Kind::RegionUniform, {}, {}, {}};
}

SpatialLaw SpatialLaw::node_uniform() {
  return SpatialLaw{Kind::NodeUniform, {}, {}, {}};
}

SpatialLaw SpatialLaw::node_weighted(std::vector<double> weights) {
  return SpatialLaw{Kind::NodeWeighted, std::move(weights), {}, {}};
}

SpatialLaw SpatialLaw::from_requests_csv(const Environment& env,
                                         const std::string& path) {
  CsvTable table = read_csv(path);
  SpatialLaw law;
  if (env.is_euclidean()) {
    std::size_t cx = table.column("x");
    std::size_t cy = table.column("y");
    law.kind = Kind::PointSet;
    for (const auto& row : table.rows) {
      Point p{std::stod(row[cx]), std::stod(row[cy])};
      if (!env.region().contains(p))
        throw std::runtime_error("request point outside region in " + path);
      law.points.push_back(p);
    }
    if (law.points.empty())
      throw std::runtime_error("no request rows in " + path);
  } else {
    std::size_t cn = table.column("node_id");
    law.kind = Kind::NodeSet;
    for (const auto& row : table.rows) {
      int idx = env.graph().node_index(row[cn]);
      if (idx < 0)
        throw std::runtime_error("unknown node id in " + path + ": " + row[cn]);
      law.nodes.push_back(idx);
    }
    if (law.nodes.empty())
      throw std::runtime_error("no request rows in " + path);
  }
  return law;
}

void WorkloadSpec::validate() const {
  if (n_tasks < 0) throw std::invalid_argument("n_tasks must be non-negative");
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (!(s_bar > 0.0)) throw std::invalid_argument("s_bar must be positive");
  if (s_std < 0.0) throw std::invalid_argument("s_std must be non-negative");
  if (m < 1) throw std::invalid_argument("m must be at least 1");
  if (!(speed > 0.0)) throw std::invalid_argument("speed must be positive");
}

double arrival_rate(const WorkloadSpec& spec) {
  return spec.rho * spec.m / spec.s_bar;
}

namespace {

void validate_law(const SpatialLaw& law, const Environment& env) {
  using Kind = SpatialLaw::Kind;
  switch (law.kind) {
    case Kind::RegionUniform:
      if (!env.is_euclidean())
        throw std::invalid_argument(
            "region-uniform law needs a euclidean environment");
      break;
    case Kind::NodeUniform:
      if (env.is_euclidean())
        throw std::invalid_argument("node-uniform law needs a roadmap");
      break;
    case Kind::NodeWeighted: {
      if (env.is_euclidean())
        throw std::invalid_argument("node-weighted law needs a roadmap");
      if (static_cast<int>(law.node_weights.size()) != env.graph().size())
        throw std::invalid_argument("node weight count != node count");
      double total = 0.0;
      for (double w : law.node_weights) {
        if (w < 0.0)
          throw std::invalid_argument("node weights must be non-negative");
        total += w;
      }
      if (!(total > 0.0))
        throw std::invalid_argument("node weights must not all be zero");
      break;
    }
    case Kind::PointSet:
      if (!env.is_euclidean())
        throw std::invalid_argument("point-set law needs a euclidean "
                                    "environment");
      if (law.points.empty())
        throw std::invalid_argument("point set is empty");
      break;
    case Kind::NodeSet:
      if (env.is_euclidean())
        throw std::invalid_argument("node-set law needs a roadmap");
      if (law.nodes.empty()) throw std::invalid_argument("node set is empty");
      for (int idx : law.nodes)
        if (idx < 0 || idx >= env.graph().size())
          throw std::invalid_argument("node set index out of range");
      break;
  }
}

Pose sample_location(const SpatialLaw& law, const Environment& env,
                     RngStream& rng) {
  using Kind = SpatialLaw::Kind;
  switch (law.kind) {
    case Kind::RegionUniform: {
      double x = rng.uniform(0.0, env.region().width);
      double y = rng.uniform(0.0, env.region().height);
      return env.make_pose({x, y});
    }
    case Kind::NodeUniform:
      return env.node_pose(rng.uniform_int(0, env.graph().size() - 1));
    case Kind::NodeWeighted:
      return env.node_pose(rng.weighted_index(law.node_weights));
    case Kind::PointSet:
      return env.make_pose(
          law.points[rng.uniform_int(0, static_cast<int>(law.points.size()) - 1)]);
    case Kind::NodeSet:
      return env.node_pose(
          law.nodes[rng.uniform_int(0, static_cast<int>(law.nodes.size()) - 1)]);
  }
  throw std::logic_error("unreachable spatial law kind");
}

}  // namespace

std::vector<Task> generate_workload(const WorkloadSpec& spec,
                                    const Environment& env) {
  spec.validate();
  validate_law(spec.spatial, env);

  RngStream arrivals(mix_seed(spec.seed, 1));
  RngStream locations(mix_seed(spec.seed, 2));
  RngStream services(mix_seed(spec.seed, 3));

  double lambda = arrival_rate(spec);
  double floor = spec.s_bar / 100.0;

  std::vector<Task> tasks;
  tasks.reserve(spec.n_tasks);
  double t = 0.0;
  for (int i = 0; i < spec.n_tasks; ++i) {
    t += arrivals.exponential(lambda);
    Task task;
    task.id = i;
    task.arrival_time = t;
    task.location = sample_location(spec.spatial, env, locations);
    double s = services.normal(spec.s_bar, spec.s_std);
    while (s < floor) s = services.normal(spec.s_bar, spec.s_std);
    task.service_duration = s;
    tasks.push_back(task);
  }
  return tasks;
}

}  // namespace dvrp

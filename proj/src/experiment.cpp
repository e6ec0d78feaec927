#include "dvrp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include "dvrp/bounds.hpp"
#include "dvrp/csv.hpp"
#include "dvrp/errors.hpp"
#include "dvrp/log.hpp"
#include "dvrp/sim.hpp"
#include "dvrp/version.hpp"
#include "dvrp/workload.hpp"

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dvrp {

namespace {

// Maps a byte offset from a json parse_error to line:column in the source.
std::string locate(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

[[noreturn]] void config_error(const std::string& source, const std::string& where,
                               const std::string& what) {
  throw std::invalid_argument(source + ": " + where + ": " + what);
}

const json& require(const json& j, const char* key, const std::string& source,
                    const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) config_error(source, where, std::string("missing key '") + key + "'");
  return *it;
}

double get_num(const json& j, const char* key, const std::string& source,
               const std::string& where) {
  const json& v = require(j, key, source, where);
  if (!v.is_number()) config_error(source, where, std::string("'") + key + "' must be a number");
  return v.get<double>();
}

double get_num_or(const json& j, const char* key, double fallback, const std::string& source,
                  const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) config_error(source, where, std::string("'") + key + "' must be a number");
  return it->get<double>();
}

long long get_int(const json& j, const char* key, const std::string& source,
                  const std::string& where) {
  const json& v = require(j, key, source, where);
  if (!v.is_number_integer())
    config_error(source, where, std::string("'") + key + "' must be an integer");
  return v.get<long long>();
}

long long get_int_or(const json& j, const char* key, long long fallback,
                     const std::string& source, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number_integer())
    config_error(source, where, std::string("'") + key + "' must be an integer");
  return it->get<long long>();
}

std::string get_str(const json& j, const char* key, const std::string& source,
                    const std::string& where) {
  const json& v = require(j, key, source, where);
  if (!v.is_string()) config_error(source, where, std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

bool get_bool_or(const json& j, const char* key, bool fallback, const std::string& source,
                 const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_boolean()) config_error(source, where, std::string("'") + key + "' must be a bool");
  return it->get<bool>();
}

bool path_safe(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return true;
}

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

ExperimentConfig::EnvSpec parse_env(const json& j, const std::string& source) {
  ExperimentConfig::EnvSpec env;
  const std::string where = "environment";
  const std::string kind = get_str(j, "kind", source, where);
  if (kind == "euclidean") {
    env.kind = ExperimentConfig::EnvSpec::Kind::Euclidean;
    env.width = get_num(j, "width", source, where);
    env.height = get_num(j, "height", source, where);
  } else if (kind == "roadmap") {
    env.kind = ExperimentConfig::EnvSpec::Kind::RoadmapCsv;
    env.nodes_path = get_str(j, "nodes", source, where);
    env.edges_path = get_str(j, "edges", source, where);
  } else if (kind == "grid_roadmap") {
    env.kind = ExperimentConfig::EnvSpec::Kind::GridRoadmap;
    env.cols = static_cast<int>(get_int(j, "cols", source, where));
    env.rows = static_cast<int>(get_int(j, "rows", source, where));
    env.cell_time = get_num(j, "cell_time", source, where);
    env.jitter = get_num_or(j, "jitter", 0.0, source, where);
    env.seed = static_cast<std::uint64_t>(get_int_or(j, "seed", 0, source, where));
    if (auto it = j.find("hole"); it != j.end()) {
      env.has_hole = true;
      env.hole_col = static_cast<int>(get_int(*it, "col", source, "environment.hole"));
      env.hole_row = static_cast<int>(get_int(*it, "row", source, "environment.hole"));
      env.hole_cols = static_cast<int>(get_int(*it, "cols", source, "environment.hole"));
      env.hole_rows = static_cast<int>(get_int(*it, "rows", source, "environment.hole"));
    }
  } else {
    config_error(source, where, "unknown environment kind '" + kind + "'");
  }
  return env;
}

ExperimentConfig::SpatialSpec parse_spatial(const json& j, const std::string& source) {
  ExperimentConfig::SpatialSpec sp;
  const std::string where = "workload.spatial";
  const std::string kind = get_str(j, "kind", source, where);
  if (kind == "region_uniform") {
    sp.kind = ExperimentConfig::SpatialSpec::Kind::RegionUniform;
  } else if (kind == "node_uniform") {
    sp.kind = ExperimentConfig::SpatialSpec::Kind::NodeUniform;
  } else if (kind == "node_blobs") {
    sp.kind = ExperimentConfig::SpatialSpec::Kind::NodeBlobs;
    sp.floor = get_num_or(j, "floor", 0.0, source, where);
    const json& blobs = require(j, "blobs", source, where);
    if (!blobs.is_array() || blobs.empty())
      config_error(source, where, "'blobs' must be a non-empty array");
    for (std::size_t i = 0; i < blobs.size(); ++i) {
      const std::string bw = where + ".blobs[" + std::to_string(i) + "]";
      ExperimentConfig::SpatialSpec::Blob b;
      b.x = get_num(blobs[i], "x", source, bw);
      b.y = get_num(blobs[i], "y", source, bw);
      b.sigma = get_num(blobs[i], "sigma", source, bw);
      b.weight = get_num(blobs[i], "weight", source, bw);
      if (!(b.sigma > 0.0)) config_error(source, bw, "sigma must be positive");
      if (!(b.weight > 0.0)) config_error(source, bw, "weight must be positive");
      sp.blobs.push_back(b);
    }
  } else if (kind == "requests_csv") {
    sp.kind = ExperimentConfig::SpatialSpec::Kind::RequestsCsv;
    sp.requests_path = get_str(j, "path", source, where);
  } else {
    config_error(source, where, "unknown spatial kind '" + kind + "'");
  }
  return sp;
}

SolverConfig parse_solver(const json& j, const std::string& source) {
  SolverConfig cfg;
  const std::string where = "solver";
  if (j.is_string()) {
    const std::string c = j.get<std::string>();
    if (c == "cheapest_insertion")
      cfg.construction = SolverConfig::Construction::CheapestInsertion;
    else if (c == "nearest_neighbor")
      cfg.construction = SolverConfig::Construction::NearestNeighbor;
    else
      config_error(source, where, "unknown construction '" + c + "'");
    return cfg;
  }
  if (!j.is_object())
    config_error(source, where, "must be a construction name or an object");
  if (auto it = j.find("construction"); it != j.end()) {
    const std::string c = it->get<std::string>();
    if (c == "cheapest_insertion")
      cfg.construction = SolverConfig::Construction::CheapestInsertion;
    else if (c == "nearest_neighbor")
      cfg.construction = SolverConfig::Construction::NearestNeighbor;
    else
      config_error(source, where, "unknown construction '" + c + "'");
  }
  if (auto it = j.find("moves"); it != j.end()) {
    if (!it->is_array())
      config_error(source, where, "'moves' must be an array (empty for construction only)");
    cfg.moves.clear();
    for (const auto& m : *it) {
      const std::string name = m.get<std::string>();
      if (name == "relocate")
        cfg.moves.push_back(SolverConfig::Move::Relocate);
      else if (name == "two_opt")
        cfg.moves.push_back(SolverConfig::Move::TwoOptReverse);
      else if (name == "or_opt2")
        cfg.moves.push_back(SolverConfig::Move::OrOpt2);
      else if (name == "or_opt3")
        cfg.moves.push_back(SolverConfig::Move::OrOpt3);
      else
        config_error(source, where, "unknown move '" + name + "'");
    }
  }
  cfg.max_passes = static_cast<int>(get_int_or(j, "max_passes", cfg.max_passes, source, where));
  cfg.improvement_epsilon =
      get_num_or(j, "improvement_epsilon", cfg.improvement_epsilon, source, where);
  cfg.validate();
  return cfg;
}

PolicyParams parse_policy(const json& j, std::size_t index, const std::string& source) {
  const std::string where = "policies[" + std::to_string(index) + "]";
  if (j.is_string()) return policy_preset(j.get<std::string>());
  if (!j.is_object()) config_error(source, where, "must be a preset name or an object");
  PolicyParams p = policy_preset(get_str(j, "preset", source, where));
  bool overridden = false;
  if (auto it = j.find("p"); it != j.end()) {
    overridden = true;
    if (it->is_string() && it->get<std::string>() == "inf")
      p.p = std::numeric_limits<double>::infinity();
    else if (it->is_number())
      p.p = it->get<double>();
    else
      config_error(source, where, "'p' must be a number or \"inf\"");
  }
  if (auto it = j.find("eta"); it != j.end()) {
    overridden = true;
    p.eta = it->get<double>();
  }
  if (auto it = j.find("include_latent"); it != j.end()) {
    overridden = true;
    p.include_latent = it->get<bool>();
  }
  if (auto it = j.find("random_fragment"); it != j.end()) {
    overridden = true;
    p.random_fragment = it->get<bool>();
  }
  if (auto it = j.find("sector_count"); it != j.end()) {
    overridden = true;
    p.sector_count = static_cast<int>(it->get<long long>());
  }
  if (auto it = j.find("label"); it != j.end()) {
    p.label = it->get<std::string>();
  } else if (overridden) {
    config_error(source, where, "overriding preset fields requires an explicit 'label'");
  }
  return p;
}

}  // namespace

void ExperimentConfig::validate() const {
  const auto fail = [this](const std::string& what) {
    throw std::invalid_argument("experiment '" + name + "': " + what);
  };
  if (!path_safe(name)) fail("name must be non-empty and filesystem-safe");
  if (n_tasks <= 0) fail("n_tasks must be positive");
  if (!(s_bar > 0.0)) fail("s_bar must be positive");
  if (s_std < 0.0) fail("s_std must be non-negative");
  if (m < 1) fail("m must be at least 1");
  if (!(speed > 0.0)) fail("speed must be positive");
  if (policies.empty()) fail("policies must be non-empty");
  std::set<std::string> labels;
  for (const auto& p : policies) {
    if (!path_safe(p.label)) fail("policy label '" + p.label + "' is not filesystem-safe");
    if (!labels.insert(p.label).second) fail("duplicate policy label '" + p.label + "'");
  }
  if (rho_grid.empty()) fail("rho_grid must be non-empty");
  for (double r : rho_grid)
    if (!(r > 0.0)) fail("rho values must be positive");
  if (seeds.empty()) fail("seeds must be non-empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    fail("seeds must be unique");
  if (warmup_fraction < 0.0 || warmup_fraction >= 1.0) fail("warmup_fraction outside [0, 1)");
  if (labels.find(reference_policy) == labels.end())
    fail("reference_policy '" + reference_policy + "' is not among the policy labels");
  if (out_dir.empty()) fail("out_dir must be non-empty");
  solver.validate();
  if (env.kind == EnvSpec::Kind::GridRoadmap) {
    if (env.cols < 2 || env.rows < 2) fail("grid roadmap needs at least 2x2 nodes");
    if (!(env.cell_time > 0.0)) fail("cell_time must be positive");
    if (env.jitter < 0.0 || env.jitter >= 1.0) fail("jitter outside [0, 1)");
  }
  if (env.kind == EnvSpec::Kind::Euclidean) {
    if (!(env.width > 0.0) || !(env.height > 0.0)) fail("region sides must be positive");
  }
}

ExperimentConfig parse_experiment_json(const std::string& text, const std::string& source_name,
                                       const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(source_name + ": JSON syntax error at " +
                                locate(text, e.byte) + ": " + e.what());
  }
  const std::string& src = source_name;
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  cfg.config_hash = hex64(fnv1a(j.dump()));
  cfg.name = get_str(j, "name", src, "top level");
  cfg.env = parse_env(require(j, "environment", src, "top level"), src);

  const json& wl = require(j, "workload", src, "top level");
  cfg.n_tasks = static_cast<int>(get_int(wl, "n_tasks", src, "workload"));
  cfg.s_bar = get_num(wl, "s_bar", src, "workload");
  cfg.s_std = get_num_or(wl, "s_std", 0.0, src, "workload");
  cfg.m = static_cast<int>(get_int_or(wl, "m", 1, src, "workload"));
  cfg.speed = get_num_or(wl, "speed", 1.0, src, "workload");
  cfg.spatial = parse_spatial(require(wl, "spatial", src, "workload"), src);

  const json& pol = require(j, "policies", src, "top level");
  if (!pol.is_array() || pol.empty())
    config_error(src, "policies", "must be a non-empty array");
  for (std::size_t i = 0; i < pol.size(); ++i) {
    try {
      cfg.policies.push_back(parse_policy(pol[i], i, src));
    } catch (const std::invalid_argument& e) {
      config_error(src, "policies[" + std::to_string(i) + "]", e.what());
    }
  }

  if (auto it = j.find("solver"); it != j.end()) cfg.solver = parse_solver(*it, src);

  const json& grid = require(j, "rho_grid", src, "top level");
  if (!grid.is_array() || grid.empty())
    config_error(src, "rho_grid", "must be a non-empty array");
  for (const auto& r : grid) cfg.rho_grid.push_back(r.get<double>());

  const json& seeds = require(j, "seeds", src, "top level");
  if (!seeds.is_array() || seeds.empty())
    config_error(src, "seeds", "must be a non-empty array");
  for (const auto& s : seeds) cfg.seeds.push_back(s.get<std::uint64_t>());

  cfg.warmup_fraction = get_num_or(j, "warmup_fraction", 0.0, src, "top level");
  cfg.reference_policy = get_str(j, "reference_policy", src, "top level");
  cfg.out_dir = get_str(j, "out_dir", src, "top level");
  cfg.bound_report = get_bool_or(j, "bound_report", false, src, "top level");
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  const std::string text = read_text_file(path);
  const fs::path p(path);
  return parse_experiment_json(text, p.filename().string(), p.parent_path().string());
}

namespace {

std::string resolve(const std::string& base_dir, const std::string& rel) {
  fs::path p(rel);
  if (p.is_absolute() || base_dir.empty()) return rel;
  return (fs::path(base_dir) / p).string();
}

Environment build_grid_roadmap(const ExperimentConfig::EnvSpec& s) {
  RoadmapGraph g;
  const auto in_hole = [&s](int c, int r) {
    return s.has_hole && c >= s.hole_col && c < s.hole_col + s.hole_cols && r >= s.hole_row &&
           r < s.hole_row + s.hole_rows;
  };
  const auto node_name = [](int c, int r) {
    return "n" + std::to_string(c) + "_" + std::to_string(r);
  };
  for (int r = 0; r < s.rows; ++r)
    for (int c = 0; c < s.cols; ++c)
      if (!in_hole(c, r))
        g.add_node(node_name(c, r), {static_cast<double>(c) * s.cell_time,
                                     static_cast<double>(r) * s.cell_time});
  RngStream rng(mix_seed(s.seed, 0xE0));
  const auto edge_time = [&rng, &s]() {
    return s.cell_time * (1.0 + s.jitter * (2.0 * rng.uniform01() - 1.0));
  };
  for (int r = 0; r < s.rows; ++r)
    for (int c = 0; c + 1 < s.cols; ++c)
      if (!in_hole(c, r) && !in_hole(c + 1, r))
        g.add_edge(node_name(c, r), node_name(c + 1, r), edge_time());
  for (int r = 0; r + 1 < s.rows; ++r)
    for (int c = 0; c < s.cols; ++c)
      if (!in_hole(c, r) && !in_hole(c, r + 1))
        g.add_edge(node_name(c, r), node_name(c, r + 1), edge_time());
  g.finalize();
  return Environment::roadmap(std::move(g));
}

}  // namespace

Environment build_environment(const ExperimentConfig::EnvSpec& spec,
                              const std::string& base_dir) {
  switch (spec.kind) {
    case ExperimentConfig::EnvSpec::Kind::Euclidean:
      return Environment::euclidean(spec.width, spec.height);
    case ExperimentConfig::EnvSpec::Kind::RoadmapCsv:
      return Environment::roadmap(RoadmapGraph::from_csv(resolve(base_dir, spec.nodes_path),
                                                         resolve(base_dir, spec.edges_path)));
    case ExperimentConfig::EnvSpec::Kind::GridRoadmap:
      return build_grid_roadmap(spec);
  }
  throw std::logic_error("unreachable environment kind");
}

SpatialLaw build_spatial_law(const ExperimentConfig::SpatialSpec& spec, const Environment& env,
                             const std::string& base_dir) {
  switch (spec.kind) {
    case ExperimentConfig::SpatialSpec::Kind::RegionUniform:
      return SpatialLaw::region_uniform();
    case ExperimentConfig::SpatialSpec::Kind::NodeUniform:
      return SpatialLaw::node_uniform();
    case ExperimentConfig::SpatialSpec::Kind::NodeBlobs: {
      if (env.is_euclidean())
        throw std::invalid_argument("node_blobs spatial law needs a roadmap environment");
      const RoadmapGraph& g = env.graph();
      std::vector<double> w(static_cast<std::size_t>(g.size()), 0.0);
      for (int i = 0; i < g.size(); ++i) {
        double v = spec.floor;
        for (const auto& b : spec.blobs) {
          const double d = distance(g.node_coords(i), {b.x, b.y});
          v += b.weight * std::exp(-d * d / (2.0 * b.sigma * b.sigma));
        }
        w[static_cast<std::size_t>(i)] = v;
      }
      return SpatialLaw::node_weighted(std::move(w));
    }
    case ExperimentConfig::SpatialSpec::Kind::RequestsCsv:
      return SpatialLaw::from_requests_csv(env, resolve(base_dir, spec.requests_path));
  }
  throw std::logic_error("unreachable spatial kind");
}

namespace {

struct Cell {
  std::size_t policy_index = 0;
  double rho = 0.0;
  std::uint64_t seed = 0;
  std::string key;  // label/rho_<rho>/seed_<seed>
};

json stats_to_json(const WaitStats& s) {
  json j;
  j["mean"] = s.mean;
  j["std"] = s.std_dev;
  j["median"] = s.median;
  j["q25"] = s.q25;
  j["q75"] = s.q75;
  j["p95"] = s.p95;
  j["max"] = s.max;
  j["count"] = s.count;
  return j;
}

WaitStats stats_from_json(const json& j) {
  WaitStats s;
  s.mean = j.at("mean").get<double>();
  s.std_dev = j.at("std").get<double>();
  s.median = j.at("median").get<double>();
  s.q25 = j.at("q25").get<double>();
  s.q75 = j.at("q75").get<double>();
  s.p95 = j.at("p95").get<double>();
  s.max = j.at("max").get<double>();
  s.count = j.at("count").get<std::size_t>();
  return s;
}

// Per-vehicle wait stats with the same warmup rule as the pooled cell stats,
// applied within each vehicle's own arrival order.
std::vector<VehicleCellStats> vehicle_stats(const SimulationTrace& trace,
                                            const FleetResult& fleet, double warmup) {
  std::map<int, std::vector<std::pair<double, double>>> by_vid;
  for (const auto& w : trace.waits) by_vid[w.vehicle_id].push_back({w.arrival_time, w.wait()});
  std::vector<VehicleCellStats> out;
  for (const auto& part : fleet.partitions) {
    const int vid = part.vehicle_id;
    VehicleCellStats v;
    v.vehicle_id = vid;
    v.task_count = fleet.task_counts.at(static_cast<std::size_t>(vid));
    v.load_factor = fleet.load_factors.at(static_cast<std::size_t>(vid));
    auto it = by_vid.find(vid);
    if (it != by_vid.end()) {
      auto& pairs = it->second;
      std::sort(pairs.begin(), pairs.end());
      const auto drop = static_cast<std::size_t>(warmup * static_cast<double>(pairs.size()));
      std::vector<double> waits;
      for (std::size_t i = drop; i < pairs.size(); ++i) waits.push_back(pairs[i].second);
      v.stats = summarize_values(std::move(waits));
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::string vehicle_csv_header() {
  return "vehicle_id,task_count,load_factor,mean,std,median,q25,q75,p95,max,count";
}

std::string vehicle_csv_row(const VehicleCellStats& v) {
  std::string row = format_int(v.vehicle_id);
  row += ',';
  row += format_int(v.task_count);
  row += ',';
  row += format_double(v.load_factor);
  for (double x : {v.stats.mean, v.stats.std_dev, v.stats.median, v.stats.q25, v.stats.q75,
                   v.stats.p95, v.stats.max}) {
    row += ',';
    row += format_double(x);
  }
  row += ',';
  row += format_int(static_cast<long long>(v.stats.count));
  return row;
}

// Envelope report for one generalized-policy single-vehicle trace: the
// length coefficient is fit on the first half of the run at the policy's
// growth exponent, then the recursion envelope is checked on the rest.
std::string cell_bound_json(const SimulationTrace& trace, const PolicyParams& policy,
                            double lambda, double rho, const Environment& env, double speed,
                            double s_bar) {
  json j;
  try {
    const double kappa =
        std::isinf(policy.p) ? 0.5 : queue_growth_exponent(policy.p, 0.5);
    const double beta = fit_length_coefficient(trace, kappa, 0.5);
    EnvelopeConfig ec;
    ec.lambda = lambda;
    ec.eta = policy.eta;
    ec.rho = rho;
    ec.max_task_time = env.geometric_constants(s_bar, speed).max_task_time;
    ec.beta = beta;
    ec.kappa = kappa;
    const EnvelopeReport rep = check_recursion_envelope(trace, ec);
    j = json::parse(envelope_report_json(rep));
    j["beta"] = beta;
    j["kappa"] = kappa;
    j["lambda"] = lambda;
    j["status"] = "ok";
  } catch (const InsufficientDataError& e) {
    j = json::object();
    j["status"] = "insufficient_data";
    j["reason"] = e.what();
  }
  return j.dump(2);
}

struct Manifest {
  std::string config_hash;
  std::set<std::string> completed;
};

Manifest load_manifest(const fs::path& path) {
  Manifest m;
  if (!fs::exists(path)) return m;
  try {
    const json j = json::parse(read_text_file(path.string()));
    m.config_hash = j.value("config_hash", std::string());
    if (auto it = j.find("completed"); it != j.end())
      for (const auto& c : *it) m.completed.insert(c.get<std::string>());
  } catch (const std::exception& e) {
    log_warn(std::string("ignoring unreadable manifest: ") + e.what());
    m = Manifest{};
  }
  return m;
}

void save_manifest(const fs::path& path, const std::string& name, const std::string& hash,
                   const std::set<std::string>& completed) {
  json j;
  j["name"] = name;
  j["version"] = kToolVersion;
  j["config_hash"] = hash;
  j["completed"] = completed;
  write_text_file(path.string(), j.dump(2) + "\n");
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const ExperimentOptions& opts) {
  config.validate();
  const Environment env = build_environment(config.env, config.base_dir);
  for (const auto& p : config.policies) p.validate(env);
  const SpatialLaw law = build_spatial_law(config.spatial, env, config.base_dir);

  std::vector<Cell> cells;
  for (std::size_t pi = 0; pi < config.policies.size(); ++pi)
    for (double rho : config.rho_grid)
      for (std::uint64_t seed : config.seeds) {
        Cell c;
        c.policy_index = pi;
        c.rho = rho;
        c.seed = seed;
        c.key = config.policies[pi].label + "/rho_" + format_double(rho) + "/seed_" +
                std::to_string(seed);
        cells.push_back(std::move(c));
      }

  ExperimentResult result;
  const fs::path out_root(opts.out_override.empty() ? config.out_dir : opts.out_override);
  result.out_dir = out_root.string();
  result.cells.resize(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    result.cells[i].policy = config.policies[cells[i].policy_index].label;
    result.cells[i].rho = cells[i].rho;
    result.cells[i].seed = cells[i].seed;
  }
  if (opts.dry_run) return result;

  fs::create_directories(out_root);
  const fs::path manifest_path = out_root / "manifest.json";
  Manifest manifest = load_manifest(manifest_path);
  if (manifest.config_hash != config.config_hash) manifest = Manifest{};
  manifest.config_hash = config.config_hash;

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::atomic<int> executed{0}, skipped{0};

  const auto worker = [&]() {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const Cell& cell = cells[i];
      const PolicyParams& policy = config.policies[cell.policy_index];
      const fs::path cell_dir = out_root / cell.key;
      const fs::path stats_path = cell_dir / "stats.json";
      try {
        bool restored = false;
        {
          std::lock_guard<std::mutex> lock(mu);
          restored = manifest.completed.count(cell.key) > 0;
        }
        if (restored && fs::exists(stats_path)) {
          const json j = json::parse(read_text_file(stats_path.string()));
          result.cells[i].stats = stats_from_json(j.at("stats"));
          if (auto it = j.find("vehicles"); it != j.end()) {
            for (const auto& vj : *it) {
              VehicleCellStats v;
              v.vehicle_id = vj.at("vehicle_id").get<int>();
              v.task_count = vj.at("task_count").get<int>();
              v.load_factor = vj.at("load_factor").get<double>();
              v.stats = stats_from_json(vj.at("stats"));
              result.cells[i].vehicles.push_back(std::move(v));
            }
          }
          skipped.fetch_add(1);
          log_info("cell " + cell.key + " restored from previous run");
          continue;
        }

        const auto t0 = std::chrono::steady_clock::now();
        WorkloadSpec spec;
        spec.n_tasks = config.n_tasks;
        spec.rho = cell.rho;
        spec.s_bar = config.s_bar;
        spec.s_std = config.s_std;
        spec.m = config.m;
        spec.speed = config.speed;
        spec.spatial = law;
        spec.seed = cell.seed;
        const auto tasks = generate_workload(spec, env);

        SimulationTrace trace;
        std::vector<VehicleCellStats> vehicles;
        if (config.m == 1) {
          SimOptions so;
          so.policy_seed = cell.seed;
          trace = run_single(tasks, policy, config.solver, env, config.speed, config.s_bar, so);
        } else {
          FleetOptions fo;
          fo.policy_seed = cell.seed;
          fo.partition_seed = cell.seed;
          FleetResult fleet = run_fleet(tasks, {policy}, config.m, config.solver, env,
                                        config.speed, config.s_bar, arrival_rate(spec), fo);
          vehicles = vehicle_stats(fleet.trace, fleet, config.warmup_fraction);
          trace = std::move(fleet.trace);
        }

        fs::create_directories(cell_dir);
        write_text_file((cell_dir / "waits.csv").string(), waits_csv(trace));
        write_text_file((cell_dir / "queue.csv").string(), queue_csv(trace));
        result.cells[i].stats = summarize(trace, config.warmup_fraction);
        result.cells[i].vehicles = vehicles;

        json sj;
        sj["policy"] = policy.label;
        sj["rho"] = cell.rho;
        sj["seed"] = cell.seed;
        sj["stats"] = stats_to_json(result.cells[i].stats);
        if (!vehicles.empty()) {
          json vl = json::array();
          std::string vcsv = vehicle_csv_header() + "\n";
          for (const auto& v : vehicles) {
            json vj;
            vj["vehicle_id"] = v.vehicle_id;
            vj["task_count"] = v.task_count;
            vj["load_factor"] = v.load_factor;
            vj["stats"] = stats_to_json(v.stats);
            vl.push_back(std::move(vj));
            vcsv += vehicle_csv_row(v) + "\n";
          }
          sj["vehicles"] = std::move(vl);
          write_text_file((cell_dir / "vehicles.csv").string(), vcsv);
        }
        write_text_file(stats_path.string(), sj.dump(2) + "\n");

        if (config.bound_report && config.m == 1 &&
            policy.kind == PolicyParams::Kind::Generalized) {
          write_text_file((cell_dir / "bound.json").string(),
                          cell_bound_json(trace, policy, arrival_rate(spec), cell.rho, env,
                                          config.speed, config.s_bar) +
                              "\n");
        }

        {
          std::lock_guard<std::mutex> lock(mu);
          manifest.completed.insert(cell.key);
          save_manifest(manifest_path, config.name, config.config_hash, manifest.completed);
        }
        executed.fetch_add(1);
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
        log_info("cell " + cell.key + " done in " + std::to_string(ms) + " ms, mean wait " +
                 format_double(result.cells[i].stats.mean));
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };

  const int jobs = std::max(1, opts.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int n = std::min<int>(jobs, static_cast<int>(cells.size()));
    pool.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  result.executed = executed.load();
  result.skipped = skipped.load();

  // Grid-order summary table.
  std::string summary = summary_csv_header() + "\n";
  for (const auto& c : result.cells)
    summary += summary_csv_row(c.policy, c.rho, c.seed, c.stats) + "\n";
  write_text_file((out_root / "summary.csv").string(), summary);

  if (config.m > 1) {
    std::string vs = "policy,rho,seed," + vehicle_csv_header() + "\n";
    for (const auto& c : result.cells)
      for (const auto& v : c.vehicles)
        vs += c.policy + "," + format_double(c.rho) + "," + std::to_string(c.seed) + "," +
              vehicle_csv_row(v) + "\n";
    write_text_file((out_root / "vehicle_summary.csv").string(), vs);
  }

  // Pooled per-rho means (seed-weighted by task count) and their ratios
  // against the reference policy, then the rho-averaged ratio per policy.
  json comparison;
  comparison["reference"] = config.reference_policy;
  comparison["warmup_fraction"] = config.warmup_fraction;
  std::map<std::string, std::map<double, double>> pooled;  // policy -> rho -> mean
  for (const auto& p : config.policies) {
    for (double rho : config.rho_grid) {
      double weighted = 0.0;
      double count = 0.0;
      for (const auto& c : result.cells) {
        if (c.policy != p.label || c.rho != rho) continue;
        weighted += c.stats.mean * static_cast<double>(c.stats.count);
        count += static_cast<double>(c.stats.count);
      }
      if (count == 0.0)
        throw std::runtime_error("no wait data for policy " + p.label + " at rho " +
                                 format_double(rho));
      pooled[p.label][rho] = weighted / count;
    }
  }
  json per_rho = json::object();
  for (double rho : config.rho_grid) {
    const double ref_mean = pooled.at(config.reference_policy).at(rho);
    if (!(ref_mean > 0.0))
      throw std::runtime_error("reference policy has zero mean wait at rho " +
                               format_double(rho));
    json row = json::object();
    for (const auto& p : config.policies) {
      const double mean = pooled.at(p.label).at(rho);
      json e;
      e["mean"] = mean;
      e["ratio"] = mean / ref_mean;
      row[p.label] = std::move(e);
    }
    per_rho[format_double(rho)] = std::move(row);
  }
  comparison["per_rho"] = std::move(per_rho);
  json averaged = json::object();
  for (const auto& p : config.policies) {
    double sum = 0.0;
    for (double rho : config.rho_grid)
      sum += pooled.at(p.label).at(rho) / pooled.at(config.reference_policy).at(rho);
    averaged[p.label] = sum / static_cast<double>(config.rho_grid.size());
  }
  comparison["rho_averaged_ratios"] = std::move(averaged);
  write_text_file((out_root / "comparison.json").string(), comparison.dump(2) + "\n");

  save_manifest(manifest_path, config.name, config.config_hash, manifest.completed);
  return result;
}

}  // namespace dvrp

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dvrp/checks.hpp"
#include "dvrp/csv.hpp"
#include "dvrp/experiment.hpp"
#include "dvrp/sim.hpp"
#include "dvrp/version.hpp"

namespace fs = std::filesystem;

namespace {

int cmd_run(const std::string& config_path, bool dry_run, int jobs, const std::string& out) {
  const dvrp::ExperimentConfig config = dvrp::load_experiment_config(config_path);
  dvrp::ExperimentOptions opts;
  opts.dry_run = dry_run;
  opts.jobs = jobs;
  opts.out_override = out;
  const dvrp::ExperimentResult result = dvrp::run_experiment(config, opts);
  if (dry_run) {
    for (const auto& c : result.cells)
      std::cout << c.policy << " rho=" << dvrp::format_double(c.rho) << " seed=" << c.seed
                << "\n";
    std::cout << result.cells.size() << " cells would run into " << result.out_dir << "\n";
    return 0;
  }
  std::cout << "experiment " << config.name << ": " << result.executed << " cells run, "
            << result.skipped << " restored\n";
  std::cout << "artifacts in " << result.out_dir << " (summary.csv, comparison.json)\n";
  return 0;
}

int cmd_check(const std::string& filter, const std::string& out_dir) {
  const auto outcomes = dvrp::run_checks(filter);
  if (outcomes.empty()) {
    std::cerr << "no check matches filter '" << filter << "'\n";
    return 2;
  }
  fs::create_directories(out_dir);
  bool all_pass = true;
  for (const auto& o : outcomes) {
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << o.name << ": " << o.summary << "\n";
    all_pass = all_pass && o.pass;
    nlohmann::json j;
    j["name"] = o.name;
    j["pass"] = o.pass;
    j["summary"] = o.summary;
    j["detail"] = nlohmann::json::parse(o.detail_json);
    dvrp::write_text_file((fs::path(out_dir) / (o.name + ".json")).string(), j.dump(2) + "\n");
  }
  return all_pass ? 0 : 1;
}

int cmd_partition(const std::string& requests_path, int m, std::uint64_t seed,
                  const std::string& nodes_path, const std::string& edges_path) {
  if (nodes_path.empty() != edges_path.empty())
    throw std::invalid_argument("--nodes and --edges must be given together");
  const dvrp::CsvTable table = dvrp::read_csv(requests_path);
  const bool has_node =
      std::find(table.header.begin(), table.header.end(), "node_id") != table.header.end();

  dvrp::Environment env = dvrp::Environment::euclidean(1.0, 1.0);
  std::vector<dvrp::Pose> poses;
  if (has_node) {
    if (nodes_path.empty())
      throw std::invalid_argument("node_id requests need --nodes and --edges");
    env = dvrp::Environment::roadmap(dvrp::RoadmapGraph::from_csv(nodes_path, edges_path));
    const std::size_t id_col = table.column("node_id");
    for (const auto& row : table.rows) {
      const int idx = env.graph().node_index(row[id_col]);
      if (idx < 0) throw std::invalid_argument("unknown node id in requests: " + row[id_col]);
      poses.push_back(env.node_pose(idx));
    }
  } else {
    const std::size_t x_col = table.column("x");
    const std::size_t y_col = table.column("y");
    for (const auto& row : table.rows)
      poses.push_back(dvrp::Pose{{std::stod(row[x_col]), std::stod(row[y_col])}, -1});
  }
  if (poses.empty()) throw std::invalid_argument("requests file has no rows");

  const auto parts = dvrp::k_means_partition(poses, m, seed, env, 1.0);
  std::vector<int> counts(parts.size(), 0);
  std::cout << (has_node ? "node_id,vehicle_id" : "x,y,vehicle_id") << "\n";
  for (const auto& p : poses) {
    const int vid = dvrp::nearest_partition(parts, p, env, 1.0);
    ++counts[static_cast<std::size_t>(vid)];
    if (has_node)
      std::cout << env.graph().node_id(p.node) << "," << vid << "\n";
    else
      std::cout << dvrp::format_double(p.pt.x) << "," << dvrp::format_double(p.pt.y) << ","
                << vid << "\n";
  }
  for (const auto& part : parts) {
    std::cerr << "vehicle " << part.vehicle_id << ": depot ("
              << dvrp::format_double(part.depot.pt.x) << ", "
              << dvrp::format_double(part.depot.pt.y) << ")";
    if (part.depot.node >= 0) std::cerr << " node " << env.graph().node_id(part.depot.node);
    std::cerr << ", " << counts[static_cast<std::size_t>(part.vehicle_id)] << " requests\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"batch routing policies for stochastic service tasks"};
  app.set_version_flag("--version", std::string(dvrp::kToolVersion));
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment config");
  std::string config_path;
  bool dry_run = false;
  int jobs = 1;
  std::string out_override;
  run->add_option("config", config_path, "experiment JSON config")->required();
  run->add_flag("--dry-run", dry_run, "list grid cells without running");
  run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  run->add_option("--out", out_override, "override the config's out_dir");

  auto* check = app.add_subcommand("check", "run built-in validation suites");
  std::string filter;
  std::string check_out = "out/checks";
  check->add_option("--filter", filter, "run only suites whose name contains this");
  check->add_option("--out", check_out, "directory for JSON reports");

  auto* partition = app.add_subcommand("partition", "k-means partition of a requests file");
  std::string requests_path, nodes_path, edges_path;
  int m = 1;
  std::uint64_t seed = 1;
  partition->add_option("requests", requests_path, "requests.csv with x,y or node_id")
      ->required();
  partition->add_option("--m", m, "number of partitions")->required()
      ->check(CLI::PositiveNumber);
  partition->add_option("--seed", seed, "partition seed");
  partition->add_option("--nodes", nodes_path, "nodes.csv for node_id requests");
  partition->add_option("--edges", edges_path, "edges.csv for node_id requests");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, dry_run, jobs, out_override);
    if (check->parsed()) return cmd_check(filter, check_out);
    if (partition->parsed()) return cmd_partition(requests_path, m, seed, nodes_path, edges_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

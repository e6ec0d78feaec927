#include "dvrp/workload.hpp"

#include <cmath>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "dvrp/analysis.hpp"
#include "dvrp/csv.hpp"

using namespace dvrp;

namespace {

WorkloadSpec base_spec(int n, double rho, std::uint64_t seed) {
  WorkloadSpec s;
  s.n_tasks = n;
  s.rho = rho;
  s.s_bar = 1.0;
  s.s_std = 0.1;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("arrival rate is rho times fleet size over mean service") {
  WorkloadSpec s = base_spec(1, 0.9, 0);
  CHECK(arrival_rate(s) == doctest::Approx(0.9).epsilon(1e-12));
  s.rho = 0.5;
  s.s_bar = 2.0;
  s.m = 4;
  CHECK(arrival_rate(s) == doctest::Approx(1.0).epsilon(1e-12));
  s.rho = 0.74;
  s.s_bar = 600.0;
  s.m = 6;
  CHECK(arrival_rate(s) == doctest::Approx(0.0074).epsilon(1e-12));
}

TEST_CASE("spec validation rejects nonsense but allows overload factors") {
  WorkloadSpec s = base_spec(10, 0.5, 1);
  CHECK_NOTHROW(s.validate());
  s.rho = 1.1;  // unstable control runs need this
  CHECK_NOTHROW(s.validate());
  s.rho = 0.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = base_spec(-1, 0.5, 1);
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = base_spec(10, 0.5, 1);
  s.s_bar = 0.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = base_spec(10, 0.5, 1);
  s.m = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = base_spec(10, 0.5, 1);
  s.s_std = -0.1;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("zero tasks yields an empty stream") {
  Environment env = Environment::euclidean(1.0, 1.0);
  CHECK(generate_workload(base_spec(0, 0.5, 1), env).empty());
}

TEST_CASE("tasks are ordered with unique ids and positive durations") {
  Environment env = Environment::euclidean(1.0, 1.0);
  WorkloadSpec s = base_spec(5000, 0.8, 42);
  s.s_std = 0.5;  // wide spread so the truncation actually fires
  auto tasks = generate_workload(s, env);
  REQUIRE(tasks.size() == 5000);
  std::set<int> ids;
  double prev = 0.0;
  for (const auto& t : tasks) {
    ids.insert(t.id);
    CHECK(t.arrival_time >= prev);
    prev = t.arrival_time;
    CHECK(t.service_duration >= s.s_bar / 100.0);
    CHECK(env.valid_pose(t.location));
  }
  CHECK(ids.size() == 5000);
}

TEST_CASE("inter-arrival gaps match the configured rate") {
  Environment env = Environment::euclidean(1.0, 1.0);
  WorkloadSpec s = base_spec(3000, 0.9, 7);
  auto tasks = generate_workload(s, env);
  double prev = 0.0, total = 0.0;
  for (const auto& t : tasks) {
    total += t.arrival_time - prev;
    prev = t.arrival_time;
  }
  double mean_gap = total / 3000.0;
  CHECK(mean_gap == doctest::Approx(1.0 / 0.9).epsilon(0.05));
}

TEST_CASE("inter-arrival gaps pass a ks test against the exponential law") {
  Environment env = Environment::euclidean(1.0, 1.0);
  const double critical_1pct = 1.628 / std::sqrt(3000.0);
  int passes = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    WorkloadSpec s = base_spec(3000, 0.9, seed);
    auto tasks = generate_workload(s, env);
    std::vector<double> gaps;
    double prev = 0.0;
    for (const auto& t : tasks) {
      gaps.push_back(t.arrival_time - prev);
      prev = t.arrival_time;
    }
    if (ks_exponential(std::move(gaps), arrival_rate(s)) < critical_1pct) ++passes;
  }
  CHECK(passes >= 9);
}

TEST_CASE("uniform spatial law fills the region evenly") {
  Environment env = Environment::euclidean(1.0, 1.0);
  auto tasks = generate_workload(base_spec(3000, 0.9, 12), env);
  double mx = 0.0, my = 0.0;
  for (const auto& t : tasks) {
    mx += t.location.pt.x;
    my += t.location.pt.y;
  }
  mx /= 3000.0;
  my /= 3000.0;
  CHECK(std::abs(mx - 0.5) < 0.02);
  CHECK(std::abs(my - 0.5) < 0.02);
}

TEST_CASE("same seed reproduces the identical task list") {
  Environment env = Environment::euclidean(1.0, 1.0);
  auto a = generate_workload(base_spec(500, 0.7, 99), env);
  auto b = generate_workload(base_spec(500, 0.7, 99), env);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].arrival_time == b[i].arrival_time);
    CHECK(a[i].service_duration == b[i].service_duration);
    CHECK(a[i].location.pt == b[i].location.pt);
  }
}

TEST_CASE("changing the spatial law leaves arrivals and services untouched") {
  Environment env = Environment::euclidean(1.0, 1.0);
  WorkloadSpec uniform = base_spec(300, 0.6, 31);
  WorkloadSpec pinned = uniform;
  pinned.spatial.kind = SpatialLaw::Kind::PointSet;
  pinned.spatial.points = {{0.25, 0.25}};
  auto a = generate_workload(uniform, env);
  auto b = generate_workload(pinned, env);
  REQUIRE(a.size() == b.size());
  bool moved = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].arrival_time == b[i].arrival_time);
    CHECK(a[i].service_duration == b[i].service_duration);
    if (!(a[i].location.pt == b[i].location.pt)) moved = true;
    CHECK(b[i].location.pt == Point{0.25, 0.25});
  }
  CHECK(moved);
}

TEST_CASE("node laws sample graph nodes") {
  RoadmapGraph g;
  g.add_node("a", {0.0, 0.0});
  g.add_node("b", {1.0, 0.0});
  g.add_node("c", {2.0, 0.0});
  g.add_edge("a", "b", 1.0);
  g.add_edge("b", "c", 1.0);
  g.finalize();
  Environment env = Environment::roadmap(std::move(g));

  WorkloadSpec s = base_spec(400, 0.6, 8);
  s.spatial = SpatialLaw::node_uniform();
  for (const auto& t : generate_workload(s, env)) {
    CHECK(t.location.node >= 0);
    CHECK(t.location.node < 3);
  }

  // All the weight on node c pins every sample there.
  s.spatial = SpatialLaw::node_weighted({0.0, 0.0, 1.0});
  for (const auto& t : generate_workload(s, env)) CHECK(t.location.node == 2);
}

TEST_CASE("request files feed the empirical location law") {
  namespace fs = std::filesystem;
  fs::path dir("tmp_test_workload");
  fs::remove_all(dir);
  fs::create_directories(dir);

  Environment env = Environment::euclidean(1.0, 1.0);
  write_text_file((dir / "requests.csv").string(), "x,y\n0.1,0.2\n0.7,0.8\n");
  SpatialLaw law = SpatialLaw::from_requests_csv(env, (dir / "requests.csv").string());
  WorkloadSpec s = base_spec(100, 0.6, 4);
  s.spatial = law;
  for (const auto& t : generate_workload(s, env)) {
    bool known = t.location.pt == Point{0.1, 0.2} || t.location.pt == Point{0.7, 0.8};
    CHECK(known);
  }
  CHECK_THROWS(SpatialLaw::from_requests_csv(env, (dir / "absent.csv").string()));

  RoadmapGraph g;
  g.add_node("a", {0.0, 0.0});
  g.add_node("b", {1.0, 0.0});
  g.add_edge("a", "b", 1.0);
  g.finalize();
  Environment road = Environment::roadmap(std::move(g));
  write_text_file((dir / "node_requests.csv").string(), "node_id\na\na\nb\n");
  SpatialLaw nlaw = SpatialLaw::from_requests_csv(road, (dir / "node_requests.csv").string());
  s.spatial = nlaw;
  for (const auto& t : generate_workload(s, road)) CHECK(t.location.node >= 0);

  write_text_file((dir / "bad.csv").string(), "node_id\nzzz\n");
  CHECK_THROWS(SpatialLaw::from_requests_csv(road, (dir / "bad.csv").string()));
  fs::remove_all(dir);
}

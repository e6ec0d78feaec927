#include "dvrp/environment.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "dvrp/csv.hpp"
#include "dvrp/rng.hpp"

using namespace dvrp;

namespace {

// a -2- b -3- c on a line
RoadmapGraph path_graph() {
  RoadmapGraph g;
  g.add_node("a", {0.0, 0.0});
  g.add_node("b", {2.0, 0.0});
  g.add_node("c", {5.0, 0.0});
  g.add_edge("a", "b", 2.0);
  g.add_edge("b", "c", 3.0);
  g.finalize();
  return g;
}

// Small lattice with uneven edge times, still a shortest-path metric.
RoadmapGraph grid_graph(int cols, int rows) {
  RoadmapGraph g;
  auto name = [](int c, int r) {
    return "n" + std::to_string(c) + "_" + std::to_string(r);
  };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      g.add_node(name(c, r), {static_cast<double>(c), static_cast<double>(r)});
  int k = 0;
  auto w = [&k]() { return 1.0 + 0.13 * (k++ % 5); };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c + 1 < cols; ++c) g.add_edge(name(c, r), name(c + 1, r), w());
  for (int r = 0; r + 1 < rows; ++r)
    for (int c = 0; c < cols; ++c) g.add_edge(name(c, r), name(c, r + 1), w());
  g.finalize();
  return g;
}

}  // namespace

TEST_CASE("euclidean travel time is straight-line distance over speed") {
  Environment env = Environment::euclidean(5.0, 5.0);
  Pose a = env.make_pose({0.0, 0.0});
  Pose b = env.make_pose({3.0, 4.0});
  CHECK(env.travel_time(a, b, 1.0) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(env.travel_time(a, b, 2.0) == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(env.travel_time(a, a, 1.0) == 0.0);
  CHECK_THROWS_AS(env.travel_time(a, b, 0.0), std::invalid_argument);
}

TEST_CASE("roadmap travel time follows shortest paths") {
  Environment env = Environment::roadmap(path_graph());
  const RoadmapGraph& g = env.graph();
  CHECK(g.node_index("a") == 0);
  CHECK(g.node_index("nope") == -1);
  Pose a = env.node_pose(g.node_index("a"));
  Pose c = env.node_pose(g.node_index("c"));
  CHECK(env.travel_time(a, c, 1.0) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(env.travel_time(a, a, 1.0) == 0.0);
  CHECK_THROWS_AS(env.travel_time(Pose{{0.0, 0.0}, -1}, c, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(env.node_pose(99), std::invalid_argument);
}

TEST_CASE("roadmap distance table has zero diagonal and inclusive paths") {
  RoadmapGraph g = grid_graph(4, 3);
  for (int i = 0; i < g.size(); ++i) CHECK(g.time(i, i) == 0.0);
  auto p = g.path(0, g.size() - 1);
  REQUIRE(p.size() >= 2);
  CHECK(p.front() == 0);
  CHECK(p.back() == g.size() - 1);
  double along = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) along += g.time(p[i], p[i + 1]);
  CHECK(along == doctest::Approx(g.time(0, g.size() - 1)).epsilon(1e-12));
}

TEST_CASE("disconnected graphs are rejected at finalize") {
  RoadmapGraph g;
  g.add_node("a", {0.0, 0.0});
  g.add_node("b", {1.0, 0.0});
  g.add_node("lonely", {9.0, 9.0});
  g.add_edge("a", "b", 1.0);
  CHECK_THROWS_AS(g.finalize(), std::invalid_argument);
}

TEST_CASE("graph construction validates ids, loops and edge times") {
  RoadmapGraph g;
  g.add_node("a", {0.0, 0.0});
  CHECK_THROWS_AS(g.add_node("a", {1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(g.add_edge("a", "missing", 1.0), std::invalid_argument);
  CHECK_THROWS_AS(g.add_edge("a", "a", 1.0), std::invalid_argument);
  g.add_node("b", {1.0, 0.0});
  CHECK_THROWS_AS(g.add_edge("a", "b", 0.0), std::invalid_argument);
}

TEST_CASE("travel time is a metric on sampled pose triples") {
  Environment flat = Environment::euclidean(2.0, 1.0);
  Environment road = Environment::roadmap(grid_graph(5, 4));
  const int n_nodes = road.graph().size();
  RngStream rng(11);
  for (int i = 0; i < 1000; ++i) {
    Pose a = flat.make_pose({rng.uniform(0.0, 2.0), rng.uniform(0.0, 1.0)});
    Pose b = flat.make_pose({rng.uniform(0.0, 2.0), rng.uniform(0.0, 1.0)});
    Pose c = flat.make_pose({rng.uniform(0.0, 2.0), rng.uniform(0.0, 1.0)});
    double ab = flat.travel_time(a, b, 1.7);
    CHECK(ab >= 0.0);
    CHECK(ab == flat.travel_time(b, a, 1.7));
    CHECK(flat.travel_time(a, c, 1.7) <= ab + flat.travel_time(b, c, 1.7) + 1e-12);

    Pose u = road.node_pose(rng.uniform_int(0, n_nodes - 1));
    Pose v = road.node_pose(rng.uniform_int(0, n_nodes - 1));
    Pose w = road.node_pose(rng.uniform_int(0, n_nodes - 1));
    double uv = road.travel_time(u, v, 1.0);
    CHECK(uv == road.travel_time(v, u, 1.0));
    CHECK((uv == 0.0) == (u.node == v.node));
    CHECK(road.travel_time(u, w, 1.0) <= uv + road.travel_time(v, w, 1.0) + 1e-12);
  }
}

TEST_CASE("geometric constants of rectangles") {
  Environment unit = Environment::euclidean(1.0, 1.0);
  GeometricConstants c = unit.geometric_constants(1.0, 1.0);
  CHECK(c.area == 1.0);
  CHECK(c.perimeter == 4.0);
  CHECK(c.diameter == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(c.max_task_time == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-12));
  CHECK_FALSE(c.approximate);

  Environment rect = Environment::euclidean(2.0, 1.0);
  GeometricConstants r = rect.geometric_constants(0.0, 1.0);
  CHECK(r.area == 2.0);
  CHECK(r.perimeter == 6.0);
  CHECK(r.diameter == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
}

TEST_CASE("geometric constants of a roadmap come from the time table") {
  Environment env = Environment::roadmap(path_graph());
  GeometricConstants c = env.geometric_constants(10.0, 1.0);
  CHECK(c.max_task_time == doctest::Approx(15.0).epsilon(1e-12));
  CHECK(c.approximate);

  // The diameter field dominates every pairwise travel time.
  const RoadmapGraph& g = env.graph();
  for (int i = 0; i < g.size(); ++i)
    for (int j = 0; j < g.size(); ++j) CHECK(c.diameter >= g.time(i, j));
}

TEST_CASE("region diameter dominates sampled travel times") {
  Environment env = Environment::euclidean(3.0, 2.0);
  GeometricConstants c = env.geometric_constants(0.0, 2.0);
  RngStream rng(5);
  for (int i = 0; i < 500; ++i) {
    Pose a = env.make_pose({rng.uniform(0.0, 3.0), rng.uniform(0.0, 2.0)});
    Pose b = env.make_pose({rng.uniform(0.0, 3.0), rng.uniform(0.0, 2.0)});
    CHECK(env.travel_time(a, b, 2.0) * 2.0 <= c.diameter + 1e-12);
  }
}

TEST_CASE("one sector holds every pose") {
  Environment env = Environment::euclidean(1.0, 1.0);
  SectorFan fan = make_sectors(env, 1);
  RngStream rng(3);
  for (int i = 0; i < 200; ++i)
    CHECK(fan.sector_index({rng.uniform01(), rng.uniform01()}) == 0);
}

TEST_CASE("quadrant sectors split the square around its centroid") {
  Environment env = Environment::euclidean(1.0, 1.0);
  SectorFan fan = make_sectors(env, 4);
  CHECK(fan.sector_index({0.9, 0.9}) == 0);   // first quadrant angle
  CHECK(fan.sector_index({0.1, 0.9}) == 1);
  CHECK(fan.sector_index({0.1, 0.1}) == 2);
  CHECK(fan.sector_index({0.9, 0.1}) == 3);
  CHECK(fan.sector_index({0.5, 0.5}) == 0);   // origin maps to sector zero
}

TEST_CASE("every pose lands in exactly one sector for any fan size") {
  Environment env = Environment::euclidean(1.0, 1.0);
  RngStream rng(17);
  std::vector<Point> pts;
  for (int i = 0; i < 400; ++i) pts.push_back({rng.uniform01(), rng.uniform01()});
  for (int r = 1; r <= 16; ++r) {
    SectorFan fan = make_sectors(env, r);
    for (const Point& p : pts) {
      int s = fan.sector_index(p);
      CHECK(s >= 0);
      CHECK(s < r);
    }
  }
  CHECK_THROWS_AS(make_sectors(env, 0), std::invalid_argument);
}

TEST_CASE("ten equal-angle sectors stay within 5x of each other on uniform poses") {
  // Equal angle, not equal area: corner sectors of the square catch more
  // uniform mass than edge-facing ones, so the spread check is loose.
  Environment env = Environment::euclidean(1.0, 1.0);
  SectorFan fan = make_sectors(env, 10);
  std::vector<int> counts(10, 0);
  RngStream rng(23);
  for (int i = 0; i < 10000; ++i)
    counts[static_cast<std::size_t>(fan.sector_index({rng.uniform01(), rng.uniform01()}))]++;
  int lo = counts[0], hi = counts[0];
  for (int c : counts) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  CHECK(lo > 0);
  CHECK(hi <= 5 * lo);
}

TEST_CASE("waiting pose is the centroid or the most central node") {
  Environment flat = Environment::euclidean(2.0, 1.0);
  CHECK(flat.waiting_pose().pt == Point{1.0, 0.5});

  Environment road = Environment::roadmap(path_graph());
  // Coordinate mean is (7/3, 0); node b at x=2 is nearest.
  CHECK(road.waiting_pose().node == road.graph().node_index("b"));
}

TEST_CASE("roadmaps load from nodes and edges csv files") {
  namespace fs = std::filesystem;
  fs::path dir = fs::path("tmp_test_environment");
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_text_file((dir / "nodes.csv").string(), "id,x,y\na,0,0\nb,2,0\nc,5,0\n");
  write_text_file((dir / "edges.csv").string(), "u,v,travel_time\na,b,2\nb,c,3\n");
  RoadmapGraph g = RoadmapGraph::from_csv((dir / "nodes.csv").string(),
                                          (dir / "edges.csv").string());
  CHECK(g.size() == 3);
  CHECK(g.time(g.node_index("a"), g.node_index("c")) == doctest::Approx(5.0));
  CHECK_THROWS(RoadmapGraph::from_csv((dir / "missing.csv").string(),
                                      (dir / "edges.csv").string()));
  fs::remove_all(dir);
}

TEST_CASE("pose validity distinguishes the two environment kinds") {
  Environment flat = Environment::euclidean(1.0, 1.0);
  CHECK(flat.valid_pose(flat.make_pose({0.5, 0.5})));
  CHECK_FALSE(flat.valid_pose(Pose{{2.0, 0.5}, -1}));
  CHECK_FALSE(flat.valid_pose(Pose{{0.5, 0.5}, 3}));

  Environment road = Environment::roadmap(path_graph());
  CHECK(road.valid_pose(road.node_pose(1)));
  CHECK_FALSE(road.valid_pose(Pose{{0.0, 0.0}, -1}));
  CHECK_THROWS_AS(road.make_pose({0.0, 0.0}), std::logic_error);
  CHECK_THROWS_AS(flat.graph(), std::logic_error);
  CHECK_THROWS_AS(road.region(), std::logic_error);
}

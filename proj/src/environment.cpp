#include "dvrp/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

#include "dvrp/csv.hpp"

namespace dvrp {

bool same_pose(const Pose& a, const Pose& b) {
  if (a.node >= 0 || b.node >= 0) return a.node == b.node;
  return a.pt == b.pt;
}

void RoadmapGraph::add_node(const std::string& id, Point coords) {
  if (finalized_) throw std::invalid_argument("graph already finalized");
  if (node_index(id) >= 0)
    throw std::invalid_argument("duplicate node id: " + id);
  ids_.push_back(id);
  coords_.push_back(coords);
  adjacency_.emplace_back();
}

void RoadmapGraph::add_edge(const std::string& u, const std::string& v,
                            double travel_time) {
  if (finalized_) throw std::invalid_argument("graph already finalized");
  int a = node_index(u);
  int b = node_index(v);
  if (a < 0) throw std::invalid_argument("edge references unknown node: " + u);
  if (b < 0) throw std::invalid_argument("edge references unknown node: " + v);
  if (a == b) throw std::invalid_argument("self-loop edge on node: " + u);
  if (!(travel_time > 0.0))
    throw std::invalid_argument("edge travel time must be positive: " + u +
                                "," + v);
  adjacency_[a].emplace_back(b, travel_time);
  adjacency_[b].emplace_back(a, travel_time);
}

int RoadmapGraph::node_index(const std::string& id) const {
  for (std::size_t i = 0; i < ids_.size(); ++i)
    if (ids_[i] == id) return static_cast<int>(i);
  return -1;
}

void RoadmapGraph::finalize() {
  if (finalized_) return;
  int n = size();
  if (n == 0) throw std::invalid_argument("graph has no nodes");
  dist_.assign(static_cast<std::size_t>(n) * n,
               std::numeric_limits<double>::infinity());
  parent_.assign(static_cast<std::size_t>(n) * n, -1);

  using Item = std::pair<double, int>;
  for (int src = 0; src < n; ++src) {
    double* dist = &dist_[static_cast<std::size_t>(src) * n];
    int* parent = &parent_[static_cast<std::size_t>(src) * n];
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    dist[src] = 0.0;
    heap.emplace(0.0, src);
    while (!heap.empty()) {
      auto [d, u] = heap.top();
      heap.pop();
      if (d > dist[u]) continue;
      for (auto [v, w] : adjacency_[u]) {
        double nd = d + w;
        if (nd < dist[v]) {
          dist[v] = nd;
          parent[v] = u;
          heap.emplace(nd, v);
        }
      }
    }
  }
  for (int v = 0; v < n; ++v) {
    if (std::isinf(dist_[static_cast<std::size_t>(0) * n + v]))
      throw std::invalid_argument("graph is disconnected: no path from " +
                                  ids_[0] + " to " + ids_[v]);
  }
  // The two directions sum the same legs in opposite order and can round
  // differently in the last ulp; pin the table exactly symmetric.
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const std::size_t ab = static_cast<std::size_t>(a) * n + b;
      const std::size_t ba = static_cast<std::size_t>(b) * n + a;
      const double d = std::min(dist_[ab], dist_[ba]);
      dist_[ab] = d;
      dist_[ba] = d;
    }
  finalized_ = true;
}

double RoadmapGraph::time(int a, int b) const {
  if (!finalized_) throw std::logic_error("graph not finalized");
  if (a < 0 || a >= size() || b < 0 || b >= size())
    throw std::invalid_argument("node index out of range");
  return dist_[static_cast<std::size_t>(a) * size() + b];
}

std::vector<int> RoadmapGraph::path(int a, int b) const {
  if (!finalized_) throw std::logic_error("graph not finalized");
  if (a < 0 || a >= size() || b < 0 || b >= size())
    throw std::invalid_argument("node index out of range");
  std::vector<int> rev;
  int cur = b;
  const int* parent = &parent_[static_cast<std::size_t>(a) * size()];
  while (cur != a) {
    rev.push_back(cur);
    cur = parent[cur];
    if (cur < 0) throw std::logic_error("broken predecessor chain");
  }
  rev.push_back(a);
  std::reverse(rev.begin(), rev.end());
  return rev;
}

double RoadmapGraph::max_pairwise_time() const {
  if (!finalized_) throw std::logic_error("graph not finalized");
  double best = 0.0;
  for (double d : dist_) best = std::max(best, d);
  return best;
}

void RoadmapGraph::bounding_box(Point& lo, Point& hi) const {
  lo = {std::numeric_limits<double>::infinity(),
        std::numeric_limits<double>::infinity()};
  hi = {-std::numeric_limits<double>::infinity(),
        -std::numeric_limits<double>::infinity()};
  for (const Point& p : coords_) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
  }
}

RoadmapGraph RoadmapGraph::from_csv(const std::string& nodes_path,
                                    const std::string& edges_path) {
  RoadmapGraph g;
  CsvTable nodes = read_csv(nodes_path);
  std::size_t ci = nodes.column("id");
  std::size_t cx = nodes.column("x");
  std::size_t cy = nodes.column("y");
  for (const auto& row : nodes.rows)
    g.add_node(row[ci], {std::stod(row[cx]), std::stod(row[cy])});

  CsvTable edges = read_csv(edges_path);
  std::size_t cu = edges.column("u");
  std::size_t cv = edges.column("v");
  std::size_t ct = edges.column("travel_time");
  for (const auto& row : edges.rows)
    g.add_edge(row[cu], row[cv], std::stod(row[ct]));

  g.finalize();
  return g;
}

Environment Environment::euclidean(double width, double height) {
  if (!(width > 0.0) || !(height > 0.0))
    throw std::invalid_argument("region sides must be positive");
  Environment env;
  env.impl_ = EuclideanRegion{width, height};
  return env;
}

Environment Environment::roadmap(RoadmapGraph graph) {
  graph.finalize();
  Environment env;
  env.impl_ = std::move(graph);
  return env;
}

bool Environment::is_euclidean() const {
  return std::holds_alternative<EuclideanRegion>(impl_);
}

const EuclideanRegion& Environment::region() const {
  if (!is_euclidean())
    throw std::logic_error("environment is not euclidean");
  return std::get<EuclideanRegion>(impl_);
}

const RoadmapGraph& Environment::graph() const {
  if (is_euclidean()) throw std::logic_error("environment is not a roadmap");
  return std::get<RoadmapGraph>(impl_);
}

double Environment::travel_time(const Pose& a, const Pose& b,
                                double speed) const {
  if (is_euclidean()) {
    if (!(speed > 0.0)) throw std::invalid_argument("speed must be positive");
    return distance(a.pt, b.pt) / speed;
  }
  if (a.node < 0 || b.node < 0)
    throw std::invalid_argument("roadmap pose needs a node index");
  return graph().time(a.node, b.node);
}

bool Environment::valid_pose(const Pose& p) const {
  if (is_euclidean()) return p.node < 0 && region().contains(p.pt);
  return p.node >= 0 && p.node < graph().size();
}

Pose Environment::make_pose(Point p) const {
  if (!is_euclidean()) throw std::logic_error("environment is not euclidean");
  return Pose{p, -1};
}

Pose Environment::node_pose(int index) const {
  const RoadmapGraph& g = graph();
  if (index < 0 || index >= g.size())
    throw std::invalid_argument("node index out of range");
  return Pose{g.node_coords(index), index};
}

Pose Environment::waiting_pose() const {
  if (is_euclidean()) return Pose{region().centroid(), -1};
  const RoadmapGraph& g = graph();
  Point mean{0.0, 0.0};
  for (int i = 0; i < g.size(); ++i) {
    mean.x += g.node_coords(i).x;
    mean.y += g.node_coords(i).y;
  }
  mean.x /= g.size();
  mean.y /= g.size();
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < g.size(); ++i) {
    double d = distance(g.node_coords(i), mean);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return node_pose(best);
}

GeometricConstants Environment::geometric_constants(double s_bar,
                                                    double speed) const {
  if (!(speed > 0.0)) throw std::invalid_argument("speed must be positive");
  if (s_bar < 0.0) throw std::invalid_argument("s_bar must be non-negative");
  GeometricConstants c;
  if (is_euclidean()) {
    const EuclideanRegion& r = region();
    c.area = r.area();
    c.perimeter = r.perimeter();
    c.diameter = r.diameter();
    c.max_task_time = c.diameter / speed + s_bar;
    c.approximate = false;
    return c;
  }
  const RoadmapGraph& g = graph();
  Point lo, hi;
  g.bounding_box(lo, hi);
  double w = hi.x - lo.x;
  double h = hi.y - lo.y;
  c.area = w * h;
  c.perimeter = 2.0 * (w + h);
  // Convert the worst-case shortest-path time back to length units so the
  // field stays comparable across environment kinds.
  double tmax = g.max_pairwise_time();
  c.diameter = tmax * speed;
  c.max_task_time = tmax + s_bar;
  c.approximate = true;
  return c;
}

int SectorFan::sector_index(const Point& p) const {
  if (count <= 0) throw std::logic_error("sector fan is empty");
  if (p == origin) return 0;
  double angle = polar_angle(origin, p);
  if (angle == 0.0) return 0;
  double width = 2.0 * M_PI / count;
  int idx = static_cast<int>(std::ceil(angle / width)) - 1;
  if (idx < 0) idx = 0;
  if (idx >= count) idx = count - 1;
  return idx;
}

SectorFan make_sectors(const Environment& env, int count) {
  if (count <= 0) throw std::invalid_argument("sector count must be positive");
  return SectorFan{env.waiting_pose().pt, count};
}

}  // namespace dvrp

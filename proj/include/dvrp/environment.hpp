#pragma once

#include <string>
#include <variant>
#include <vector>

#include "dvrp/geometry.hpp"

namespace dvrp {

// A location a vehicle or task can occupy. Euclidean environments use the
// planar point and leave node at -1; roadmap environments pin locations to a
// node index with pt holding that node's coordinates.
struct Pose {
  Point pt{};
  int node = -1;
};

bool same_pose(const Pose& a, const Pose& b);

struct EuclideanRegion {
  double width = 1.0;
  double height = 1.0;

  double area() const { return width * height; }
  double perimeter() const { return 2.0 * (width + height); }
  double diameter() const { return std::hypot(width, height); }
  Point centroid() const { return {width / 2.0, height / 2.0}; }
  bool contains(const Point& p) const {
    return p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= height;
  }
};

// Undirected graph with strictly positive edge travel times. All-pairs
// shortest paths are computed once in finalize(); queries are table lookups.
class RoadmapGraph {
 public:
  void add_node(const std::string& id, Point coords);
  void add_edge(const std::string& u, const std::string& v, double travel_time);

  // Validates positivity and connectivity, then builds the distance and
  // predecessor tables. Must be called before any query.
  void finalize();

  int size() const { return static_cast<int>(coords_.size()); }
  int node_index(const std::string& id) const;  // -1 when unknown
  const std::string& node_id(int index) const { return ids_.at(index); }
  const Point& node_coords(int index) const { return coords_.at(index); }

  double time(int a, int b) const;
  // Node sequence from a to b, inclusive of both endpoints.
  std::vector<int> path(int a, int b) const;

  double max_pairwise_time() const;
  // Axis-aligned bounding box of the node coordinates.
  void bounding_box(Point& lo, Point& hi) const;
  bool finalized() const { return finalized_; }

  static RoadmapGraph from_csv(const std::string& nodes_path,
                               const std::string& edges_path);

 private:
  std::vector<std::string> ids_;
  std::vector<Point> coords_;
  std::vector<std::vector<std::pair<int, double>>> adjacency_;
  std::vector<double> dist_;    // size() * size(), row-major
  std::vector<int> parent_;     // predecessor on shortest path, -1 at source
  bool finalized_ = false;
};

struct GeometricConstants {
  double area = 0.0;
  double perimeter = 0.0;
  double diameter = 0.0;        // farthest pair, in length units
  double max_task_time = 0.0;   // diameter travel time plus mean service time
  bool approximate = false;     // true when derived from a bounding box
};

class Environment {
 public:
  static Environment euclidean(double width, double height);
  static Environment roadmap(RoadmapGraph graph);

  bool is_euclidean() const;
  const EuclideanRegion& region() const;  // throws when not euclidean
  const RoadmapGraph& graph() const;      // throws when not a roadmap

  // Travel time between poses at the given speed. Roadmap edge weights are
  // already times, so speed only applies to the euclidean case.
  double travel_time(const Pose& a, const Pose& b, double speed) const;

  bool valid_pose(const Pose& p) const;
  Pose make_pose(Point p) const;       // euclidean only
  Pose node_pose(int index) const;     // roadmap only

  // Idle vehicles return here: the region centroid, or the node closest to
  // the coordinate mean of the graph.
  Pose waiting_pose() const;

  GeometricConstants geometric_constants(double s_bar, double speed) const;

 private:
  std::variant<EuclideanRegion, RoadmapGraph> impl_;
};

// Equal-angle wedge around an origin. Sectors partition the plane: every
// direction maps to exactly one of the r sectors.
struct SectorFan {
  Point origin{};
  int count = 0;

  // Boundary rays belong to the lower-indexed sector; the origin itself and
  // angle zero map to sector 0.
  int sector_index(const Point& p) const;
};

SectorFan make_sectors(const Environment& env, int count);

}  // namespace dvrp

#pragma once

#include <cmath>

namespace dvrp {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline bool operator==(const Point& a, const Point& b) {
  return a.x == b.x && a.y == b.y;
}

inline double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Point at parameter t in [0, 1] along the segment from a to b.
inline Point lerp(const Point& a, const Point& b, double t) {
  return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t};
}

// Angle of p around origin o in [0, 2*pi).
inline double polar_angle(const Point& o, const Point& p) {
  double a = std::atan2(p.y - o.y, p.x - o.x);
  if (a < 0) a += 2.0 * M_PI;
  return a;
}

}  // namespace dvrp

#include "doge/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace doge::geometry {

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double segment_distance(const Point2& p, const Point2& a, const Point2& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) {
    t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  }
  const double qx = a.x + t * dx - p.x;
  const double qy = a.y + t * dy - p.y;
  return std::sqrt(qx * qx + qy * qy);
}

}  // namespace

std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const std::size_t n = pts.size();
  if (n <= 2) {
    return pts;
  }
  std::vector<Point2> h(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = n - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i - 1]) <= 0.0) --k;
    h[k++] = pts[i - 1];
  }
  h.resize(k - 1);
  if (h.size() == 2 && h[0] == h[1]) {
    h.resize(1);
  }
  return h;
}

bool in_hull(const Point2& p, const std::vector<Point2>& hull, double eps) {
  if (hull.empty()) {
    return false;
  }
  if (hull.size() < 3) {
    return distance_to_hull(p, hull) <= eps;
  }
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Point2& a = hull[i];
    const Point2& b = hull[(i + 1) % hull.size()];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    // Signed distance to the edge's supporting line; negative means outside.
    if (cross(a, b, p) / len < -eps) {
      return false;
    }
  }
  return true;
}

double distance_to_hull(const Point2& p, const std::vector<Point2>& hull) {
  if (hull.empty()) {
    throw InvalidArgument("distance_to_hull: empty hull");
  }
  if (hull.size() == 1) {
    return std::hypot(p.x - hull[0].x, p.y - hull[0].y);
  }
  if (hull.size() >= 3 && in_hull(p, hull, 0.0)) {
    return 0.0;
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hull.size(); ++i) {
    best = std::min(best, segment_distance(p, hull[i], hull[(i + 1) % hull.size()]));
  }
  return best;
}

std::vector<Point2> to_points(const Matrix& m) {
  if (m.rows() != 2) {
    throw InvalidArgument("to_points: expected 2 x n matrix");
  }
  std::vector<Point2> pts;
  pts.reserve(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.cols(); ++i) {
    pts.push_back({m(0, i), m(1, i)});
  }
  return pts;
}

double distance_to_point_hull(const Vec& a, const Matrix& points) {
  if (points.cols() == 0 || points.rows() != a.size()) {
    throw InvalidArgument("distance_to_point_hull: shape mismatch");
  }
  if (a.size() == 1) {
    const double lo = points.row(0).minCoeff();
    const double hi = points.row(0).maxCoeff();
    return std::max({lo - a(0), a(0) - hi, 0.0});
  }
  if (a.size() == 2) {
    return distance_to_hull({a(0), a(1)}, convex_hull(to_points(points)));
  }
  throw InvalidArgument("distance_to_point_hull: only 1D and 2D supported");
}

}  // namespace doge::geometry

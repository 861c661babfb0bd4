#pragma once

#include "doge/common.hpp"

#include <vector>

namespace doge::geometry {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Andrew's monotone chain. Returns the hull counter-clockwise without
/// collinear vertices. Degenerate inputs give a single point or the two
/// endpoints of a segment.
std::vector<Point2> convex_hull(std::vector<Point2> points);

/// Membership including the boundary; `eps` is a distance tolerance.
bool in_hull(const Point2& p, const std::vector<Point2>& hull, double eps = 1e-9);

/// Euclidean distance from p to the hull (0 inside).
double distance_to_hull(const Point2& p, const std::vector<Point2>& hull);

/// Distance from `a` to the convex hull of the columns of `points`, for 1D or
/// 2D columns. Throws InvalidArgument for other dimensions.
double distance_to_point_hull(const Vec& a, const Matrix& points);

std::vector<Point2> to_points(const Matrix& two_by_n);

}  // namespace doge::geometry

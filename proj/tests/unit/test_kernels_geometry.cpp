#include "doge/geometry.hpp"
#include "doge/kernels.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

using namespace doge;
using geometry::Point2;

namespace {

Matrix uniform(Eigen::Index r, Eigen::Index c, Rng& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

/// Barycentric brute force: p is in the hull of pts iff some triangle of
/// input points (or segment, for collinear sets) contains it.
bool brute_in_hull(const Point2& p, const std::vector<Point2>& pts) {
  Matrix m(2, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    m(0, static_cast<Eigen::Index>(i)) = pts[i].x;
    m(1, static_cast<Eigen::Index>(i)) = pts[i].y;
  }
  Vec v(2);
  v << p.x, p.y;
  return testing::brute_hull_distance(v, m) <= 1e-9;
}

}  // namespace

TEST_CASE("kernels: serial and OpenMP agree bit for bit") {
  Rng rng(1);
  const Matrix pts = uniform(3, 500, rng);
  const Matrix q = uniform(3, 300, rng);
  const auto a = kernels::nearest_batch(pts, q, kernels::Exec::serial);
  const auto b = kernels::nearest_batch(pts, q, kernels::Exec::parallel);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].index == b[i].index);
    CHECK(a[i].distance == b[i].distance);
  }
  const Vec da = kernels::mean_distance_batch(pts, q, kernels::Exec::serial);
  const Vec db = kernels::mean_distance_batch(pts, q, kernels::Exec::parallel);
  CHECK(da == db);

  const auto n1 = kernels::serial::nearest(pts, q.col(0));
  const auto n2 = kernels::omp::nearest(pts, q.col(0));
  CHECK(n1.index == n2.index);
  CHECK(n1.distance == n2.distance);

  std::vector<int> hits(1000, 0);
  kernels::for_each_index(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("kernels: nearest ties go to the lowest index") {
  Matrix pts(1, 4);
  pts << 2.0, 0.0, 2.0, 0.0;
  const Vec q = Vec::Constant(1, 1.0);
  CHECK(kernels::serial::nearest(pts, q).index == 0);
  CHECK(kernels::omp::nearest(pts, q).index == 0);
}

TEST_CASE("hull: unit square") {
  const auto hull = geometry::convex_hull({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}, {1, 0.5}});
  CHECK(hull.size() == 4);
  CHECK(geometry::in_hull({0.5, 0.5}, hull));
  CHECK(geometry::in_hull({1.0, 0.3}, hull));
  CHECK_FALSE(geometry::in_hull({2.0, 0.0}, hull));
  CHECK(geometry::distance_to_hull({2.0, 0.5}, hull) == doctest::Approx(1.0));
  CHECK(geometry::distance_to_hull({0.5, 0.5}, hull) == 0.0);
}

TEST_CASE("hull: collinear points degenerate to a segment") {
  const auto hull = geometry::convex_hull({{0, 0}, {1, 1}, {2, 2}, {0.5, 0.5}});
  CHECK(hull.size() == 2);
  CHECK(geometry::in_hull({1.5, 1.5}, hull));
  CHECK_FALSE(geometry::in_hull({3.0, 3.0}, hull));
  CHECK_FALSE(geometry::in_hull({1.0, 1.1}, hull));
  const auto single = geometry::convex_hull({{1, 2}, {1, 2}});
  CHECK(single.size() == 1);
  CHECK(geometry::in_hull({1, 2}, single));
  CHECK_FALSE(geometry::in_hull({1, 2.1}, single));
}

TEST_CASE("hull: random membership agrees with the barycentric brute force") {
  Rng rng(31);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<Point2> pts;
    for (int i = 0; i < 50; ++i) pts.push_back({u(rng), u(rng)});
    const auto hull = geometry::convex_hull(pts);
    for (int k = 0; k < 100; ++k) {
      const Point2 p{1.3 * u(rng), 1.3 * u(rng)};
      CHECK(geometry::in_hull(p, hull) == brute_in_hull(p, pts));
    }
  }
}

TEST_CASE("distance_to_point_hull: 1D interval and 2D brute force") {
  Matrix line(1, 3);
  line << -0.5, 0.5, 0.1;
  CHECK(geometry::distance_to_point_hull(Vec::Constant(1, 2.0), line) == 1.5);
  CHECK(geometry::distance_to_point_hull(Vec::Constant(1, 0.0), line) == 0.0);

  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix pts = uniform(2, 6, rng);
    const Vec a = uniform(2, 1, rng, -2, 2).col(0);
    CHECK(geometry::distance_to_point_hull(a, pts) ==
          doctest::Approx(testing::brute_hull_distance(a, pts)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(geometry::distance_to_point_hull(Vec::Zero(3), Matrix::Zero(3, 2)),
                  InvalidArgument);
}

#include "doge/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <limits>

namespace doge::kernels {

namespace {

void check_dims(const Matrix& points, Eigen::Index query_rows) {
  if (points.cols() == 0) {
    throw InvalidArgument("kernels: empty point set");
  }
  if (points.rows() != query_rows) {
    throw InvalidArgument("kernels: query dimension does not match points");
  }
}

// Shared by both variants so they agree to the last bit.
inline double squared_distance(const Matrix& points, Eigen::Index i, const double* q) {
  double acc = 0.0;
  for (Eigen::Index d = 0; d < points.rows(); ++d) {
    const double diff = points(d, i) - q[d];
    acc += diff * diff;
  }
  return acc;
}

inline Nearest scan(const Matrix& points, const double* q) {
  Nearest best{0, std::numeric_limits<double>::infinity()};
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    const double d2 = squared_distance(points, i, q);
    if (d2 < best.distance) {
      best = {i, d2};
    }
  }
  best.distance = std::sqrt(best.distance);
  return best;
}

inline double mean_distance(const Matrix& points, const double* q) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    acc += std::sqrt(squared_distance(points, i, q));
  }
  return acc / static_cast<double>(points.cols());
}

}  // namespace

namespace serial {

Nearest nearest(const Matrix& points, const Vec& query) {
  check_dims(points, query.size());
  return scan(points, query.data());
}

std::vector<Nearest> nearest_batch(const Matrix& points, const Matrix& queries) {
  check_dims(points, queries.rows());
  std::vector<Nearest> out(static_cast<std::size_t>(queries.cols()));
  for (Eigen::Index j = 0; j < queries.cols(); ++j) {
    out[static_cast<std::size_t>(j)] = scan(points, queries.col(j).data());
  }
  return out;
}

Vec mean_distance_batch(const Matrix& points, const Matrix& queries) {
  check_dims(points, queries.rows());
  Vec out(queries.cols());
  for (Eigen::Index j = 0; j < queries.cols(); ++j) {
    out(j) = mean_distance(points, queries.col(j).data());
  }
  return out;
}

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn) {
  for (std::size_t i = 0; i < n; ++i) {
    fn(i);
  }
}

}  // namespace serial

namespace omp {

Nearest nearest(const Matrix& points, const Vec& query) {
  check_dims(points, query.size());
  const Eigen::Index n = points.cols();
  Nearest best{0, std::numeric_limits<double>::infinity()};
#pragma omp parallel
  {
    Nearest local{0, std::numeric_limits<double>::infinity()};
#pragma omp for schedule(static) nowait
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d2 = squared_distance(points, i, query.data());
      if (d2 < local.distance) {
        local = {i, d2};
      }
    }
#pragma omp critical
    {
      if (local.distance < best.distance ||
          (local.distance == best.distance && local.index < best.index)) {
        best = local;
      }
    }
  }
  best.distance = std::sqrt(best.distance);
  return best;
}

std::vector<Nearest> nearest_batch(const Matrix& points, const Matrix& queries) {
  check_dims(points, queries.rows());
  const Eigen::Index m = queries.cols();
  std::vector<Nearest> out(static_cast<std::size_t>(m));
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < m; ++j) {
    out[static_cast<std::size_t>(j)] = scan(points, queries.col(j).data());
  }
  return out;
}

Vec mean_distance_batch(const Matrix& points, const Matrix& queries) {
  check_dims(points, queries.rows());
  const Eigen::Index m = queries.cols();
  Vec out(m);
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < m; ++j) {
    out(j) = mean_distance(points, queries.col(j).data());
  }
  return out;
}

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    fn(static_cast<std::size_t>(i));
  }
}

}  // namespace omp

std::vector<Nearest> nearest_batch(const Matrix& points, const Matrix& queries, Exec exec) {
  return exec == Exec::serial ? serial::nearest_batch(points, queries)
                              : omp::nearest_batch(points, queries);
}

Vec mean_distance_batch(const Matrix& points, const Matrix& queries, Exec exec) {
  return exec == Exec::serial ? serial::mean_distance_batch(points, queries)
                              : omp::mean_distance_batch(points, queries);
}

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn, Exec exec) {
  if (exec == Exec::serial) {
    serial::for_each_index(n, fn);
  } else {
    omp::for_each_index(n, fn);
  }
}

void set_num_threads(int n) {
  if (n > 0) {
    omp_set_num_threads(n);
  }
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace doge::kernels

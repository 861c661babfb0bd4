#pragma once

// Data-parallel inner loops. Every kernel exists twice: a straight serial
// reference and an OpenMP version. Both compute each output element with the
// same arithmetic in the same order, so their results are bit-identical and
// the serial one doubles as the test oracle for the parallel one.

#include "doge/common.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace doge::kernels {

struct Nearest {
  Eigen::Index index = -1;
  double distance = 0.0;
};

enum class Exec { serial, parallel };

namespace serial {

/// Nearest column of `points` (dim x n) to `query`; ties go to the lowest index.
Nearest nearest(const Matrix& points, const Vec& query);
std::vector<Nearest> nearest_batch(const Matrix& points, const Matrix& queries);

/// For each query column q: mean_i ||q - points.col(i)||.
Vec mean_distance_batch(const Matrix& points, const Matrix& queries);

/// Calls fn(i) for i in [0, n).
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace serial

namespace omp {

Nearest nearest(const Matrix& points, const Vec& query);
std::vector<Nearest> nearest_batch(const Matrix& points, const Matrix& queries);
Vec mean_distance_batch(const Matrix& points, const Matrix& queries);
/// Dynamic schedule; fn must only write state owned by index i.
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace omp

std::vector<Nearest> nearest_batch(const Matrix& points, const Matrix& queries,
                                   Exec exec = Exec::parallel);
Vec mean_distance_batch(const Matrix& points, const Matrix& queries, Exec exec = Exec::parallel);
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn,
                    Exec exec = Exec::parallel);

/// Worker count used by the OpenMP kernels; 0 keeps the runtime default.
void set_num_threads(int n);
int max_threads();

}  // namespace doge::kernels

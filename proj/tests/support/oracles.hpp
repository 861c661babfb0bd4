#pragma once

// Independent reference computations shared by the unit and acceptance
// suites. Nothing here calls into the library's numerical code paths.

#include "doge/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace doge::testing {

/// Straight-line evaluation with plain loops. When `mask` is given, the ReLU
/// on/off pattern of every hidden unit is appended to it.
inline std::vector<double> reference_forward(const nn::MlpModel& m, const std::vector<double>& x,
                                             std::vector<bool>* mask = nullptr) {
  std::vector<double> h = x;
  const std::size_t layers = m.num_layers();
  for (std::size_t l = 0; l < layers; ++l) {
    const Matrix& w = m.weight(l);
    const Matrix& b = m.bias(l);
    std::vector<double> z(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      double acc = b(i, 0);
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        acc += w(i, j) * h[static_cast<std::size_t>(j)];
      }
      if (l + 1 < layers) {
        if (mask) mask->push_back(acc > 0.0);
        acc = acc > 0.0 ? acc : 0.0;
      }
      z[static_cast<std::size_t>(i)] = acc;
    }
    h = std::move(z);
  }
  return h;
}

/// Mean over all output entries of (f(x) - t)^2; also records the ReLU pattern.
inline double reference_mse(const nn::MlpModel& m, const Matrix& inputs, const Matrix& targets,
                            std::vector<bool>* mask = nullptr) {
  double total = 0.0;
  for (Eigen::Index c = 0; c < inputs.cols(); ++c) {
    std::vector<double> x(inputs.col(c).data(), inputs.col(c).data() + inputs.rows());
    const auto y = reference_forward(m, x, mask);
    for (std::size_t o = 0; o < y.size(); ++o) {
      const double r = y[o] - targets(static_cast<Eigen::Index>(o), c);
      total += r * r;
    }
  }
  return total / static_cast<double>(inputs.cols() * targets.rows());
}

/// Central difference for one parameter entry. The step starts at h and is
/// shrunk until the ReLU pattern at theta - h, theta and theta + h agree, so
/// the probe never straddles a kink.
inline double fd_component(nn::MlpModel m, std::size_t p, Eigen::Index r, Eigen::Index c,
                           const Matrix& inputs, const Matrix& targets, double h = 1e-4) {
  std::vector<bool> base;
  reference_mse(m, inputs, targets, &base);
  const double theta = m.params()[p](r, c);
  for (int attempt = 0; attempt < 6; ++attempt, h *= 0.1) {
    std::vector<bool> up_mask;
    std::vector<bool> dn_mask;
    m.params()[p](r, c) = theta + h;
    const double up = reference_mse(m, inputs, targets, &up_mask);
    m.params()[p](r, c) = theta - h;
    const double dn = reference_mse(m, inputs, targets, &dn_mask);
    m.params()[p](r, c) = theta;
    if (up_mask == base && dn_mask == base) {
      return (up - dn) / (2.0 * h);
    }
  }
  return std::nan("");
}

/// |a - b| <= rel * max(|a|, |b|), or both within the absolute floor.
inline bool close_rel(double a, double b, double rel, double abs_floor) {
  const double diff = std::abs(a - b);
  return diff <= abs_floor || diff <= rel * std::max(std::abs(a), std::abs(b));
}

/// Exact distance from a 1D point to an interval, or from a 2D point to the
/// convex hull of a point set by brute force: the minimum over all point
/// pairs of the distance to their segment, or 0 if some triangle contains it.
inline double brute_hull_distance(const Vec& a, const Matrix& pts) {
  if (a.size() == 1) {
    const double lo = pts.minCoeff();
    const double hi = pts.maxCoeff();
    return a(0) < lo ? lo - a(0) : (a(0) > hi ? a(0) - hi : 0.0);
  }
  const Eigen::Index n = pts.cols();
  auto seg = [&](Eigen::Index i, Eigen::Index j) {
    const Eigen::Vector2d p = pts.col(i);
    const Eigen::Vector2d q = pts.col(j);
    const Eigen::Vector2d x = a;
    const Eigen::Vector2d d = q - p;
    const double len2 = d.squaredNorm();
    double t = len2 > 0 ? (x - p).dot(d) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (p + t * d - x).norm();
  };
  auto cross = [](const Eigen::Vector2d& u, const Eigen::Vector2d& v) {
    return u.x() * v.y() - u.y() * v.x();
  };
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    best = std::min(best, (pts.col(i) - a).norm());
    for (Eigen::Index j = i + 1; j < n; ++j) {
      best = std::min(best, seg(i, j));
      for (Eigen::Index k = j + 1; k < n; ++k) {
        const Eigen::Vector2d p = pts.col(i);
        const Eigen::Vector2d q = pts.col(j);
        const Eigen::Vector2d r = pts.col(k);
        const Eigen::Vector2d x = a;
        if (cross(q - p, r - p) == 0.0) continue;
        const double d1 = cross(q - p, x - p);
        const double d2 = cross(r - q, x - q);
        const double d3 = cross(p - r, x - r);
        const bool neg = d1 < 0 || d2 < 0 || d3 < 0;
        const bool pos = d1 > 0 || d2 > 0 || d3 > 0;
        if (!(neg && pos)) return 0.0;
      }
    }
  }
  return best;
}

}  // namespace doge::testing

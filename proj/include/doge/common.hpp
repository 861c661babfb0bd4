#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace doge {

using Matrix = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Every stochastic component draws from an explicitly passed engine. The
// engine and the distributions are those of the standard library, so a given
// toolchain reproduces runs bit-for-bit.
using Rng = std::mt19937_64;

/// Raised when inputs violate an operation's preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A dataset (or a filtered view of one) ended up with no transitions.
class EmptyDataset : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values or exploding losses during training.
class Divergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Derives an independent, reproducible stream from a base seed and a label.
/// Used so that parallel runs never share an engine.
inline Rng derive_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace doge

#pragma once

// State-conditioned distance function g(s, a): a network regressed onto the
// distance between noise actions and dataset actions, the exact empirical
// minimizer of that regression (the oracle), and property checkers that work
// on either.

#include "doge/common.hpp"
#include "doge/dataset.hpp"
#include "doge/nn.hpp"

#include <filesystem>
#include <functional>

namespace doge::distance {

struct DistanceConfig {
  std::vector<int> hidden = {256, 256, 256};
  double lr = 1e-3;
  /// Noise actions drawn per data pair.
  int n_noise = 20;
  /// Noise actions are Unif[-m * a_max, m * a_max] per dimension.
  double noise_multiplier = 3.0;
  long steps = 100000;
  /// Data pairs per step. Inside agent training, g sees the leading columns
  /// of the agent's minibatch.
  int batch = 256;
  double divergence_loss = 1e6;
};

struct DistanceModel {
  nn::MlpModel net;
  nn::OptimState opt;
  int state_dim = 0;
  int action_dim = 0;
  double max_action = 1.0;
  double noise_multiplier = 3.0;
  int n_noise = 20;
  long trained_steps = 0;

  static DistanceModel create(int state_dim, int action_dim, double max_action,
                              const DistanceConfig& cfg, Rng& rng);

  double operator()(const Vec& s, const Vec& a) const;
  /// (state_dim x B), (action_dim x B) -> 1 x B.
  Matrix evaluate(const Matrix& states, const Matrix& actions) const;
};

/// One Adam step on the noise-action regression for the given data pairs.
/// Returns the pre-step loss. Throws Divergence on a non-finite or exploding
/// loss.
double train_step(DistanceModel& model, const Matrix& states, const Matrix& actions, Rng& rng,
                  double divergence_loss = 1e6);

/// Called every `every` steps with (step, loss).
struct TrainProgress {
  long every = 0;
  std::function<void(long, double)> callback;
};

DistanceModel train_distance(const data::OfflineDataset& ds, const DistanceConfig& cfg, Rng& rng,
                             const TrainProgress& progress = {});

/// Checkpoint: `<stem>.bin` parameter file plus `<stem>.json` header.
void save_distance(const DistanceModel& model, const std::filesystem::path& stem);
DistanceModel load_distance(const std::filesystem::path& stem);

// ------------------------------------------------------------ oracle

class StateNotInDataset : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Exact minimizer of the distance regression for the empirical data
/// distribution: at a dataset state s, g*(s, a) is the mean distance from a
/// to the actions recorded at s.
class DistanceOracle {
 public:
  explicit DistanceOracle(const data::OfflineDataset& ds, double state_tolerance = 1e-9);

  /// Actions whose state lies within the tolerance of s, one per column.
  /// Throws StateNotInDataset when there is none.
  Matrix matched_actions(const Vec& s) const;

  double operator()(const Vec& s, const Vec& a) const;
  /// g* for many actions at one state: (action_dim x m) -> m.
  Vec evaluate(const Vec& s, const Matrix& actions,
               kernels::Exec exec = kernels::Exec::parallel) const;
  Vec centroid(const Vec& s) const;

  double tolerance() const { return tolerance_; }

 private:
  Matrix states_;
  Matrix actions_;
  double tolerance_;
};

double oracle_g(const data::OfflineDataset& ds, const Vec& s, const Vec& a,
                double state_tolerance = 1e-9);
Vec centroid(const data::OfflineDataset& ds, const Vec& s, double state_tolerance = 1e-9);

// ------------------------------------------------------------ property checks

using Evaluable = std::function<double(const Vec& s, const Vec& a)>;

/// Max over sampled (a1, a2, t) of g(t a1 + (1-t) a2) - [t g(a1) + (1-t) g(a2)],
/// with actions uniform in [-bound, bound]^action_dim. Positive values are
/// convexity violations.
double check_convexity(const Evaluable& g, const Vec& s, int action_dim, double bound, int trials,
                       Rng& rng);

/// min over sample columns of g(s, a) - ||a - centroid(s)||.
double check_centroid_bound(const Evaluable& g, const DistanceOracle& oracle, const Vec& s,
                            const Matrix& samples);

struct DirectionCheck {
  bool decreased = false;
  double distance_before = 0.0;
  double distance_after = 0.0;
  Vec gradient;
};

/// Takes a step of length `step` along -grad_a g (central differences with
/// spacing fd_h) and reports whether the distance from the action to the
/// hull of the matched dataset actions strictly shrank. The action must lie
/// outside that hull.
DirectionCheck check_gradient_direction(const Evaluable& g, const DistanceOracle& oracle,
                                        const Vec& s, const Vec& a, double step = 1e-3,
                                        double fd_h = 1e-6);

}  // namespace doge::distance

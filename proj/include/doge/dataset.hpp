#pragma once

#include "doge/common.hpp"
#include "doge/envs.hpp"
#include "doge/kernels.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace doge::data {

struct Transition {
  Vec s;
  Vec a;
  double r = 0.0;
  Vec s_next;
  bool done = false;
};

/// Per-dimension affine state normalization: (x - mean) / std.
struct NormStats {
  Vec mean;
  Vec std;

  Vec normalize(const Vec& x) const;
  Vec denormalize(const Vec& x) const;
  Matrix normalize_columns(const Matrix& x) const;
};

/// Immutable columnar transition store. Column i of every matrix is one
/// transition.
class OfflineDataset {
 public:
  OfflineDataset() = default;
  /// Throws EmptyDataset for an empty list and InvalidArgument for
  /// inconsistent dimensions or non-finite entries.
  OfflineDataset(std::string env_id, std::string geometry_id, double max_action,
                 const std::vector<Transition>& transitions);

  std::size_t size() const { return static_cast<std::size_t>(states_.cols()); }
  int state_dim() const { return static_cast<int>(states_.rows()); }
  int action_dim() const { return static_cast<int>(actions_.rows()); }
  const std::string& env_id() const { return env_id_; }
  const std::string& geometry_id() const { return geometry_id_; }
  double max_action() const { return max_action_; }

  const Matrix& states() const { return states_; }
  const Matrix& actions() const { return actions_; }
  const Vec& rewards() const { return rewards_; }
  const Matrix& next_states() const { return next_states_; }
  const Vec& dones() const { return dones_; }
  /// Concatenated (s, a) columns, (state_dim + action_dim) x n.
  const Matrix& state_actions() const { return state_actions_; }

  Transition transition(std::size_t i) const;
  std::vector<Transition> transitions() const;

  /// Present iff the stored states are normalized.
  const std::optional<NormStats>& norm_stats() const { return norm_stats_; }
  OfflineDataset with_norm_stats(std::optional<NormStats> stats) const;
  OfflineDataset with_geometry_id(std::string id) const;

  friend bool operator==(const OfflineDataset& a, const OfflineDataset& b);

 private:
  std::string env_id_;
  std::string geometry_id_;
  double max_action_ = 1.0;
  Matrix states_;
  Matrix actions_;
  Vec rewards_;
  Matrix next_states_;
  Vec dones_;
  Matrix state_actions_;
  std::optional<NormStats> norm_stats_;
};

// ------------------------------------------------------------ random walk

/// A region of (s, a) space on the random walk, sampled uniformly.
struct Region {
  enum class Kind { rect, band, cluster };
  Kind kind = Kind::rect;
  /// rect and band: state interval.
  double s_lo = -10.0;
  double s_hi = 10.0;
  /// rect: action interval.
  double a_lo = -1.0;
  double a_hi = 1.0;
  /// band: a = intercept + slope * s + U(-half_width, half_width).
  double intercept = 0.0;
  double slope = 0.0;
  double half_width = 0.25;
  /// cluster: uniform over the ellipse with these center/radii.
  double s_center = 0.0;
  double a_center = 0.0;
  double s_radius = 1.0;
  double a_radius = 0.1;
  int count = 0;
};

struct GeometrySpec {
  std::string id = "custom";
  std::vector<Region> regions;

  int total_count() const;
};

/// Named layouts: "full", "band", "clusters", "block", "quadrant".
GeometrySpec geometry_preset(const std::string& name);
GeometrySpec geometry_from_json_text(const std::string& text);
std::string geometry_to_json_text(const GeometrySpec& spec);

OfflineDataset generate_randomwalk(const envs::RandomWalk1d& env, const GeometrySpec& spec,
                                   Rng& rng);

// ------------------------------------------------------------ point maze

struct MazeDataConfig {
  int n_episodes = 300;
  /// Std of Gaussian noise added to every scripted action.
  double action_noise = 0.3;
  /// Share of episodes that start in the start cell and follow the corridor
  /// to the goal; the rest travel between random corridor points.
  double goal_fraction = 0.3;
  double waypoint_tolerance = 0.2;
};

OfflineDataset generate_maze(const envs::PointMaze2d& env, const MazeDataConfig& cfg, Rng& rng);

// ------------------------------------------------------------ transforms

struct RemovalResult {
  OfflineDataset dataset;
  double fraction_removed = 0.0;
};

/// Drops every transition whose s or s_next lies in any box.
/// Throws EmptyDataset when nothing would remain.
RemovalResult remove_regions(const OfflineDataset& ds, const std::vector<envs::Box>& boxes);

/// Population statistics with std floored at 1e-3; both s and s_next are
/// transformed and the stats are attached to the result.
std::pair<OfflineDataset, NormStats> normalize_states(const OfflineDataset& ds);
OfflineDataset denormalize_states(const OfflineDataset& ds);

struct Batch {
  Matrix s;       // state_dim x B
  Matrix a;       // action_dim x B
  Matrix r;       // 1 x B
  Matrix s_next;  // state_dim x B
  Matrix done;    // 1 x B, 0 or 1
  std::vector<std::size_t> indices;

  Eigen::Index size() const { return s.cols(); }
};

/// Uniform with replacement.
Batch sample_minibatch(const OfflineDataset& ds, Rng& rng, int batch = 256);
Batch gather(const OfflineDataset& ds, const std::vector<std::size_t>& indices);

struct Projection {
  Vec nearest;
  double distance = 0.0;
  std::size_t index = 0;
};

/// Exact nearest dataset (s, a) point under the Euclidean norm; ties go to
/// the lowest index.
Projection project(const Vec& x, const OfflineDataset& ds);
/// Batched projection of (state_dim + action_dim) x m query columns.
std::vector<Projection> project_batch(const Matrix& queries, const OfflineDataset& ds,
                                      kernels::Exec exec = kernels::Exec::parallel);

// ------------------------------------------------------------ files

/// Writes `<stem>.csv` with columns s*, a*, r, sn*, done and a `<stem>.json`
/// sidecar with env_id, geometry_id, max_action, dims, column order and
/// norm_stats.
void save_dataset(const OfflineDataset& ds, const std::filesystem::path& csv_path);
OfflineDataset load_dataset(const std::filesystem::path& csv_path);
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace doge::data

#pragma once

// Desk-scale studies: relative Q-error grids with hull membership, the
// interpolation/extrapolation probe, policy evaluation, the data-removal
// generalization study and hyperparameter sweeps.

#include "doge/agents.hpp"
#include "doge/common.hpp"
#include "doge/dataset.hpp"
#include "doge/envs.hpp"
#include "doge/kernels.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace doge::experiments {

// ------------------------------------------------------------ error grid

struct GridCell {
  double s = 0.0;
  double a = 0.0;
  double q_hat = 0.0;
  double q_mc = 0.0;
  /// q_hat - q_mc
  double eps = 0.0;
  /// eps minus the minimum of eps over the cell's state row.
  double rel = 0.0;
  bool in_hull = false;
};

struct ErrorGrid {
  int n_s = 0;
  int n_a = 0;
  /// Row-major: cell (i, j) at i * n_a + j, state index i, action index j.
  std::vector<GridCell> cells;
  double mean_rel_in = std::numeric_limits<double>::quiet_NaN();
  double mean_rel_out = std::numeric_limits<double>::quiet_NaN();
  long n_in = 0;
  long n_out = 0;

  const GridCell& at(int i, int j) const { return cells[static_cast<std::size_t>(i * n_a + j)]; }
};

/// Cell centers over the env's state range x [-max_action, max_action].
/// q_hat comes from the agent's first critic, q_mc from a deterministic
/// rollout of the agent's actor. `ds` must hold raw states.
ErrorGrid error_grid(const envs::RandomWalk1d& env, const agents::AgentState& agent,
                     const data::OfflineDataset& ds, int n_s, int n_a,
                     kernels::Exec exec = kernels::Exec::parallel);

/// Same grid from arbitrary Q estimates; used by the pipeline and by tests.
ErrorGrid error_grid_from(const std::vector<double>& s_centers,
                          const std::vector<double>& a_centers,
                          const std::vector<double>& q_hat, const std::vector<double>& q_mc,
                          const data::OfflineDataset& ds);

/// Long format: s,a,q_hat,q_mc,eps,rel,in_hull.
void write_grid_csv(const ErrorGrid& grid, const std::filesystem::path& path);
/// Dense n_s x n_a matrix of rel, one state row per line.
void write_grid_matrix_csv(const ErrorGrid& grid, const std::filesystem::path& path);

// ------------------------------------------------------------ probe

enum class ProbeKind { interpolated, extrapolated };

struct ProbeRecord {
  Vec x;
  ProbeKind kind = ProbeKind::interpolated;
  double d = 0.0;
  double dq = 0.0;
  double g_value = std::numeric_limits<double>::quiet_NaN();
  /// Extrapolated points: the index whose weight was negated, and the
  /// overall weight scale. -1 and 1 for interpolated points.
  int negated = -1;
  double scale = 1.0;
};

struct ProbeConfig {
  int n_samples = 2000;
  /// Dataset points combined per sample.
  int k = 3;
  /// Share of samples that are extrapolated.
  double extrapolated_fraction = 0.5;
  /// Extrapolated weights are multiplied by u ~ Unif[scale_lo, scale_hi]
  /// when rescale is set.
  bool rescale = true;
  double scale_lo = 0.5;
  double scale_hi = 1.5;
};

/// Interpolated x: Dirichlet(1, ..., 1) weights over k dataset (s, a) points
/// drawn uniformly with replacement. Extrapolated x: one weight w_j is
/// negated, the others are scaled by (1 + w_j) / (1 - w_j) so the weights
/// still sum to 1, then all weights are optionally scaled by u. `ds` must
/// hold raw states.
std::vector<ProbeRecord> interp_extrap_probe(const data::OfflineDataset& ds,
                                             const agents::AgentState& agent,
                                             const ProbeConfig& cfg, Rng& rng,
                                             kernels::Exec exec = kernels::Exec::parallel);

/// Columns: kind,x0..,d,dq,g,negated,scale.
void write_probe_csv(const std::vector<ProbeRecord>& records, const std::filesystem::path& path);

struct BinRow {
  double lo = 0.0;
  double hi = 0.0;
  long count = 0;
  double max_dq = 0.0;
};

/// Equal-width bins over the observed d range; a bin with fewer than
/// `min_count` samples is merged into its right neighbour (the last one into
/// its left neighbour).
std::vector<BinRow> binned_max(const std::vector<ProbeRecord>& records, int n_bins = 20,
                               long min_count = 5);
/// Number of adjacent bin pairs whose max_dq decreases.
int count_inversions(const std::vector<BinRow>& bins);
void write_bins_csv(const std::vector<BinRow>& bins, const std::filesystem::path& path);

/// Largest pairwise Euclidean distance between dataset (s, a) points.
double max_pairwise_distance(const data::OfflineDataset& ds,
                             kernels::Exec exec = kernels::Exec::parallel);

/// Spearman rank correlation; ties receive their average rank.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// ------------------------------------------------------------ evaluation

struct EvalResult {
  double mean_return = 0.0;
  double std_return = 0.0;
  double success_rate = 0.0;
  int episodes = 0;
};

/// Deterministic policy rollouts from env.reset(); discounted returns with
/// the environment's gamma; population std. Throws InvalidArgument for
/// n_episodes < 1.
EvalResult eval_policy(const envs::Environment& env, const envs::Policy& policy, int n_episodes,
                       Rng& rng);
EvalResult eval_policy(const envs::Environment& env, const agents::AgentState& agent,
                       int n_episodes, Rng& rng);

// ------------------------------------------------------------ runs

/// One training run on a fixed dataset followed by a final evaluation.
struct RunSpec {
  agents::AgentConfig cfg;
  std::uint64_t seed = 0;
  int eval_episodes = 10;
};

struct RunOutcome {
  bool ok = false;
  std::string error;
  EvalResult eval;
  std::vector<agents::LogRow> log;
  double seconds = 0.0;
};

/// Training stream derive_rng(seed, 1), evaluation stream derive_rng(seed, 2).
/// Divergence is caught and reported through `ok`.
RunOutcome run_once(const envs::Environment& env, const data::OfflineDataset& ds,
                    const RunSpec& spec);

struct Summary {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double std = std::numeric_limits<double>::quiet_NaN();
};

/// Population mean and std; NaN for an empty input.
Summary summarize(const std::vector<double>& values);

// ------------------------------------------------------------ generalization study

struct StudyConfig {
  agents::AgentConfig base;
  std::vector<agents::Algorithm> algorithms = {agents::Algorithm::doge,
                                               agents::Algorithm::td3bc};
  std::vector<envs::Box> removal;
  data::MazeDataConfig data;
  int seeds = 5;
  int eval_episodes = 100;
  std::uint64_t seed = 0;
};

struct StudyRun {
  agents::Algorithm algorithm = agents::Algorithm::doge;
  /// "full" or "removed".
  std::string variant;
  std::uint64_t seed = 0;
  double success = 0.0;
  double mean_return = 0.0;
  bool failed = false;
  std::string error;
};

struct StudyRow {
  agents::Algorithm algorithm = agents::Algorithm::doge;
  Summary full;
  Summary removed;
  /// 100 * (full - removed) / full; NaN when full <= 0.
  double drop_percent = std::numeric_limits<double>::quiet_NaN();
  int failed = 0;
};

struct StudyReport {
  std::size_t full_size = 0;
  std::size_t removed_size = 0;
  double removed_fraction = 0.0;
  std::vector<StudyRun> runs;
  std::vector<StudyRow> rows;
};

/// Score used for a diverged run.
inline constexpr double kFailedScore = 0.0;

double drop_percent(double full, double removed);

/// Aggregates raw runs into one row per algorithm.
std::vector<StudyRow> aggregate_study(const std::vector<StudyRun>& runs,
                                      const std::vector<agents::Algorithm>& algorithms);

/// Generates one maze dataset from derive_rng(seed, 0), removes the boxes,
/// and trains every algorithm on both variants with seeds seed+1 ..
/// seed+seeds. Runs execute in parallel slots; diverged runs score 0 and are
/// flagged.
StudyReport generalization_study(const envs::PointMaze2d& env, const StudyConfig& cfg,
                                 kernels::Exec exec = kernels::Exec::parallel);

/// Same, on prepared datasets.
StudyReport generalization_study(const envs::PointMaze2d& env, const data::OfflineDataset& full,
                                 const data::OfflineDataset& removed, double removed_fraction,
                                 const StudyConfig& cfg,
                                 kernels::Exec exec = kernels::Exec::parallel);

/// Columns: algorithm,variant,seed,success,return,failed,error.
void write_study_runs_csv(const StudyReport& report, const std::filesystem::path& path);
/// Columns: algorithm,full_mean,full_std,removed_mean,removed_std,drop_percent,failed.
void write_study_summary_csv(const StudyReport& report, const std::filesystem::path& path);

// ------------------------------------------------------------ ablation sweep

enum class AblationParam { alpha, g_quantile, n_noise };

std::string to_string(AblationParam p);
/// "alpha", "G" / "g_quantile", "N" / "n_noise".
AblationParam parse_ablation_param(const std::string& s);

/// Applies one sweep value to a config: alpha takes a real, G a threshold
/// ("mean" or a percentage), N a positive integer.
agents::AgentConfig apply_ablation(const agents::AgentConfig& base, AblationParam p,
                                   const std::string& value);

struct AblationRun {
  std::string value;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double final_return = std::numeric_limits<double>::quiet_NaN();
  double success = std::numeric_limits<double>::quiet_NaN();
};

struct AblationRow {
  std::string value;
  Summary final_return;
  int completed = 0;
  int failed = 0;
};

struct AblationReport {
  AblationParam param = AblationParam::alpha;
  std::vector<AblationRun> runs;
  std::vector<AblationRow> rows;

  bool all_completed() const;
};

/// Full factorial value x seed; seeds are base_seed+1 .. base_seed+seeds.
/// Failed runs are recorded and the sweep continues.
AblationReport ablation_sweep(const envs::Environment& env, const data::OfflineDataset& ds,
                              const agents::AgentConfig& base, AblationParam param,
                              const std::vector<std::string>& values, int seeds,
                              std::uint64_t base_seed, int eval_episodes,
                              kernels::Exec exec = kernels::Exec::parallel);

/// Columns: param,value,seed,ok,final_return,success,error.
void write_ablation_runs_csv(const AblationReport& report, const std::filesystem::path& path);
/// Columns: param,value,mean,std,completed,failed.
void write_ablation_summary_csv(const AblationReport& report, const std::filesystem::path& path);

}  // namespace doge::experiments

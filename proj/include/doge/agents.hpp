#pragma once

#include "doge/common.hpp"
#include "doge/dataset.hpp"
#include "doge/distance.hpp"
#include "doge/nn.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace doge::agents {

enum class Algorithm { doge, td3bc, td3 };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& s);

/// Constraint threshold G: the batch mean of g on dataset actions, or a batch
/// quantile of it.
struct Threshold {
  bool use_mean = true;
  /// In (0, 1]; 1 is the batch maximum.
  double quantile = 0.5;

  /// "mean" or a percentage such as "30", "50", "100".
  static Threshold parse(const std::string& text);
  std::string to_string() const;
  double apply(const Matrix& g_on_data) const;
};

struct AgentConfig {
  Algorithm algorithm = Algorithm::doge;
  std::vector<int> hidden = {256, 256, 256};
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double gamma = 0.99;
  double tau = 0.005;
  double policy_noise = 0.2;
  double noise_clip = 0.5;
  int policy_update_freq = 2;
  int batch = 256;
  long total_steps = 1000000;
  double alpha = 7.5;
  double lambda_init = 1.0;
  double lambda_lr = 3e-4;
  double lambda_min = 1.0;
  double lambda_max = 100.0;
  Threshold threshold;
  /// Use |Q(s, a_data)| instead of |Q(s, pi(s))| in the denominator of beta.
  bool beta_on_data_actions = false;
  /// Distance network settings; `distance.steps` is the number of leading
  /// training iterations that also update g.
  distance::DistanceConfig distance;
  bool normalize_states = false;
  long eval_every = 5000;
  long log_every = 1000;

  void validate() const;
};

nlohmann::json to_json(const AgentConfig& cfg);
/// Missing keys keep their defaults; unknown keys raise InvalidArgument.
AgentConfig agent_config_from_json(const nlohmann::json& j);

struct AgentState {
  nn::MlpModel actor;
  nn::MlpModel actor_target;
  nn::MlpModel critic1;
  nn::MlpModel critic2;
  nn::MlpModel critic1_target;
  nn::MlpModel critic2_target;
  nn::OptimState actor_opt;
  nn::OptimState critic1_opt;
  nn::OptimState critic2_opt;
  std::optional<distance::DistanceModel> distance;
  double lambda = 1.0;
  long step = 0;
  long actor_updates = 0;
  int state_dim = 0;
  int action_dim = 0;
  double max_action = 1.0;
  /// Applied to raw environment states before they reach any network.
  std::optional<data::NormStats> norm;

  Vec normalize(const Vec& raw_state) const;
  Matrix normalize_columns(const Matrix& raw_states) const;
};

AgentState init_agent(const AgentConfig& cfg, int state_dim, int action_dim, double max_action,
                      Rng& rng);

/// beta = alpha / mean |q|.
double compute_beta(double alpha, const Matrix& q);
/// lambda + lr * violation, clipped to [lo, hi].
double lambda_step(double lambda, double lr, double violation, double lo, double hi);

struct CriticStats {
  double loss = 0.0;
  double mean_target = 0.0;
};

/// One TD3 critic step (clipped double-Q, target policy smoothing). Batch
/// states must already be in the agent's normalized space.
CriticStats critic_update(AgentState& st, const AgentConfig& cfg, const data::Batch& batch,
                          Rng& rng);

struct ActorOptions {
  /// Replaces lambda in the constrained objective (testing aid).
  std::optional<double> lambda_override;
};

struct ActorGradient {
  nn::GradSet grads;
  double loss = 0.0;
  double beta = 0.0;
  double mean_q = 0.0;
  /// DOGE only: batch mean of g(s, pi(s)) and the threshold G.
  double mean_g = std::numeric_limits<double>::quiet_NaN();
  double threshold = std::numeric_limits<double>::quiet_NaN();
};

/// Gradient of the configured actor loss w.r.t. the actor parameters;
/// nothing is modified.
///   doge:  -beta * mean Q1(s, pi(s)) + lambda * (mean g(s, pi(s)) - G)
///   td3bc: -beta * mean Q1(s, pi(s)) + mean ||pi(s) - a||^2
///   td3:   -beta * mean Q1(s, pi(s))
ActorGradient actor_gradient(const AgentState& st, const AgentConfig& cfg,
                             const data::Batch& batch, const ActorOptions& opts = {});

struct ActorStats {
  double loss = 0.0;
  double beta = 0.0;
  double mean_g = std::numeric_limits<double>::quiet_NaN();
  double threshold = std::numeric_limits<double>::quiet_NaN();
  double lambda = 0.0;
};

/// Actor step, dual step on lambda, then soft target updates.
ActorStats doge_actor_update(AgentState& st, const AgentConfig& cfg, const data::Batch& batch,
                             const ActorOptions& opts = {});
/// Actor step with the behavior-cloning penalty, then soft target updates.
ActorStats td3bc_actor_update(AgentState& st, const AgentConfig& cfg, const data::Batch& batch);
ActorStats td3_actor_update(AgentState& st, const AgentConfig& cfg, const data::Batch& batch);
ActorStats actor_update(AgentState& st, const AgentConfig& cfg, const data::Batch& batch);

/// Deterministic action for a raw (unnormalized) state, within +-max_action.
Vec act(const AgentState& st, const Vec& raw_state);
/// Q1 at raw states: (state_dim x B), (action_dim x B) -> 1 x B.
Matrix q_values(const AgentState& st, const Matrix& raw_states, const Matrix& actions);
double q_value(const AgentState& st, const Vec& raw_state, const Vec& action);

struct LogRow {
  long step = 0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double lambda = 0.0;
  double beta = 0.0;
  double mean_g = std::numeric_limits<double>::quiet_NaN();
  double threshold = std::numeric_limits<double>::quiet_NaN();
  double eval_return = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  AgentState agent;
  std::vector<LogRow> log;
};

/// Raised when training diverges; carries the log up to the failure.
class TrainingFailed : public Divergence {
 public:
  TrainingFailed(const std::string& what, std::vector<LogRow> log)
      : Divergence(what), log_(std::move(log)) {}
  const std::vector<LogRow>& log() const { return log_; }

 private:
  std::vector<LogRow> log_;
};

using Evaluator = std::function<double(const AgentState&)>;

/// Offline training loop: per step sample a batch, update g while
/// step < distance.steps (doge only), update the critics, and every
/// policy_update_freq steps update the actor, lambda and targets.
TrainResult train(const data::OfflineDataset& ds, const AgentConfig& cfg, Rng& rng,
                  const Evaluator& evaluate = {});

/// CSV columns: step, critic_loss, actor_loss, lambda, beta, mean_g, G, eval_return.
void write_log_csv(const std::vector<LogRow>& log, const std::filesystem::path& path);

/// Parameter files for every network plus agent.json (config, step, lambda,
/// normalization).
void save_checkpoint(const AgentState& st, const AgentConfig& cfg,
                     const std::filesystem::path& dir);
std::pair<AgentState, AgentConfig> load_checkpoint(const std::filesystem::path& dir);

}  // namespace doge::agents

#include "doge/agents.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace doge::agents {

using nlohmann::json;

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::doge:
      return "doge";
    case Algorithm::td3bc:
      return "td3bc";
    case Algorithm::td3:
      return "td3";
  }
  return "doge";
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "doge") return Algorithm::doge;
  if (s == "td3bc") return Algorithm::td3bc;
  if (s == "td3") return Algorithm::td3;
  throw InvalidArgument("unknown algorithm '" + s + "' (expected doge, td3bc or td3)");
}

// ------------------------------------------------------------ threshold

Threshold Threshold::parse(const std::string& text) {
  Threshold t;
  if (text == "mean") {
    return t;
  }
  std::string digits = text;
  if (!digits.empty() && digits.back() == '%') digits.pop_back();
  double pct = 0.0;
  try {
    std::size_t used = 0;
    pct = std::stod(digits, &used);
    if (used != digits.size()) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    throw InvalidArgument("threshold must be 'mean' or a percentage, got '" + text + "'");
  }
  if (!(pct > 0.0 && pct <= 100.0)) {
    throw InvalidArgument("threshold percentage must lie in (0, 100]");
  }
  t.use_mean = false;
  t.quantile = pct / 100.0;
  return t;
}

std::string Threshold::to_string() const {
  if (use_mean) return "mean";
  const double pct = quantile * 100.0;
  if (pct == std::round(pct)) return std::to_string(static_cast<int>(pct));
  return std::to_string(pct);
}

double Threshold::apply(const Matrix& g) const {
  if (g.size() == 0) {
    throw InvalidArgument("threshold of an empty batch");
  }
  if (use_mean) {
    return g.mean();
  }
  std::vector<double> v(g.data(), g.data() + g.size());
  std::sort(v.begin(), v.end());
  // Linear interpolation between order statistics.
  const double pos = quantile * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

// ------------------------------------------------------------ config

void AgentConfig::validate() const {
  if (!(actor_lr > 0 && critic_lr > 0 && lambda_lr > 0 && tau > 0 && tau <= 1)) {
    throw InvalidArgument("agent config: learning rates and tau must be positive (tau <= 1)");
  }
  if (!(gamma >= 0 && gamma <= 1)) {
    throw InvalidArgument("agent config: gamma must lie in [0, 1]");
  }
  if (policy_update_freq < 1 || batch < 1 || total_steps < 0) {
    throw InvalidArgument("agent config: policy_update_freq and batch must be positive");
  }
  if (!(lambda_min <= lambda_max)) {
    throw InvalidArgument("agent config: lambda bounds out of order");
  }
  if (policy_noise < 0 || noise_clip < 0 || alpha < 0) {
    throw InvalidArgument("agent config: negative noise or alpha");
  }
  if (!threshold.use_mean && !(threshold.quantile > 0 && threshold.quantile <= 1)) {
    throw InvalidArgument("agent config: threshold quantile must lie in (0, 1]");
  }
  for (int h : hidden) {
    if (h <= 0) throw InvalidArgument("agent config: hidden widths must be positive");
  }
  if (distance.batch < 1 || distance.n_noise < 1 || distance.steps < 0 || !(distance.lr > 0)) {
    throw InvalidArgument("agent config: invalid distance settings");
  }
}

json to_json(const AgentConfig& c) {
  return json{{"algorithm", to_string(c.algorithm)},
              {"hidden", c.hidden},
              {"actor_lr", c.actor_lr},
              {"critic_lr", c.critic_lr},
              {"gamma", c.gamma},
              {"tau", c.tau},
              {"policy_noise", c.policy_noise},
              {"noise_clip", c.noise_clip},
              {"policy_update_freq", c.policy_update_freq},
              {"batch", c.batch},
              {"total_steps", c.total_steps},
              {"alpha", c.alpha},
              {"lambda_init", c.lambda_init},
              {"lambda_lr", c.lambda_lr},
              {"lambda_min", c.lambda_min},
              {"lambda_max", c.lambda_max},
              {"threshold", c.threshold.to_string()},
              {"beta_on_data_actions", c.beta_on_data_actions},
              {"normalize_states", c.normalize_states},
              {"eval_every", c.eval_every},
              {"log_every", c.log_every},
              {"distance",
               {{"hidden", c.distance.hidden},
                {"lr", c.distance.lr},
                {"n_noise", c.distance.n_noise},
                {"noise_multiplier", c.distance.noise_multiplier},
                {"steps", c.distance.steps},
                {"batch", c.distance.batch}}}};
}

namespace {

void reject_unknown(const json& j, const json& reference, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (!reference.contains(k)) {
      throw InvalidArgument("unknown key '" + where + k + "'");
    }
  }
}

}  // namespace

AgentConfig agent_config_from_json(const json& j) {
  AgentConfig c;
  const json ref = to_json(c);
  reject_unknown(j, ref, "agent.");
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  if (j.contains("algorithm")) c.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
  get("hidden", c.hidden);
  get("actor_lr", c.actor_lr);
  get("critic_lr", c.critic_lr);
  get("gamma", c.gamma);
  get("tau", c.tau);
  get("policy_noise", c.policy_noise);
  get("noise_clip", c.noise_clip);
  get("policy_update_freq", c.policy_update_freq);
  get("batch", c.batch);
  get("total_steps", c.total_steps);
  get("alpha", c.alpha);
  get("lambda_init", c.lambda_init);
  get("lambda_lr", c.lambda_lr);
  get("lambda_min", c.lambda_min);
  get("lambda_max", c.lambda_max);
  if (j.contains("threshold")) {
    const auto& t = j.at("threshold");
    c.threshold = Threshold::parse(t.is_string() ? t.get<std::string>() : t.dump());
  }
  get("beta_on_data_actions", c.beta_on_data_actions);
  get("normalize_states", c.normalize_states);
  get("eval_every", c.eval_every);
  get("log_every", c.log_every);
  if (j.contains("distance")) {
    const auto& d = j.at("distance");
    reject_unknown(d, ref.at("distance"), "agent.distance.");
    if (d.contains("hidden")) c.distance.hidden = d.at("hidden").get<std::vector<int>>();
    if (d.contains("lr")) c.distance.lr = d.at("lr");
    if (d.contains("n_noise")) c.distance.n_noise = d.at("n_noise");
    if (d.contains("noise_multiplier")) c.distance.noise_multiplier = d.at("noise_multiplier");
    if (d.contains("steps")) c.distance.steps = d.at("steps");
    if (d.contains("batch")) c.distance.batch = d.at("batch");
  }
  c.validate();
  return c;
}

// ------------------------------------------------------------ state

Vec AgentState::normalize(const Vec& raw) const { return norm ? norm->normalize(raw) : raw; }

Matrix AgentState::normalize_columns(const Matrix& raw) const {
  return norm ? norm->normalize_columns(raw) : raw;
}

namespace {

std::vector<int> dims(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> d{in};
  d.insert(d.end(), hidden.begin(), hidden.end());
  d.push_back(out);
  return d;
}

Matrix stack(const Matrix& top, const Matrix& bottom) {
  Matrix m(top.rows() + bottom.rows(), top.cols());
  m.topRows(top.rows()) = top;
  m.bottomRows(bottom.rows()) = bottom;
  return m;
}

Matrix policy_batch(const nn::MlpModel& actor, const Matrix& states, double max_action) {
  return max_action * nn::forward_batch(actor, states).array().tanh().matrix();
}

void soft_update_targets(AgentState& st, double tau) {
  nn::soft_update(st.critic1_target, st.critic1, tau);
  nn::soft_update(st.critic2_target, st.critic2, tau);
  nn::soft_update(st.actor_target, st.actor, tau);
}

}  // namespace

AgentState init_agent(const AgentConfig& cfg, int state_dim, int action_dim, double max_action,
                      Rng& rng) {
  cfg.validate();
  AgentState st;
  st.state_dim = state_dim;
  st.action_dim = action_dim;
  st.max_action = max_action;
  st.actor = nn::MlpModel::init(dims(state_dim, cfg.hidden, action_dim), rng);
  st.actor_target = st.actor;
  st.critic1 = nn::MlpModel::init(dims(state_dim + action_dim, cfg.hidden, 1), rng);
  st.critic2 = nn::MlpModel::init(dims(state_dim + action_dim, cfg.hidden, 1), rng);
  st.critic1_target = st.critic1;
  st.critic2_target = st.critic2;
  st.actor_opt = nn::OptimState::for_model(st.actor, cfg.actor_lr);
  st.critic1_opt = nn::OptimState::for_model(st.critic1, cfg.critic_lr);
  st.critic2_opt = nn::OptimState::for_model(st.critic2, cfg.critic_lr);
  if (cfg.algorithm == Algorithm::doge) {
    st.distance =
        distance::DistanceModel::create(state_dim, action_dim, max_action, cfg.distance, rng);
  }
  st.lambda = std::clamp(cfg.lambda_init, cfg.lambda_min, cfg.lambda_max);
  return st;
}

double compute_beta(double alpha, const Matrix& q) {
  const double denom = q.cwiseAbs().mean();
  return alpha / std::max(denom, 1e-12);
}

double lambda_step(double lambda, double lr, double violation, double lo, double hi) {
  return std::clamp(lambda + lr * violation, lo, hi);
}

// ------------------------------------------------------------ critic

CriticStats critic_update(AgentState& st, const AgentConfig& cfg, const data::Batch& batch,
                          Rng& rng) {
  const Eigen::Index b = batch.size();
  const double am = st.max_action;
  Matrix next_a = policy_batch(st.actor_target, batch.s_next, am);
  std::normal_distribution<double> noise(0.0, cfg.policy_noise * am);
  const double clip = cfg.noise_clip * am;
  for (Eigen::Index j = 0; j < b; ++j) {
    for (Eigen::Index d = 0; d < next_a.rows(); ++d) {
      const double eps = cfg.policy_noise > 0 ? std::clamp(noise(rng), -clip, clip) : 0.0;
      next_a(d, j) = std::clamp(next_a(d, j) + eps, -am, am);
    }
  }
  const Matrix next_sa = stack(batch.s_next, next_a);
  const Matrix q1t = nn::forward_batch(st.critic1_target, next_sa);
  const Matrix q2t = nn::forward_batch(st.critic2_target, next_sa);
  const Matrix not_done = (1.0 - batch.done.array()).matrix();
  const Matrix y = batch.r + cfg.gamma * not_done.cwiseProduct(q1t.cwiseMin(q2t));
  if (!y.allFinite()) {
    throw Divergence("critic target is not finite at step " + std::to_string(st.step));
  }
  const Matrix sa = stack(batch.s, batch.a);
  const auto r1 = nn::grad_mse(st.critic1, sa, y);
  const auto r2 = nn::grad_mse(st.critic2, sa, y);
  nn::adam_step(st.critic1, r1.grads, st.critic1_opt);
  nn::adam_step(st.critic2, r2.grads, st.critic2_opt);
  return CriticStats{r1.loss + r2.loss, y.mean()};
}

// ------------------------------------------------------------ actor

ActorGradient actor_gradient(const AgentState& st, const AgentConfig& cfg,
                             const data::Batch& batch, const ActorOptions& opts) {
  ad::Tape tape;
  const auto actor = nn::bind(tape, st.actor, true);
  const auto critic = nn::bind(tape, st.critic1, false);
  const ad::Var s = tape.constant(batch.s);
  const ad::Var pi = ad::scale(ad::tanh(nn::apply(actor, s)), st.max_action);
  const ad::Var q = nn::apply(critic, ad::concat_rows(s, pi));

  ActorGradient out;
  out.mean_q = q.value().mean();
  if (cfg.beta_on_data_actions) {
    out.beta = compute_beta(cfg.alpha, nn::forward_batch(st.critic1, stack(batch.s, batch.a)));
  } else {
    out.beta = compute_beta(cfg.alpha, q.value());
  }
  ad::Var loss = ad::scale(ad::mean(q), -out.beta);

  switch (cfg.algorithm) {
    case Algorithm::doge: {
      if (!st.distance) {
        throw InvalidArgument("doge actor update needs a distance model");
      }
      const auto g = nn::bind(tape, st.distance->net, false);
      const ad::Var g_pi = nn::apply(g, ad::concat_rows(s, pi));
      out.threshold = cfg.threshold.apply(st.distance->evaluate(batch.s, batch.a));
      out.mean_g = g_pi.value().mean();
      const double lambda = opts.lambda_override.value_or(st.lambda);
      loss = ad::add(loss, ad::scale(ad::shift(ad::mean(g_pi), -out.threshold), lambda));
      break;
    }
    case Algorithm::td3bc: {
      const ad::Var diff = ad::sub(pi, tape.constant(batch.a));
      loss = ad::add(loss, ad::mean(ad::sum_rows(ad::square(diff))));
      break;
    }
    case Algorithm::td3:
      break;
  }
  tape.backward(loss);
  out.loss = loss.value()(0, 0);
  out.grads = nn::gradients(tape, actor);
  if (!std::isfinite(out.loss)) {
    throw Divergence("actor loss is not finite at step " + std::to_string(st.step));
  }
  return out;
}

namespace {

ActorStats apply_actor_step(AgentState& st, const ActorGradient& g) {
  nn::adam_step(st.actor, g.grads, st.actor_opt);
  ++st.actor_updates;
  return ActorStats{g.loss, g.beta, g.mean_g, g.threshold, st.lambda};
}

}  // namespace

ActorStats doge_actor_update(AgentState& st, const AgentConfig& cfg, const data::Batch& batch,
                             const ActorOptions& opts) {
  AgentConfig c = cfg;
  c.algorithm = Algorithm::doge;
  const auto g = actor_gradient(st, c, batch, opts);
  auto stats = apply_actor_step(st, g);
  if (!opts.lambda_override) {
    st.lambda = lambda_step(st.lambda, cfg.lambda_lr, g.mean_g - g.threshold, cfg.lambda_min,
                            cfg.lambda_max);
  }
  stats.lambda = st.lambda;
  soft_update_targets(st, cfg.tau);
  return stats;
}

ActorStats td3bc_actor_update(AgentState& st, const AgentConfig& cfg, const data::Batch& batch) {
  AgentConfig c = cfg;
  c.algorithm = Algorithm::td3bc;
  auto stats = apply_actor_step(st, actor_gradient(st, c, batch));
  soft_update_targets(st, cfg.tau);
  return stats;
}

ActorStats td3_actor_update(AgentState& st, const AgentConfig& cfg, const data::Batch& batch) {
  AgentConfig c = cfg;
  c.algorithm = Algorithm::td3;
  auto stats = apply_actor_step(st, actor_gradient(st, c, batch));
  soft_update_targets(st, cfg.tau);
  return stats;
}

ActorStats actor_update(AgentState& st, const AgentConfig& cfg, const data::Batch& batch) {
  switch (cfg.algorithm) {
    case Algorithm::doge:
      return doge_actor_update(st, cfg, batch);
    case Algorithm::td3bc:
      return td3bc_actor_update(st, cfg, batch);
    case Algorithm::td3:
      return td3_actor_update(st, cfg, batch);
  }
  return {};
}

Vec act(const AgentState& st, const Vec& raw_state) {
  const Vec out = nn::forward(st.actor, st.normalize(raw_state));
  return st.max_action * out.array().tanh().matrix();
}

Matrix q_values(const AgentState& st, const Matrix& raw_states, const Matrix& actions) {
  return nn::forward_batch(st.critic1, stack(st.normalize_columns(raw_states), actions));
}

double q_value(const AgentState& st, const Vec& raw_state, const Vec& action) {
  return q_values(st, raw_state, action)(0, 0);
}

// ------------------------------------------------------------ training loop

TrainResult train(const data::OfflineDataset& input, const AgentConfig& cfg, Rng& rng,
                  const Evaluator& evaluate) {
  cfg.validate();
  data::OfflineDataset ds = input;
  std::optional<data::NormStats> norm = input.norm_stats();
  if (cfg.normalize_states && !norm) {
    auto [normalized, stats] = data::normalize_states(input);
    ds = std::move(normalized);
    norm = stats;
  }
  TrainResult res;
  res.agent = init_agent(cfg, ds.state_dim(), ds.action_dim(), ds.max_action(), rng);
  res.agent.norm = norm;
  AgentState& st = res.agent;

  double critic_loss = 0.0;
  ActorStats last_actor;
  last_actor.lambda = st.lambda;
  try {
    for (long t = 0; t < cfg.total_steps; ++t) {
      const auto batch = data::sample_minibatch(ds, rng, cfg.batch);
      if (cfg.algorithm == Algorithm::doge && t < cfg.distance.steps) {
        const Eigen::Index nd = std::min<Eigen::Index>(cfg.distance.batch, batch.size());
        distance::train_step(*st.distance, batch.s.leftCols(nd), batch.a.leftCols(nd), rng,
                             cfg.distance.divergence_loss);
      }
      critic_loss = critic_update(st, cfg, batch, rng).loss;
      if ((t + 1) % cfg.policy_update_freq == 0) {
        last_actor = actor_update(st, cfg, batch);
      }
      st.step = t + 1;
      const bool eval_now = evaluate && cfg.eval_every > 0 && st.step % cfg.eval_every == 0;
      const bool log_now = cfg.log_every > 0 && st.step % cfg.log_every == 0;
      if (eval_now || log_now || st.step == cfg.total_steps) {
        LogRow row{st.step,         critic_loss,     last_actor.loss,     st.lambda,
                   last_actor.beta, last_actor.mean_g, last_actor.threshold};
        if (eval_now || (evaluate && st.step == cfg.total_steps)) {
          row.eval_return = evaluate(st);
        }
        res.log.push_back(row);
      }
    }
  } catch (const Divergence& e) {
    throw TrainingFailed(e.what(), res.log);
  }
  return res;
}

void write_log_csv(const std::vector<LogRow>& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << "step,critic_loss,actor_loss,lambda,beta,mean_g,G,eval_return\n";
  auto cell = [](double v) { return std::isnan(v) ? std::string() : data::format_double(v); };
  for (const auto& r : log) {
    out << r.step << ',' << cell(r.critic_loss) << ',' << cell(r.actor_loss) << ','
        << cell(r.lambda) << ',' << cell(r.beta) << ',' << cell(r.mean_g) << ','
        << cell(r.threshold) << ',' << cell(r.eval_return) << '\n';
  }
}

// ------------------------------------------------------------ checkpoints

void save_checkpoint(const AgentState& st, const AgentConfig& cfg,
                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nn::save(st.actor, dir / "actor.bin");
  nn::save(st.actor_target, dir / "actor_target.bin");
  nn::save(st.critic1, dir / "critic1.bin");
  nn::save(st.critic2, dir / "critic2.bin");
  nn::save(st.critic1_target, dir / "critic1_target.bin");
  nn::save(st.critic2_target, dir / "critic2_target.bin");
  if (st.distance) {
    distance::save_distance(*st.distance, dir / "distance");
  }
  json j;
  j["config"] = to_json(cfg);
  j["step"] = st.step;
  j["actor_updates"] = st.actor_updates;
  j["lambda"] = data::format_double(st.lambda);
  j["state_dim"] = st.state_dim;
  j["action_dim"] = st.action_dim;
  j["max_action"] = st.max_action;
  if (st.norm) {
    json m = json::array();
    json s = json::array();
    for (Eigen::Index i = 0; i < st.norm->mean.size(); ++i) {
      m.push_back(data::format_double(st.norm->mean(i)));
      s.push_back(data::format_double(st.norm->std(i)));
    }
    j["norm_stats"] = {{"mean", m}, {"std", s}};
  } else {
    j["norm_stats"] = nullptr;
  }
  std::ofstream(dir / "agent.json") << j.dump(2) << '\n';
}

std::pair<AgentState, AgentConfig> load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "agent.json");
  if (!in) {
    throw InvalidArgument("no checkpoint manifest in " + dir.string());
  }
  const json j = json::parse(in);
  AgentConfig cfg = agent_config_from_json(j.at("config"));
  AgentState st;
  st.actor = nn::load(dir / "actor.bin");
  st.actor_target = nn::load(dir / "actor_target.bin");
  st.critic1 = nn::load(dir / "critic1.bin");
  st.critic2 = nn::load(dir / "critic2.bin");
  st.critic1_target = nn::load(dir / "critic1_target.bin");
  st.critic2_target = nn::load(dir / "critic2_target.bin");
  st.actor_opt = nn::OptimState::for_model(st.actor, cfg.actor_lr);
  st.critic1_opt = nn::OptimState::for_model(st.critic1, cfg.critic_lr);
  st.critic2_opt = nn::OptimState::for_model(st.critic2, cfg.critic_lr);
  if (std::filesystem::exists(dir / "distance.json")) {
    st.distance = distance::load_distance(dir / "distance");
  }
  st.step = j.at("step");
  st.actor_updates = j.at("actor_updates");
  st.lambda = std::stod(j.at("lambda").get<std::string>());
  st.state_dim = j.at("state_dim");
  st.action_dim = j.at("action_dim");
  st.max_action = j.at("max_action");
  if (!j.at("norm_stats").is_null()) {
    data::NormStats ns;
    const auto& m = j["norm_stats"]["mean"];
    const auto& s = j["norm_stats"]["std"];
    ns.mean.resize(static_cast<Eigen::Index>(m.size()));
    ns.std.resize(static_cast<Eigen::Index>(s.size()));
    for (std::size_t i = 0; i < m.size(); ++i) {
      ns.mean(static_cast<Eigen::Index>(i)) = std::stod(m[i].get<std::string>());
      ns.std(static_cast<Eigen::Index>(i)) = std::stod(s[i].get<std::string>());
    }
    st.norm = ns;
  }
  return {std::move(st), std::move(cfg)};
}

}  // namespace doge::agents

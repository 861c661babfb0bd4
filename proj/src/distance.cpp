#include "doge/distance.hpp"

#include "doge/geometry.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>

namespace doge::distance {

namespace {

std::vector<int> layer_dims(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

Matrix stack(const Matrix& top, const Matrix& bottom) {
  Matrix m(top.rows() + bottom.rows(), top.cols());
  m.topRows(top.rows()) = top;
  m.bottomRows(bottom.rows()) = bottom;
  return m;
}

}  // namespace

DistanceModel DistanceModel::create(int state_dim, int action_dim, double max_action,
                                    const DistanceConfig& cfg, Rng& rng) {
  if (cfg.n_noise < 1) {
    throw InvalidArgument("distance: n_noise must be at least 1");
  }
  DistanceModel m;
  m.net = nn::MlpModel::init(layer_dims(state_dim + action_dim, cfg.hidden, 1), rng);
  m.opt = nn::OptimState::for_model(m.net, cfg.lr);
  m.state_dim = state_dim;
  m.action_dim = action_dim;
  m.max_action = max_action;
  m.noise_multiplier = cfg.noise_multiplier;
  m.n_noise = cfg.n_noise;
  return m;
}

double DistanceModel::operator()(const Vec& s, const Vec& a) const {
  Vec x(s.size() + a.size());
  x << s, a;
  return nn::forward(net, x)(0);
}

Matrix DistanceModel::evaluate(const Matrix& states, const Matrix& actions) const {
  return nn::forward_batch(net, stack(states, actions));
}

double train_step(DistanceModel& model, const Matrix& states, const Matrix& actions, Rng& rng,
                  double divergence_loss) {
  const Eigen::Index b = states.cols();
  const Eigen::Index n = model.n_noise;
  const double range = model.noise_multiplier * model.max_action;
  std::uniform_real_distribution<double> u(-range, range);

  Matrix inputs(model.state_dim + model.action_dim, b * n);
  Matrix targets(1, b * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index i = 0; i < b; ++i) {
      const Eigen::Index c = k * b + i;
      Vec noise(model.action_dim);
      for (Eigen::Index d = 0; d < noise.size(); ++d) {
        noise(d) = u(rng);
      }
      inputs.col(c).head(model.state_dim) = states.col(i);
      inputs.col(c).tail(model.action_dim) = noise;
      targets(0, c) = (actions.col(i) - noise).norm();
    }
  }
  const auto res = nn::grad_mse(model.net, inputs, targets);
  if (res.loss > divergence_loss) {
    throw Divergence("distance training diverged: loss " + std::to_string(res.loss) +
                     " at step " + std::to_string(model.trained_steps));
  }
  nn::adam_step(model.net, res.grads, model.opt);
  ++model.trained_steps;
  return res.loss;
}

DistanceModel train_distance(const data::OfflineDataset& ds, const DistanceConfig& cfg, Rng& rng,
                             const TrainProgress& progress) {
  auto model = DistanceModel::create(ds.state_dim(), ds.action_dim(), ds.max_action(), cfg, rng);
  for (long t = 0; t < cfg.steps; ++t) {
    const auto batch = data::sample_minibatch(ds, rng, cfg.batch);
    const double loss = train_step(model, batch.s, batch.a, rng, cfg.divergence_loss);
    if (progress.every > 0 && progress.callback && (t + 1) % progress.every == 0) {
      progress.callback(t + 1, loss);
    }
  }
  return model;
}

void save_distance(const DistanceModel& model, const std::filesystem::path& stem) {
  auto bin = stem;
  bin += ".bin";
  auto header = stem;
  header += ".json";
  nn::save(model.net, bin);
  nlohmann::json j{{"state_dim", model.state_dim},
                   {"action_dim", model.action_dim},
                   {"max_action", model.max_action},
                   {"n_noise", model.n_noise},
                   {"noise_multiplier", model.noise_multiplier},
                   {"trained_steps", model.trained_steps},
                   {"params", bin.filename().string()}};
  std::ofstream(header) << j.dump(2) << '\n';
}

DistanceModel load_distance(const std::filesystem::path& stem) {
  auto bin = stem;
  bin += ".bin";
  auto header = stem;
  header += ".json";
  std::ifstream in(header);
  if (!in) {
    throw InvalidArgument("missing distance header " + header.string());
  }
  const auto j = nlohmann::json::parse(in);
  DistanceModel m;
  m.net = nn::load(bin);
  m.state_dim = j.at("state_dim");
  m.action_dim = j.at("action_dim");
  m.max_action = j.at("max_action");
  m.n_noise = j.at("n_noise");
  m.noise_multiplier = j.at("noise_multiplier");
  m.trained_steps = j.at("trained_steps");
  m.opt = nn::OptimState::for_model(m.net, 1e-3);
  return m;
}

// ------------------------------------------------------------ oracle

DistanceOracle::DistanceOracle(const data::OfflineDataset& ds, double state_tolerance)
    : states_(ds.states()), actions_(ds.actions()), tolerance_(state_tolerance) {
  if (state_tolerance < 0.0) {
    throw InvalidArgument("oracle: tolerance must be non-negative");
  }
}

Matrix DistanceOracle::matched_actions(const Vec& s) const {
  if (s.size() != states_.rows()) {
    throw InvalidArgument("oracle: state dimension mismatch");
  }
  std::vector<Eigen::Index> hits;
  for (Eigen::Index i = 0; i < states_.cols(); ++i) {
    if ((states_.col(i) - s).norm() <= tolerance_) {
      hits.push_back(i);
    }
  }
  if (hits.empty()) {
    throw StateNotInDataset("state not in dataset");
  }
  Matrix out(actions_.rows(), static_cast<Eigen::Index>(hits.size()));
  for (std::size_t k = 0; k < hits.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = actions_.col(hits[k]);
  }
  return out;
}

double DistanceOracle::operator()(const Vec& s, const Vec& a) const {
  const Matrix acts = matched_actions(s);
  double total = 0.0;
  for (Eigen::Index i = 0; i < acts.cols(); ++i) {
    total += (a - acts.col(i)).norm();
  }
  return total / static_cast<double>(acts.cols());
}

Vec DistanceOracle::evaluate(const Vec& s, const Matrix& actions, kernels::Exec exec) const {
  return kernels::mean_distance_batch(matched_actions(s), actions, exec);
}

Vec DistanceOracle::centroid(const Vec& s) const { return matched_actions(s).rowwise().mean(); }

double oracle_g(const data::OfflineDataset& ds, const Vec& s, const Vec& a,
                double state_tolerance) {
  return DistanceOracle(ds, state_tolerance)(s, a);
}

Vec centroid(const data::OfflineDataset& ds, const Vec& s, double state_tolerance) {
  return DistanceOracle(ds, state_tolerance).centroid(s);
}

// ------------------------------------------------------------ property checks

double check_convexity(const Evaluable& g, const Vec& s, int action_dim, double bound, int trials,
                       Rng& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  std::uniform_real_distribution<double> t01(0.0, 1.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < trials; ++k) {
    Vec a1(action_dim);
    Vec a2(action_dim);
    for (int d = 0; d < action_dim; ++d) {
      a1(d) = u(rng);
      a2(d) = u(rng);
    }
    const double t = t01(rng);
    const double lhs = g(s, t * a1 + (1.0 - t) * a2);
    const double rhs = t * g(s, a1) + (1.0 - t) * g(s, a2);
    worst = std::max(worst, lhs - rhs);
  }
  return trials > 0 ? worst : 0.0;
}

double check_centroid_bound(const Evaluable& g, const DistanceOracle& oracle, const Vec& s,
                            const Matrix& samples) {
  const Vec c = oracle.centroid(s);
  double margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < samples.cols(); ++i) {
    const Vec a = samples.col(i);
    margin = std::min(margin, g(s, a) - (a - c).norm());
  }
  return margin;
}

DirectionCheck check_gradient_direction(const Evaluable& g, const DistanceOracle& oracle,
                                        const Vec& s, const Vec& a, double step, double fd_h) {
  const Matrix acts = oracle.matched_actions(s);
  DirectionCheck out;
  out.distance_before = geometry::distance_to_point_hull(a, acts);
  if (out.distance_before <= 1e-12) {
    throw InvalidArgument("check_gradient_direction: action lies inside the action hull");
  }
  out.gradient.resize(a.size());
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    Vec hi = a;
    Vec lo = a;
    hi(d) += fd_h;
    lo(d) -= fd_h;
    out.gradient(d) = (g(s, hi) - g(s, lo)) / (2.0 * fd_h);
  }
  const double norm = out.gradient.norm();
  if (norm == 0.0 || !std::isfinite(norm)) {
    out.distance_after = out.distance_before;
    return out;
  }
  const Vec moved = a - step * out.gradient / norm;
  out.distance_after = geometry::distance_to_point_hull(moved, acts);
  out.decreased = out.distance_after < out.distance_before;
  return out;
}

}  // namespace doge::distance

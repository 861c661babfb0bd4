#include "doge/envs.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace doge::envs {

Vec Environment::clip_action(const Vec& a) const {
  if (a.size() != action_dim()) {
    throw InvalidArgument(id() + ": action has wrong dimension");
  }
  return a.cwiseMax(-max_action()).cwiseMin(max_action());
}

// ---------------------------------------------------------------- random walk

Vec RandomWalk1d::reset(Rng& rng) const {
  if (cfg_.fixed_start) {
    return Vec::Constant(1, *cfg_.fixed_start);
  }
  std::uniform_real_distribution<double> u(cfg_.lo, cfg_.hi);
  return Vec::Constant(1, u(rng));
}

double RandomWalk1d::reward(double next_state) const {
  const double d = next_state - cfg_.hi;
  return (400.0 - d * d) / 400.0;
}

StepResult RandomWalk1d::step(const Vec& state, const Vec& action, Rng* /*rng*/) const {
  if (state.size() != 1) {
    throw InvalidArgument("randomwalk1d: state must be 1-dimensional");
  }
  const double a = clip_action(action)(0);
  const double next = std::clamp(state(0) + a, cfg_.lo, cfg_.hi);
  return StepResult{Vec::Constant(1, next), reward(next), false};
}

bool RandomWalk1d::valid_state(const Vec& state) const {
  return state.size() == 1 && state(0) >= cfg_.lo && state(0) <= cfg_.hi;
}

// ---------------------------------------------------------------- point maze

bool Box::contains(const Vec& x) const {
  return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
}

bool Box::interior(const Vec& x) const {
  return (x.array() > lo.array()).all() && (x.array() < hi.array()).all();
}

namespace {

Box box2(double x0, double y0, double x1, double y1) {
  Vec lo(2);
  Vec hi(2);
  lo << x0, y0;
  hi << x1, y1;
  return Box{lo, hi};
}

Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

}  // namespace

PointMaze2d::Layout PointMaze2d::u_maze() {
  Layout l;
  l.arena = box2(0, 0, 5, 5);
  l.walls = {box2(1, 0, 4, 4)};
  l.start = box2(0.2, 0.2, 0.8, 0.8);
  l.goal_center = vec2(4.5, 0.5);
  l.goal_radius = 0.5;
  l.horizon = 150;
  l.waypoints = {vec2(0.5, 0.5), vec2(0.5, 4.5), vec2(4.5, 4.5), vec2(4.5, 0.5)};
  return l;
}

PointMaze2d::PointMaze2d(Layout layout) : layout_(std::move(layout)) {
  if (layout_.arena.lo.size() != 2 || layout_.arena.hi.size() != 2) {
    throw InvalidArgument("pointmaze2d: arena must be 2D");
  }
  if (layout_.horizon <= 0 || layout_.dt <= 0.0 || layout_.max_action <= 0.0) {
    throw InvalidArgument("pointmaze2d: horizon, dt and max_action must be positive");
  }
  for (const auto& w : layout_.walls) {
    const Vec extent = w.hi - w.lo;
    if ((extent.array() <= layout_.dt * layout_.max_action).any()) {
      // Thinner walls could be stepped over in one move.
      throw InvalidArgument("pointmaze2d: walls must be thicker than one step");
    }
  }
}

Vec PointMaze2d::reset(Rng& rng) const {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Vec s(2);
    for (int d = 0; d < 2; ++d) {
      std::uniform_real_distribution<double> u(layout_.start.lo(d), layout_.start.hi(d));
      s(d) = u(rng);
    }
    if (valid_state(s)) {
      return s;
    }
  }
  throw InvalidArgument("pointmaze2d: start region lies inside walls");
}

bool PointMaze2d::in_wall(const Vec& state) const {
  return std::any_of(layout_.walls.begin(), layout_.walls.end(),
                     [&](const Box& w) { return w.interior(state); });
}

bool PointMaze2d::valid_state(const Vec& state) const {
  return state.size() == 2 && layout_.arena.contains(state) && !in_wall(state);
}

bool PointMaze2d::at_goal(const Vec& state) const {
  return (state - layout_.goal_center).norm() <= layout_.goal_radius;
}

Vec PointMaze2d::move(const Vec& from, const Vec& delta) const {
  Vec p = from;
  for (int axis = 0; axis < 2; ++axis) {
    p(axis) = std::clamp(p(axis) + delta(axis), layout_.arena.lo(axis), layout_.arena.hi(axis));
    for (const auto& w : layout_.walls) {
      if (w.interior(p)) {
        p(axis) = delta(axis) > 0.0 ? w.lo(axis) : w.hi(axis);
      }
    }
  }
  return p;
}

StepResult PointMaze2d::step(const Vec& state, const Vec& action, Rng* rng) const {
  if (state.size() != 2) {
    throw InvalidArgument("pointmaze2d: state must be 2-dimensional");
  }
  Vec delta = layout_.dt * clip_action(action);
  if (layout_.position_noise > 0.0 && rng != nullptr) {
    std::normal_distribution<double> n(0.0, layout_.position_noise);
    delta(0) += n(*rng);
    delta(1) += n(*rng);
    // Noise never exceeds the step bound, keeping walls un-tunnelable.
    const double cap = layout_.dt * layout_.max_action;
    delta = delta.cwiseMax(-cap).cwiseMin(cap);
  }
  StepResult r;
  r.next = move(state, delta);
  r.terminal = at_goal(r.next);
  r.reward = (r.terminal ? 1.0 : 0.0) - (layout_.subtract_one ? 1.0 : 0.0);
  return r;
}

// ---------------------------------------------------------------- layout I/O

namespace {

Box box_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw InvalidArgument("maze layout: rectangles are [x0, y0, x1, y1]");
  }
  const double x0 = j[0].get<double>();
  const double y0 = j[1].get<double>();
  const double x1 = j[2].get<double>();
  const double y1 = j[3].get<double>();
  if (x1 < x0 || y1 < y0) {
    throw InvalidArgument("maze layout: rectangle corners out of order");
  }
  return box2(x0, y0, x1, y1);
}

nlohmann::json box_to_json(const Box& b) { return {b.lo(0), b.lo(1), b.hi(0), b.hi(1)}; }

}  // namespace

PointMaze2d::Layout maze_layout_from_json_text(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  static const std::vector<std::string> known = {
      "arena", "walls", "start", "goal", "horizon", "dt", "max_action", "gamma",
      "position_noise", "subtract_one", "waypoints"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      throw InvalidArgument("maze layout: unknown key '" + k + "'");
    }
  }
  PointMaze2d::Layout l;
  l.arena = box_from_json(j.at("arena"));
  for (const auto& w : j.value("walls", nlohmann::json::array())) {
    l.walls.push_back(box_from_json(w));
  }
  l.start = box_from_json(j.at("start"));
  const auto& g = j.at("goal");
  l.goal_center = vec2(g.at("center")[0].get<double>(), g.at("center")[1].get<double>());
  l.goal_radius = g.at("radius").get<double>();
  l.horizon = j.at("horizon").get<int>();
  l.dt = j.value("dt", l.dt);
  l.max_action = j.value("max_action", l.max_action);
  l.gamma = j.value("gamma", l.gamma);
  l.position_noise = j.value("position_noise", l.position_noise);
  l.subtract_one = j.value("subtract_one", l.subtract_one);
  for (const auto& w : j.value("waypoints", nlohmann::json::array())) {
    l.waypoints.push_back(vec2(w.at(0).get<double>(), w.at(1).get<double>()));
  }
  return l;
}

PointMaze2d::Layout load_maze_layout(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidArgument("cannot open maze layout " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return maze_layout_from_json_text(ss.str());
}

std::string maze_layout_to_json_text(const PointMaze2d::Layout& l) {
  nlohmann::json j;
  j["arena"] = box_to_json(l.arena);
  j["walls"] = nlohmann::json::array();
  for (const auto& w : l.walls) {
    j["walls"].push_back(box_to_json(w));
  }
  j["start"] = box_to_json(l.start);
  j["goal"] = {{"center", {l.goal_center(0), l.goal_center(1)}}, {"radius", l.goal_radius}};
  j["horizon"] = l.horizon;
  j["dt"] = l.dt;
  j["max_action"] = l.max_action;
  j["gamma"] = l.gamma;
  j["position_noise"] = l.position_noise;
  j["subtract_one"] = l.subtract_one;
  j["waypoints"] = nlohmann::json::array();
  for (const auto& w : l.waypoints) {
    j["waypoints"].push_back({w(0), w(1)});
  }
  return j.dump(2);
}

// ---------------------------------------------------------------- rollouts

Rollout rollout(const Environment& env, const Policy& policy, const Vec& start, double gamma,
                Rng* rng) {
  Rollout r;
  Vec s = start;
  double discount = 1.0;
  for (int t = 0; t < env.horizon(); ++t) {
    const Vec a = env.clip_action(policy(s));
    StepResult step = env.step(s, a, rng);
    r.states.push_back(s);
    r.actions.push_back(a);
    r.rewards.push_back(step.reward);
    r.next_states.push_back(step.next);
    r.terminals.push_back(step.terminal);
    r.discounted_return += discount * step.reward;
    discount *= gamma;
    s = std::move(step.next);
    if (step.terminal) {
      r.success = true;
      break;
    }
  }
  return r;
}

double mc_q(const Environment& env, const Policy& policy, const Vec& state, const Vec& action,
            double gamma, int n_rollouts, Rng* rng) {
  if (n_rollouts < 1) {
    throw InvalidArgument("mc_q: n_rollouts must be at least 1");
  }
  double total = 0.0;
  for (int k = 0; k < n_rollouts; ++k) {
    StepResult first = env.step(state, action, rng);
    double ret = first.reward;
    double discount = gamma;
    Vec s = std::move(first.next);
    bool done = first.terminal;
    for (int t = 1; t < env.horizon() && !done; ++t) {
      StepResult st = env.step(s, env.clip_action(policy(s)), rng);
      ret += discount * st.reward;
      discount *= gamma;
      s = std::move(st.next);
      done = st.terminal;
    }
    total += ret;
  }
  return total / n_rollouts;
}

}  // namespace doge::envs

#pragma once

#include "doge/common.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace doge::envs {

struct StepResult {
  Vec next;
  double reward = 0.0;
  /// True terminal (goal reached). Horizon truncation is not a terminal.
  bool terminal = false;
};

/// Deterministic state -> action map.
using Policy = std::function<Vec(const Vec&)>;

/// Stateless environment: the caller threads the state through step().
/// Implementations are plain values and may be copied freely across threads.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string id() const = 0;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual double max_action() const = 0;
  virtual int horizon() const = 0;
  virtual double gamma() const = 0;

  virtual Vec reset(Rng& rng) const = 0;
  /// Actions are clipped to the action box before use. `rng` feeds optional
  /// transition noise and may be null for noise-free environments.
  virtual StepResult step(const Vec& state, const Vec& action, Rng* rng) const = 0;
  /// True if the state satisfies the environment's containment constraints.
  virtual bool valid_state(const Vec& state) const = 0;

  virtual std::unique_ptr<Environment> clone() const = 0;

  Vec clip_action(const Vec& a) const;
};

/// 1D walk on [-10, 10]; s' = clip(s + a), r = (400 - (s' - 10)^2) / 400.
class RandomWalk1d final : public Environment {
 public:
  struct Config {
    double lo = -10.0;
    double hi = 10.0;
    double max_action = 1.0;
    int horizon = 50;
    double gamma = 0.9;
    /// Uniform over [lo, hi] when unset.
    std::optional<double> fixed_start;
  };

  RandomWalk1d() = default;
  explicit RandomWalk1d(Config cfg) : cfg_(cfg) {}

  std::string id() const override { return "randomwalk1d"; }
  int state_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  double max_action() const override { return cfg_.max_action; }
  int horizon() const override { return cfg_.horizon; }
  double gamma() const override { return cfg_.gamma; }
  const Config& config() const { return cfg_; }

  Vec reset(Rng& rng) const override;
  StepResult step(const Vec& state, const Vec& action, Rng* rng) const override;
  bool valid_state(const Vec& state) const override;
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<RandomWalk1d>(*this);
  }

  double reward(double next_state) const;

 private:
  Config cfg_;
};

/// Axis-aligned box [lo, hi] in any dimension; containment is inclusive.
struct Box {
  Vec lo;
  Vec hi;

  bool contains(const Vec& x) const;
  /// Strict interior.
  bool interior(const Vec& x) const;
};

/// Point mass in a walled 2D arena. Actions are velocities; each step moves
/// by dt * a, resolved one axis at a time so blocked motion stops flush with
/// the wall face.
class PointMaze2d final : public Environment {
 public:
  struct Layout {
    Box arena;
    std::vector<Box> walls;
    Box start;
    Vec goal_center;
    double goal_radius = 0.5;
    int horizon = 150;
    double dt = 0.25;
    double max_action = 1.0;
    double gamma = 0.99;
    /// Standard deviation of Gaussian position noise; 0 disables it.
    double position_noise = 0.0;
    /// Shifts every reward by -1 (reward 0/1 becomes -1/0).
    bool subtract_one = false;
    /// Corridor centerline from start to goal; used by scripted controllers.
    std::vector<Vec> waypoints;
  };

  /// 5x5 U-shaped corridor: up the left column, across the top row, down the
  /// right column to the goal.
  static Layout u_maze();

  PointMaze2d() : PointMaze2d(u_maze()) {}
  explicit PointMaze2d(Layout layout);

  std::string id() const override { return "pointmaze2d"; }
  int state_dim() const override { return 2; }
  int action_dim() const override { return 2; }
  double max_action() const override { return layout_.max_action; }
  int horizon() const override { return layout_.horizon; }
  double gamma() const override { return layout_.gamma; }
  const Layout& layout() const { return layout_; }

  Vec reset(Rng& rng) const override;
  StepResult step(const Vec& state, const Vec& action, Rng* rng) const override;
  bool valid_state(const Vec& state) const override;
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<PointMaze2d>(*this);
  }

  bool at_goal(const Vec& state) const;
  bool in_wall(const Vec& state) const;

 private:
  Vec move(const Vec& from, const Vec& delta) const;
  Layout layout_;
};

/// JSON layout: {"arena": [x0,y0,x1,y1], "walls": [[x0,y0,x1,y1], ...],
/// "start": [x0,y0,x1,y1], "goal": {"center": [x,y], "radius": r},
/// "horizon": n, optional "dt", "max_action", "gamma", "position_noise",
/// "subtract_one", "waypoints": [[x,y], ...]}.
PointMaze2d::Layout load_maze_layout(const std::filesystem::path& path);
PointMaze2d::Layout maze_layout_from_json_text(const std::string& text);
std::string maze_layout_to_json_text(const PointMaze2d::Layout& layout);

struct Rollout {
  std::vector<Vec> states;
  std::vector<Vec> actions;
  std::vector<double> rewards;
  std::vector<Vec> next_states;
  std::vector<bool> terminals;
  double discounted_return = 0.0;
  bool success = false;
};

/// Runs `policy` from `start` until a terminal or the horizon.
Rollout rollout(const Environment& env, const Policy& policy, const Vec& start, double gamma,
                Rng* rng);

/// Monte-Carlo action value: take `action` at `state`, then follow `policy`
/// for the rest of the horizon; mean discounted return over n_rollouts.
double mc_q(const Environment& env, const Policy& policy, const Vec& state, const Vec& action,
            double gamma, int n_rollouts, Rng* rng);

}  // namespace doge::envs

#include "doge/envs.hpp"

#include <doctest.h>

#include <cmath>

using namespace doge;

namespace {

Vec v1(double x) { return Vec::Constant(1, x); }
Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

}  // namespace

TEST_CASE("random walk: step examples") {
  const envs::RandomWalk1d env;
  auto r = env.step(v1(9.5), v1(1.0), nullptr);
  CHECK(r.next(0) == 10.0);
  CHECK(r.reward == 1.0);
  r = env.step(v1(-9.5), v1(-1.0), nullptr);
  CHECK(r.next(0) == -10.0);
  CHECK(r.reward == 0.0);
  r = env.step(v1(0.0), v1(0.0), nullptr);
  CHECK(r.next(0) == 0.0);
  CHECK(r.reward == 0.75);
  CHECK_FALSE(r.terminal);
}

TEST_CASE("random walk: actions are clipped, rewards stay in [0, 1]") {
  const envs::RandomWalk1d env;
  CHECK(env.step(v1(0.0), v1(5.0), nullptr).next(0) == 1.0);
  CHECK(env.step(v1(0.0), v1(-5.0), nullptr).next(0) == -1.0);
  for (double s = -10; s <= 10; s += 0.5) {
    for (double a = -1; a <= 1; a += 0.25) {
      const auto r = env.step(v1(s), v1(a), nullptr);
      CHECK(r.reward >= 0.0);
      CHECK(r.reward <= 1.0);
      CHECK(env.valid_state(r.next));
      CHECK((r.reward == 1.0) == (r.next(0) == 10.0));
    }
  }
}

TEST_CASE("random walk: reset") {
  envs::RandomWalk1d::Config c;
  c.fixed_start = -10.0;
  const envs::RandomWalk1d fixed(c);
  Rng rng(1);
  for (int k = 0; k < 5; ++k) CHECK(fixed.reset(rng)(0) == -10.0);

  const envs::RandomWalk1d env;
  Rng a(42);
  Rng b(42);
  const double s = env.reset(a)(0);
  CHECK(s == env.reset(b)(0));
  CHECK(s >= -10.0);
  CHECK(s <= 10.0);
}

TEST_CASE("mc_q: staying at the goal sums the geometric series") {
  const envs::RandomWalk1d env;
  const envs::Policy stay = [](const Vec&) { return v1(0.0); };
  const double q = envs::mc_q(env, stay, v1(10.0), v1(0.0), 0.9, 1, nullptr);
  CHECK(q == doctest::Approx((1.0 - std::pow(0.9, 50)) / 0.1).epsilon(1e-12));
  CHECK(q == doctest::Approx(9.9485).epsilon(1e-4));
}

TEST_CASE("mc_q: gamma 0 is the one-step reward; deterministic rollouts agree") {
  const envs::RandomWalk1d env;
  const envs::Policy right = [](const Vec&) { return v1(1.0); };
  CHECK(envs::mc_q(env, right, v1(0.0), v1(0.5), 0.0, 1, nullptr) ==
        env.step(v1(0.0), v1(0.5), nullptr).reward);
  const double q1 = envs::mc_q(env, right, v1(-3.0), v1(-0.5), 0.9, 1, nullptr);
  const double q100 = envs::mc_q(env, right, v1(-3.0), v1(-0.5), 0.9, 100, nullptr);
  CHECK(q1 == doctest::Approx(q100).epsilon(1e-13));
  CHECK_THROWS_AS(envs::mc_q(env, right, v1(0.0), v1(0.0), 0.9, 0, nullptr), InvalidArgument);
}

TEST_CASE("mc_q: the greedy-right policy dominates other policies") {
  const envs::RandomWalk1d env;
  const envs::Policy right = [](const Vec&) { return v1(1.0); };
  const std::vector<envs::Policy> others = {
      [](const Vec&) { return v1(0.0); },
      [](const Vec&) { return v1(0.5); },
      [](const Vec&) { return v1(-1.0); },
      [](const Vec& s) { return v1(s(0) > 0 ? 1.0 : -0.3); },
  };
  for (double s = -10; s <= 10; s += 2.5) {
    for (double a = -1; a <= 1; a += 0.5) {
      const double best = envs::mc_q(env, right, v1(s), v1(a), 0.9, 1, nullptr);
      for (const auto& p : others) {
        CHECK(best >= envs::mc_q(env, p, v1(s), v1(a), 0.9, 1, nullptr));
      }
    }
  }
}

TEST_CASE("rollout: return is consistent with rewards") {
  const envs::RandomWalk1d env;
  const envs::Policy right = [](const Vec&) { return v1(0.7); };
  const auto ro = envs::rollout(env, right, v1(-4.0), 0.9, nullptr);
  REQUIRE(ro.rewards.size() == 50);
  double g = 0.0;
  for (std::size_t t = 0; t < ro.rewards.size(); ++t) g += std::pow(0.9, t) * ro.rewards[t];
  CHECK(ro.discounted_return == doctest::Approx(g).epsilon(1e-14));
}

TEST_CASE("maze: layout, reset and wall containment") {
  const envs::PointMaze2d maze;
  Rng rng(5);
  const auto& lay = maze.layout();
  for (int k = 0; k < 100; ++k) {
    const Vec s = maze.reset(rng);
    CHECK(lay.start.contains(s));
    CHECK_FALSE(maze.in_wall(s));
  }
  // Walking right from the left corridor stops flush at the wall face x = 1.
  Vec s = v2(0.5, 2.0);
  for (int k = 0; k < 10; ++k) {
    s = maze.step(s, v2(1.0, 0.0), nullptr).next;
    CHECK_FALSE(maze.in_wall(s));
  }
  CHECK(s(0) == doctest::Approx(1.0));
  // Random actions never enter a wall or leave the arena.
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  s = maze.reset(rng);
  for (int k = 0; k < 2000; ++k) {
    s = maze.step(s, v2(u(rng), u(rng)), nullptr).next;
    CHECK(maze.valid_state(s));
  }
}

TEST_CASE("maze: reward is 1 at the goal, optional shift by -1") {
  auto lay = envs::PointMaze2d::u_maze();
  const envs::PointMaze2d maze(lay);
  const auto r = maze.step(v2(4.5, 1.1), v2(0.0, -1.0), nullptr);
  CHECK(r.terminal);
  CHECK(r.reward == 1.0);
  const auto miss = maze.step(v2(4.5, 3.0), v2(0.0, -1.0), nullptr);
  CHECK_FALSE(miss.terminal);
  CHECK(miss.reward == 0.0);
  lay.subtract_one = true;
  const envs::PointMaze2d shifted(lay);
  CHECK(shifted.step(v2(4.5, 1.1), v2(0.0, -1.0), nullptr).reward == 0.0);
  CHECK(shifted.step(v2(4.5, 3.0), v2(0.0, -1.0), nullptr).reward == -1.0);
}

TEST_CASE("maze: layout JSON round trip and unknown keys") {
  const auto lay = envs::PointMaze2d::u_maze();
  const auto text = envs::maze_layout_to_json_text(lay);
  const auto back = envs::maze_layout_from_json_text(text);
  CHECK(envs::maze_layout_to_json_text(back) == text);
  CHECK(back.walls.size() == lay.walls.size());
  CHECK(back.horizon == lay.horizon);
  CHECK_THROWS_AS(envs::maze_layout_from_json_text(R"({"arena":[0,0,5,5],"bogus":1})"),
                  InvalidArgument);
}

TEST_CASE("maze: position noise is seeded") {
  auto lay = envs::PointMaze2d::u_maze();
  lay.position_noise = 0.05;
  const envs::PointMaze2d maze(lay);
  Rng a(3);
  Rng b(3);
  const auto ra = maze.step(v2(0.5, 2.0), v2(0.0, 1.0), &a);
  const auto rb = maze.step(v2(0.5, 2.0), v2(0.0, 1.0), &b);
  CHECK(ra.next == rb.next);
  CHECK(ra.next != maze.step(v2(0.5, 2.0), v2(0.0, 1.0), nullptr).next);
}

#include "doge/experiments.hpp"

#include <doctest.h>

#include <cmath>

using namespace doge;
using experiments::ProbeKind;
using experiments::ProbeRecord;

namespace {

data::OfflineDataset sa_points(const std::vector<std::pair<double, double>>& sa) {
  std::vector<data::Transition> ts;
  for (const auto& [s, a] : sa) {
    ts.push_back({Vec::Constant(1, s), Vec::Constant(1, a), 0.0, Vec::Constant(1, s + a), false});
  }
  return data::OfflineDataset("randomwalk1d", "test", 1.0, ts);
}

agents::AgentState tiny_agent(std::uint64_t seed) {
  agents::AgentConfig c;
  c.algorithm = agents::Algorithm::td3;
  c.hidden = {8, 8};
  Rng rng(seed);
  return agents::init_agent(c, 1, 1, 1.0, rng);
}

ProbeRecord rec(double d, double dq) {
  ProbeRecord r;
  r.d = d;
  r.dq = dq;
  return r;
}

}  // namespace

TEST_CASE("error grid: relative error is zero at each row minimum") {
  const auto ds = sa_points({{0.0, 0.0}, {1.0, 0.5}, {0.5, -0.5}});
  const std::vector<double> sc = {0.0, 0.5, 1.0};
  const std::vector<double> ac = {-0.5, 0.0, 0.5};
  std::vector<double> qh(9);
  std::vector<double> qm(9);
  for (int i = 0; i < 9; ++i) {
    qh[static_cast<std::size_t>(i)] = 0.3 * i;
    qm[static_cast<std::size_t>(i)] = 0.1 * i * i;
  }
  const auto g = experiments::error_grid_from(sc, ac, qh, qm, ds);
  REQUIRE(g.cells.size() == 9);
  for (int i = 0; i < 3; ++i) {
    double lo = 1e9;
    for (int j = 0; j < 3; ++j) {
      CHECK(g.at(i, j).eps == qh[static_cast<std::size_t>(3 * i + j)] - qm[static_cast<std::size_t>(3 * i + j)]);
      CHECK(g.at(i, j).rel >= 0.0);
      lo = std::min(lo, g.at(i, j).rel);
    }
    CHECK(lo == 0.0);
  }
  CHECK(g.at(0, 1).in_hull);
  CHECK_FALSE(g.at(0, 0).in_hull);
  CHECK(g.n_in + g.n_out == 9);

  // A perfect critic gives zero everywhere.
  const auto perfect = experiments::error_grid_from(sc, ac, qm, qm, ds);
  for (const auto& c : perfect.cells) CHECK(c.rel == 0.0);
  CHECK(perfect.mean_rel_in == 0.0);
}

TEST_CASE("error grid: agent pipeline on the random walk") {
  const envs::RandomWalk1d env;
  Rng rng(1);
  const auto ds = data::generate_randomwalk(env, data::geometry_preset("band"), rng);
  const auto agent = tiny_agent(2);
  const auto g = experiments::error_grid(env, agent, ds, 5, 4, kernels::Exec::serial);
  const auto gp = experiments::error_grid(env, agent, ds, 5, 4, kernels::Exec::parallel);
  REQUIRE(g.cells.size() == 20);
  CHECK(g.at(0, 0).s == doctest::Approx(-8.0));
  CHECK(g.at(0, 0).a == doctest::Approx(-0.75));
  for (std::size_t i = 0; i < g.cells.size(); ++i) {
    CHECK(g.cells[i].q_hat == gp.cells[i].q_hat);
    CHECK(g.cells[i].q_mc == gp.cells[i].q_mc);
  }
  CHECK(g.at(2, 1).q_hat ==
        agents::q_value(agent, Vec::Constant(1, g.at(2, 1).s), Vec::Constant(1, g.at(2, 1).a)));
}

TEST_CASE("probe: k = 1 samples are dataset points") {
  const auto ds = sa_points({{0.0, 0.0}, {2.0, 0.5}, {-3.0, -0.5}});
  experiments::ProbeConfig cfg;
  cfg.n_samples = 50;
  cfg.k = 1;
  cfg.extrapolated_fraction = 0.0;
  Rng rng(3);
  const auto recs = experiments::interp_extrap_probe(ds, tiny_agent(1), cfg, rng);
  REQUIRE(recs.size() == 50);
  for (const auto& r : recs) {
    CHECK(r.kind == ProbeKind::interpolated);
    CHECK(r.d == 0.0);
    CHECK(r.dq == 0.0);
  }
  cfg.extrapolated_fraction = 0.5;
  CHECK_THROWS_AS(experiments::interp_extrap_probe(ds, tiny_agent(1), cfg, rng), InvalidArgument);
}

TEST_CASE("probe: interpolated points stay in the hull, extrapolated ones leave the segment") {
  // Two points on the line a = 0: every affine combination stays on it.
  const auto ds = sa_points({{0.0, 0.0}, {2.0, 0.0}});
  const double bound = experiments::max_pairwise_distance(ds);
  CHECK(bound == 2.0);
  experiments::ProbeConfig cfg;
  cfg.n_samples = 400;
  cfg.k = 2;
  cfg.rescale = false;
  Rng rng(4);
  const auto recs = experiments::interp_extrap_probe(ds, tiny_agent(2), cfg, rng);
  int n_ex = 0;
  for (const auto& r : recs) {
    CHECK(std::abs(r.x(1)) <= 1e-12);
    if (r.kind == ProbeKind::interpolated) {
      CHECK(r.x(0) >= -1e-12);
      CHECK(r.x(0) <= 2.0 + 1e-12);
      CHECK(r.d <= 1.0 + 1e-12);
      CHECK(r.d <= bound);
      CHECK(r.negated == -1);
    } else {
      ++n_ex;
      CHECK(r.negated >= 0);
      CHECK(r.scale == 1.0);
      if (r.d > 1e-9) {
        CHECK((r.x(0) < 0.0 || r.x(0) > 2.0));
      }
    }
  }
  CHECK(n_ex > 100);
  CHECK(n_ex < 300);
}

TEST_CASE("binned_max: ordering, merging and inversions") {
  std::vector<ProbeRecord> rs;
  for (int i = 0; i < 10; ++i) rs.push_back(rec(i, i));
  auto bins = experiments::binned_max(rs, 10, 1);
  REQUIRE(bins.size() == 10);
  CHECK(experiments::count_inversions(bins) == 0);
  CHECK(bins.front().lo == 0.0);
  CHECK(bins.back().hi == 9.0);
  CHECK(bins.back().max_dq == 9.0);

  bins = experiments::binned_max(rs, 10, 3);
  long total = 0;
  for (const auto& b : bins) {
    CHECK(b.count >= 3);
    total += b.count;
  }
  CHECK(total == 10);
  for (std::size_t i = 1; i < bins.size(); ++i) CHECK(bins[i].lo == bins[i - 1].hi);

  rs[9].dq = -1.0;
  CHECK(experiments::count_inversions(experiments::binned_max(rs, 10, 1)) == 1);
  CHECK(experiments::binned_max({}, 5, 1).empty());
  CHECK_THROWS_AS(experiments::binned_max(rs, 0, 1), InvalidArgument);
}

TEST_CASE("spearman: monotone, reversed and tied ranks") {
  CHECK(experiments::spearman({1, 2, 3, 4}, {10, 20, 30, 45}) == doctest::Approx(1.0));
  CHECK(experiments::spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  // Ranks (1, 2.5, 2.5, 4) against (1, 2, 3, 4): 4.5 / sqrt(4.5 * 5).
  CHECK(experiments::spearman({1, 2, 2, 3}, {1, 2, 3, 4}) ==
        doctest::Approx(4.5 / std::sqrt(22.5)).epsilon(1e-12));
}

TEST_CASE("eval_policy: closed form, zero spread, argument checks") {
  envs::RandomWalk1d::Config c;
  c.fixed_start = -10.0;
  const envs::RandomWalk1d env(c);
  const envs::Policy right = [](const Vec&) { return Vec::Constant(1, 1.0); };
  double expected = 0.0;
  for (int t = 0; t < 50; ++t) {
    const double s = std::min(-10.0 + (t + 1), 10.0);
    expected += std::pow(0.9, t) * (400.0 - (s - 10.0) * (s - 10.0)) / 400.0;
  }
  Rng rng(1);
  const auto r = experiments::eval_policy(env, right, 4, rng);
  CHECK(r.mean_return == doctest::Approx(expected).epsilon(1e-12));
  CHECK(r.std_return == 0.0);
  CHECK(r.episodes == 4);
  CHECK_THROWS_AS(experiments::eval_policy(env, right, 0, rng), InvalidArgument);
}

TEST_CASE("study aggregation: drop percent from raw runs") {
  using agents::Algorithm;
  std::vector<experiments::StudyRun> runs;
  auto add = [&](Algorithm a, const char* v, double s, bool failed = false) {
    experiments::StudyRun r;
    r.algorithm = a;
    r.variant = v;
    r.success = s;
    r.failed = failed;
    runs.push_back(r);
  };
  add(Algorithm::doge, "full", 0.8);
  add(Algorithm::doge, "full", 0.6);
  add(Algorithm::doge, "removed", 0.6);
  add(Algorithm::doge, "removed", 0.5);
  add(Algorithm::td3bc, "full", 0.5);
  add(Algorithm::td3bc, "removed", experiments::kFailedScore, true);
  const auto rows = experiments::aggregate_study(runs, {Algorithm::doge, Algorithm::td3bc});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].full.mean == doctest::Approx(0.7));
  CHECK(rows[0].full.std == doctest::Approx(0.1));
  CHECK(rows[0].drop_percent == doctest::Approx(100.0 * (0.7 - 0.55) / 0.7));
  CHECK(rows[1].drop_percent == doctest::Approx(100.0));
  CHECK(rows[1].failed == 1);
  CHECK(std::isnan(experiments::drop_percent(0.0, 0.0)));
  CHECK(experiments::drop_percent(0.5, 0.6) == doctest::Approx(-20.0));
}

TEST_CASE("summarize and ablation parameters") {
  CHECK(std::isnan(experiments::summarize({}).mean));
  const auto s = experiments::summarize({1.0, 3.0});
  CHECK(s.mean == 2.0);
  CHECK(s.std == 1.0);

  using experiments::AblationParam;
  CHECK(experiments::parse_ablation_param("G") == AblationParam::g_quantile);
  CHECK(experiments::parse_ablation_param("n_noise") == AblationParam::n_noise);
  CHECK_THROWS_AS(experiments::parse_ablation_param("beta"), InvalidArgument);
  const agents::AgentConfig base;
  CHECK(experiments::apply_ablation(base, AblationParam::alpha, "2.5").alpha == 2.5);
  CHECK(experiments::apply_ablation(base, AblationParam::g_quantile, "30").threshold.quantile ==
        doctest::Approx(0.3));
  CHECK(experiments::apply_ablation(base, AblationParam::n_noise, "5").distance.n_noise == 5);
  CHECK_THROWS_AS(experiments::apply_ablation(base, AblationParam::n_noise, "0"), InvalidArgument);
  CHECK_THROWS_AS(experiments::apply_ablation(base, AblationParam::alpha, "x"), InvalidArgument);
}

TEST_CASE("ablation sweep: full factorial with seeds") {
  const envs::RandomWalk1d env;
  Rng rng(1);
  const auto ds = data::generate_randomwalk(env, data::geometry_preset("band"), rng);
  agents::AgentConfig c;
  c.hidden = {8};
  c.batch = 16;
  c.total_steps = 4;
  c.distance.hidden = {8};
  c.distance.batch = 8;
  c.distance.steps = 4;
  c.log_every = 0;
  const auto rep = experiments::ablation_sweep(env, ds, c, experiments::AblationParam::g_quantile,
                                               {"50", "100"}, 2, 10, 2);
  CHECK(rep.runs.size() == 4);
  CHECK(rep.rows.size() == 2);
  CHECK(rep.all_completed());
  CHECK(rep.runs[0].seed == 11);
  CHECK(rep.runs[1].seed == 12);
}

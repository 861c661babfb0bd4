// Acceptance suite. Usage: doge_acceptance [criterion...]; no argument runs
// all nine. Prints one PASS/FAIL line per criterion, also appended to
// acceptance_report.txt in the build tree, and exits non-zero if any
// selected criterion fails.

#include "doge/agents.hpp"
#include "doge/distance.hpp"
#include "doge/experiments.hpp"
#include "doge/geometry.hpp"
#include "doge/nn.hpp"
#include "support/oracles.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace doge;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

Vec col(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Matrix uniform(Eigen::Index r, Eigen::Index c, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

/// Finite dataset with a handful of distinct states, each carrying a few
/// actions in [-1, 1]^action_dim. Returns the states used.
data::OfflineDataset random_dataset(Rng& rng, int state_dim, int action_dim, int n_states,
                                    int min_actions, int max_actions, std::vector<Vec>* states) {
  std::uniform_int_distribution<int> count(min_actions, max_actions);
  std::vector<data::Transition> ts;
  for (int k = 0; k < n_states; ++k) {
    const Vec s = uniform(state_dim, 1, rng, -5, 5).col(0);
    if (states) states->push_back(s);
    const int m = count(rng);
    for (int i = 0; i < m; ++i) {
      ts.push_back({s, uniform(action_dim, 1, rng, -1, 1).col(0), 0.0, s, false});
    }
  }
  return data::OfflineDataset("synthetic", "random", 1.0, ts);
}

// ------------------------------------------------------------ 1

Verdict c1_autodiff() {
  Rng rng(101);
  std::uniform_int_distribution<int> depth(1, 3);
  std::uniform_int_distribution<int> width(1, 64);
  std::uniform_int_distribution<int> io(1, 4);
  std::uniform_int_distribution<int> bsz(1, 4);
  const int n_models = 50;
  long checked = 0;
  long skipped = 0;
  long bad = 0;
  double worst = 0.0;
  for (int t = 0; t < n_models; ++t) {
    std::vector<int> dims{io(rng)};
    const int d = depth(rng);
    for (int l = 0; l < d; ++l) dims.push_back(width(rng));
    dims.push_back(io(rng));
    const auto model = nn::MlpModel::init(dims, rng);
    const int b = bsz(rng);
    const Matrix x = uniform(dims.front(), b, rng, -1, 1);
    const Matrix y = uniform(dims.back(), b, rng, -1, 1);
    const auto res = nn::grad_mse(model, x, y);
    for (std::size_t p = 0; p < model.params().size(); ++p) {
      for (Eigen::Index r = 0; r < model.params()[p].rows(); ++r) {
        for (Eigen::Index c = 0; c < model.params()[p].cols(); ++c) {
          const double fd = testing::fd_component(model, p, r, c, x, y);
          if (std::isnan(fd)) {
            ++skipped;
            continue;
          }
          ++checked;
          const double g = res.grads[p](r, c);
          const double diff = std::abs(g - fd);
          // Relative error with a floor: central differences carry about
          // 1e-10 of absolute round-off, which swamps near-zero components.
          const double rel = diff / std::max({std::abs(g), std::abs(fd), 1e-6});
          worst = std::max(worst, rel);
          if (rel > 1e-4) ++bad;
        }
      }
    }
  }
  std::ostringstream s;
  s << n_models << " MLPs (<= 3x64), " << checked << " components, max rel err " << worst
    << ", " << bad << " above 1e-4, " << skipped << " at ReLU kinks skipped";
  return {bad == 0 && checked > 0, s.str()};
}

// ------------------------------------------------------------ 2

Verdict c2_oracle_properties() {
  Rng rng(202);
  std::uniform_int_distribution<int> adim(1, 3);
  const int n_datasets = 100;
  const int n_actions = 1000;
  double worst_convexity = -std::numeric_limits<double>::infinity();
  double worst_centroid = std::numeric_limits<double>::infinity();
  for (int t = 0; t < n_datasets; ++t) {
    std::vector<Vec> states;
    const int ad = adim(rng);
    const auto ds = random_dataset(rng, 2, ad, 3, 1, 12, &states);
    const distance::DistanceOracle oracle(ds);
    const distance::Evaluable g = [&](const Vec& s, const Vec& a) { return oracle(s, a); };
    const Vec& s = states[static_cast<std::size_t>(t) % states.size()];
    worst_convexity =
        std::max(worst_convexity, distance::check_convexity(g, s, ad, 3.0, n_actions, rng));
    worst_centroid = std::min(worst_centroid, distance::check_centroid_bound(
                                                  g, oracle, s, uniform(ad, n_actions, rng, -3, 3)));
  }
  std::ostringstream s;
  s << n_datasets << " datasets x " << n_actions << " actions: max convexity violation "
    << worst_convexity << " (<= 1e-9), min centroid margin " << worst_centroid << " (>= -1e-9)";
  return {worst_convexity <= 1e-9 && worst_centroid >= -1e-9, s.str()};
}

// ------------------------------------------------------------ 3

Verdict c3_hull_direction() {
  Rng rng(303);
  std::uniform_int_distribution<int> adim(1, 2);
  const int n_datasets = 100;
  const int probes_per_dataset = 20;
  long total = 0;
  long decreased = 0;
  for (int t = 0; t < n_datasets; ++t) {
    std::vector<Vec> states;
    const int ad = adim(rng);
    const auto ds = random_dataset(rng, 1, ad, 2, 1, 8, &states);
    const distance::DistanceOracle oracle(ds);
    const distance::Evaluable g = [&](const Vec& s, const Vec& a) { return oracle(s, a); };
    const Vec& s = states.front();
    const Matrix matched = oracle.matched_actions(s);
    for (int k = 0; k < probes_per_dataset;) {
      const Vec a = uniform(ad, 1, rng, -2.5, 2.5).col(0);
      if (geometry::distance_to_point_hull(a, matched) <= 1e-2) continue;
      ++k;
      ++total;
      if (distance::check_gradient_direction(g, oracle, s, a, 1e-3).decreased) ++decreased;
    }
  }
  const double frac = static_cast<double>(decreased) / static_cast<double>(total);
  std::ostringstream s;
  s << n_datasets << " datasets, " << total << " probes outside the hull: " << decreased
    << " decreased (" << 100.0 * frac << "%, need >= 99%)";
  return {frac >= 0.99, s.str()};
}

// ------------------------------------------------------------ 4 and 5

agents::AgentConfig walk_td3_config() {
  agents::AgentConfig c;
  c.algorithm = agents::Algorithm::td3;
  c.hidden = {64, 64};
  c.actor_lr = 1e-3;
  c.critic_lr = 1e-3;
  c.gamma = 0.9;
  c.total_steps = 10000;
  c.eval_every = 0;
  c.log_every = 0;
  return c;
}

struct WalkRun {
  data::OfflineDataset ds;
  agents::AgentState agent;
};

/// Same streams as the command-line pipeline: data from (seed, 0), training
/// from (seed, 1).
WalkRun train_walk(const std::string& geometry, std::uint64_t seed) {
  const envs::RandomWalk1d env;
  Rng drng = derive_rng(seed, 0);
  auto ds = data::generate_randomwalk(env, data::geometry_preset(geometry), drng);
  Rng trng = derive_rng(seed, 1);
  auto res = agents::train(ds, walk_td3_config(), trng);
  return {std::move(ds), std::move(res.agent)};
}

Verdict c4_geometry() {
  const envs::RandomWalk1d env;
  int wins = 0;
  int runs = 0;
  std::ostringstream s;
  for (const std::string geo : {"band", "block", "quadrant"}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto run = train_walk(geo, seed);
      const auto grid = experiments::error_grid(env, run.agent, run.ds, 100, 50);
      const bool win = grid.mean_rel_in < grid.mean_rel_out;
      wins += win ? 1 : 0;
      ++runs;
      s << geo << '/' << seed << ' ' << grid.mean_rel_in << '<' << grid.mean_rel_out
        << (win ? "" : "(no)") << "; ";
    }
  }
  s << wins << "/" << runs << " runs with in-hull < out-of-hull (need >= 8/9)";
  return {wins >= 8, s.str()};
}

Verdict c5_probe() {
  bool pass = true;
  std::ostringstream s;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto run = train_walk("band", seed);
    const double bound = experiments::max_pairwise_distance(run.ds);
    experiments::ProbeConfig pc;
    pc.n_samples = 2000;
    Rng prng = derive_rng(seed, 4);
    const auto recs = experiments::interp_extrap_probe(run.ds, run.agent, pc, prng);
    int outside_bound = 0;
    std::vector<double> d;
    std::vector<double> dq;
    for (const auto& r : recs) {
      if (r.kind == experiments::ProbeKind::interpolated && r.d > bound) ++outside_bound;
      d.push_back(r.d);
      dq.push_back(r.dq);
    }
    const double rho = experiments::spearman(d, dq);
    const auto bins = experiments::binned_max(recs, 20, 5);
    const int inv = experiments::count_inversions(bins);
    const bool ok = recs.size() >= 2000 && outside_bound == 0 && rho > 0.3 && inv <= 1;
    pass = pass && ok;
    s << "band/" << seed << ": " << recs.size() << " points, interpolated d > B: " << outside_bound
      << ", spearman " << rho << ", inversions " << inv << " in " << bins.size() << " bins"
      << (ok ? "" : " (fail)") << "; ";
  }
  return {pass, s.str()};
}

// ------------------------------------------------------------ 6

Verdict c6_distance_fidelity() {
  Rng rng(606);
  const std::vector<double> state_values = {-6.0, -2.0, 0.0, 3.0, 7.0};
  std::uniform_int_distribution<int> count(3, 10);
  std::vector<data::Transition> ts;
  for (double sv : state_values) {
    const Vec s = Vec::Constant(1, sv);
    const int m = count(rng);
    for (int i = 0; i < m; ++i) ts.push_back({s, uniform(1, 1, rng, -1, 1).col(0), 0.0, s, false});
  }
  const data::OfflineDataset ds("synthetic", "five-states", 1.0, ts);
  distance::DistanceConfig cfg;
  cfg.hidden = {64, 64};
  cfg.steps = 10000;
  cfg.batch = 64;
  const auto g = distance::train_distance(ds, cfg, rng);
  const distance::DistanceOracle oracle(ds);
  double total = 0.0;
  int n = 0;
  for (double sv : state_values) {
    for (int i = 0; i <= 40; ++i) {
      const Vec s = Vec::Constant(1, sv);
      const Vec a = Vec::Constant(1, -1.0 + 0.05 * i);
      total += std::abs(g(s, a) - oracle(s, a));
      ++n;
    }
  }
  const double mae = total / n;
  std::ostringstream s;
  s << ds.size() << " transitions at 5 states, " << g.trained_steps << " steps: MAE " << mae
    << " (<= 0.05 * a_max = 0.05)";
  return {mae <= 0.05, s.str()};
}

// ------------------------------------------------------------ 7

Verdict c7_generalization() {
  auto layout = envs::PointMaze2d::u_maze();
  layout.subtract_one = true;
  const envs::PointMaze2d env(layout);
  experiments::StudyConfig sc;
  auto& c = sc.base;
  c.hidden = {64, 64};
  c.total_steps = 30000;
  c.critic_lr = 1e-3;
  c.gamma = 0.99;
  c.alpha = 5.0;
  c.normalize_states = true;
  c.eval_every = 0;
  c.distance.hidden = {64, 64};
  c.distance.steps = 10000;
  c.distance.batch = 64;
  // One box across each corridor on the way to the goal.
  sc.removal = {{col({0.0, 2.3}), col({1.0, 2.7})}, {col({2.3, 4.0}), col({2.7, 5.0})}};
  sc.seeds = 5;
  sc.eval_episodes = 100;
  sc.seed = 0;
  // TD3+BC keeps its usual weight.
  experiments::StudyConfig sc_doge = sc;
  sc_doge.algorithms = {agents::Algorithm::doge};
  experiments::StudyConfig sc_bc = sc;
  sc_bc.algorithms = {agents::Algorithm::td3bc};
  sc_bc.base.alpha = 2.5;
  const auto rd = experiments::generalization_study(env, sc_doge);
  const auto rb = experiments::generalization_study(env, sc_bc);
  const auto& doge_row = rd.rows.front();
  const auto& bc_row = rb.rows.front();
  const bool fraction_ok = rd.removed_fraction >= 0.05 && rd.removed_fraction <= 0.15;
  const bool pass = fraction_ok && doge_row.drop_percent < bc_row.drop_percent &&
                    doge_row.removed.mean > 0.0;
  std::ostringstream s;
  s << "removed " << 100.0 * rd.removed_fraction << "% of " << rd.full_size
    << " transitions; DOGE success " << doge_row.full.mean << " -> " << doge_row.removed.mean
    << " (drop " << doge_row.drop_percent << "%), TD3+BC " << bc_row.full.mean << " -> "
    << bc_row.removed.mean << " (drop " << bc_row.drop_percent << "%), failed runs "
    << doge_row.failed + bc_row.failed;
  return {pass, s.str()};
}

// ------------------------------------------------------------ 8

Verdict c8_mechanics() {
  std::vector<std::string> failures;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };
  Matrix q(1, 2);
  q << 75.0, -75.0;
  expect(std::abs(agents::compute_beta(7.5, q) - 0.1) <= 1e-15, "beta");
  expect(agents::lambda_step(99.99, 3e-4, 1e3, 1.0, 100.0) == 100.0, "lambda upper clip");
  expect(agents::lambda_step(1.01, 3e-4, -1e3, 1.0, 100.0) == 1.0, "lambda lower clip");
  Matrix gd(1, 4);
  gd << 0.1, 0.2, 0.3, 0.4;
  expect(std::abs(agents::Threshold{}.apply(gd) - 0.25) <= 1e-15, "G batch mean");

  const envs::RandomWalk1d env;
  Rng drng(8);
  const auto ds = data::generate_randomwalk(env, data::geometry_preset("band"), drng);
  agents::AgentConfig c;
  c.hidden = {16, 16};
  c.distance.hidden = {16, 16};
  c.batch = 32;
  c.distance.batch = 16;
  c.log_every = 0;
  for (long steps : {1L, 10L, 11L, 100L}) {
    c.total_steps = steps;
    Rng rng(1);
    const auto res = agents::train(ds, c, rng);
    expect(res.agent.actor_updates == steps / 2, "actor updates after " + std::to_string(steps));
  }

  Rng rng(2);
  const auto st = agents::init_agent(c, 1, 1, 1.0, rng);
  const auto batch = data::sample_minibatch(ds, rng, 64);
  agents::ActorOptions zero;
  zero.lambda_override = 0.0;
  const auto g_doge = agents::actor_gradient(st, c, batch, zero);
  auto ct = c;
  ct.algorithm = agents::Algorithm::td3;
  const auto g_td3 = agents::actor_gradient(st, ct, batch);
  bool equal = g_doge.grads.size() == g_td3.grads.size();
  for (std::size_t i = 0; equal && i < g_doge.grads.size(); ++i) {
    equal = g_doge.grads[i] == g_td3.grads[i];
  }
  expect(equal, "lambda=0 gradient equals TD3");

  std::string detail = "beta, lambda clip, G mean, floor(steps/2) actor updates, lambda=0 == TD3";
  if (!failures.empty()) {
    detail = "failed:";
    for (const auto& f : failures) detail += " [" + f + "]";
  }
  return {failures.empty(), detail};
}

// ------------------------------------------------------------ 9

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DOGE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

Verdict c9_determinism() {
  const fs::path root = fs::temp_directory_path() / "doge_acceptance_c9";
  fs::remove_all(root);
  struct Step {
    std::string name;
    std::string args;
    std::vector<std::string> csvs;
  };
  auto steps_for = [](const fs::path& dir) {
    const std::string d = dir.string();
    const std::string data = d + "/data/dataset.csv";
    const std::string ckpt = d + "/train/checkpoints";
    const std::string small = " --set agent.hidden=[16,16] --set agent.distance.hidden=[16,16]"
                              " --set agent.batch=32 --set agent.distance.batch=16";
    return std::vector<Step>{
        {"data", "--seed 7 --out " + d + "/data gen-data --geometry band", {"dataset.csv"}},
        {"train", "--seed 7 --out " + d + "/train" + small + " train --data " + data + " --steps 300",
         {"train_log.csv"}},
        {"eval", "--seed 7 --out " + d + "/eval eval --checkpoint " + ckpt + " --data " + data,
         {"eval.csv"}},
        {"grid", "--seed 7 --out " + d + "/grid grid --checkpoint " + ckpt + " --data " + data +
                     " --n-s 20 --n-a 10",
         {"grid.csv", "grid_matrix.csv"}},
        {"probe", "--seed 7 --out " + d + "/probe probe --checkpoint " + ckpt + " --data " + data +
                      " --samples 300",
         {"probe.csv", "probe_bins.csv"}},
        {"ablate", "--seed 7 --out " + d + "/ablate" + small + " ablate --data " + data +
                       " --param G --values 50,100 --seeds 2 --steps 100",
         {"ablation_runs.csv", "ablation_summary.csv"}},
        {"study", "--seed 7 --out " + d + "/study" + small +
                      " --set dataset.maze.n_episodes=20 --set eval.episodes=5"
                      " study --seeds 1 --steps 100 --remove 0,2.3,1,2.7",
         {"dataset_full.csv", "dataset_removed.csv", "study_runs.csv", "study_summary.csv"}},
    };
  };
  const auto a = steps_for(root / "a");
  const auto b = steps_for(root / "b");
  int compared = 0;
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int ra = run_cli(a[i].args);
    const int rb = run_cli(b[i].args);
    if (ra != 0 || rb != 0) {
      problems.push_back(a[i].name + " exited non-zero");
      continue;
    }
    for (const auto& f : a[i].csvs) {
      const fs::path pa = root / "a" / a[i].name / f;
      const fs::path pb = root / "b" / b[i].name / f;
      const std::string x = slurp(pa);
      if (x.empty() || x != slurp(pb)) problems.push_back(a[i].name + "/" + f + " differs or is empty");
      ++compared;
    }
  }
  fs::remove_all(root);
  std::string detail = std::to_string(compared) + " CSV files byte-identical across reruns of 7 commands";
  if (!problems.empty()) {
    detail = "problems:";
    for (const auto& p : problems) detail += " [" + p + "]";
  }
  return {problems.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<std::string, std::function<Verdict()>>> criteria = {
      {1, {"autodiff soundness", c1_autodiff}},
      {2, {"distance oracle convexity and centroid bound", c2_oracle_properties}},
      {3, {"descent on the oracle moves toward the hull", c3_hull_direction}},
      {4, {"in-hull relative error below out-of-hull", c4_geometry}},
      {5, {"interpolation/extrapolation probe", c5_probe}},
      {6, {"distance network fidelity", c6_distance_fidelity}},
      {7, {"generalization study drop", c7_generalization}},
      {8, {"update mechanics", c8_mechanics}},
      {9, {"determinism", c9_determinism}},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty()) {
    for (const auto& [k, v] : criteria) selected.push_back(k);
  }
  int failed = 0;
  for (int k : selected) {
    const auto it = criteria.find(k);
    if (it == criteria.end()) {
      std::cerr << "unknown criterion " << k << '\n';
      return 2;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = it->second.second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char line[4096];
    std::snprintf(line, sizeof line, "%s criterion %d (%s): %s [%.1fs]\n", v.pass ? "PASS" : "FAIL",
                  k, it->second.first.c_str(), v.detail.c_str(), secs);
    std::fputs(line, stdout);
    std::fflush(stdout);
    std::ofstream(DOGE_REPORT_PATH, std::ios::app) << line;
    failed += v.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}

// Command-line entry point: dataset generation, training, evaluation, error
// grids, probes, sweeps and the data-removal study.

#include "run_config.hpp"

#include "doge/agents.hpp"
#include "doge/dataset.hpp"
#include "doge/experiments.hpp"
#include "doge/kernels.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#ifndef DOGE_VERSION
#define DOGE_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace doge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

/// Raised for a sweep or study that finished but had failed runs.
class PartialFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Context {
  std::string command;
  json config;
  cli::RunConfig rc;
  fs::path out;
  std::vector<std::string> outputs;
  json metrics = json::object();

  fs::path file(const std::string& name) {
    outputs.push_back(name);
    return out / name;
  }
};

void write_manifest(const Context& ctx, const std::string& started,
                    std::chrono::steady_clock::time_point t0, const std::string& status,
                    const std::string& error) {
  auto outputs = ctx.outputs;
  std::sort(outputs.begin(), outputs.end());
  outputs.erase(std::unique(outputs.begin(), outputs.end()), outputs.end());
  json m{{"command", ctx.command},
         {"status", status},
         {"seed", ctx.rc.seed},
         {"config", ctx.config},
         {"version", DOGE_VERSION},
         {"started_at", started},
         {"finished_at", utc_now()},
         {"wall_seconds",
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
         {"outputs", outputs},
         {"metrics", ctx.metrics}};
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(cli::config_hash(ctx.config)));
  m["config_hash"] = hash;
  if (!error.empty()) m["error"] = error;
  std::ofstream(ctx.out / "manifest.json") << m.dump(2) << '\n';
}

data::OfflineDataset require_dataset(const cli::RunConfig& rc) {
  if (rc.dataset_path.empty()) {
    throw cli::ConfigError("no dataset given (--data or dataset.path)");
  }
  if (!fs::exists(rc.dataset_path)) {
    throw std::runtime_error("dataset not found: " + rc.dataset_path.string());
  }
  return data::load_dataset(rc.dataset_path);
}

std::pair<agents::AgentState, agents::AgentConfig> require_checkpoint(const cli::RunConfig& rc) {
  if (rc.checkpoint.empty()) {
    throw cli::ConfigError("no checkpoint given (--checkpoint or checkpoint)");
  }
  if (!fs::exists(rc.checkpoint / "agent.json")) {
    throw std::runtime_error("checkpoint not found: " + rc.checkpoint.string());
  }
  return agents::load_checkpoint(rc.checkpoint);
}

std::string env_id_for(const cli::RunConfig& rc) {
  return rc.env_kind == "maze" ? "pointmaze2d" : "randomwalk1d";
}

void cmd_gen_data(Context& ctx) {
  const auto& rc = ctx.rc;
  Rng rng = derive_rng(rc.seed, 0);
  data::OfflineDataset ds;
  if (rc.env_kind == "maze") {
    ds = data::generate_maze(envs::PointMaze2d(rc.maze), rc.maze_data, rng);
  } else {
    ds = data::generate_randomwalk(envs::RandomWalk1d(rc.randomwalk), rc.geometry, rng);
  }
  ctx.metrics["generated"] = ds.size();
  if (!rc.remove.empty()) {
    auto removed = data::remove_regions(ds, rc.remove);
    ctx.metrics["fraction_removed"] = removed.fraction_removed;
    ds = std::move(removed.dataset);
  }
  ctx.metrics["size"] = ds.size();
  data::save_dataset(ds, ctx.file("dataset.csv"));
  ctx.outputs.push_back("dataset.json");
}

void cmd_train(Context& ctx) {
  const auto& rc = ctx.rc;
  const auto ds = require_dataset(rc);
  const auto env = cli::make_env(rc, ds.env_id());
  const int episodes = cli::eval_episodes_for(rc, ds.env_id());
  Rng rng = derive_rng(rc.seed, 1);
  Rng eval_rng = derive_rng(rc.seed, 3);
  const agents::Evaluator evaluator = [&](const agents::AgentState& st) {
    return experiments::eval_policy(*env, st, episodes, eval_rng).mean_return;
  };
  try {
    const auto res = agents::train(ds, rc.agent, rng, evaluator);
    agents::write_log_csv(res.log, ctx.file("train_log.csv"));
    agents::save_checkpoint(res.agent, rc.agent, ctx.out / "checkpoints");
    ctx.outputs.push_back("checkpoints/");
    ctx.metrics["steps"] = res.agent.step;
    ctx.metrics["actor_updates"] = res.agent.actor_updates;
    ctx.metrics["lambda"] = res.agent.lambda;
  } catch (const agents::TrainingFailed& e) {
    agents::write_log_csv(e.log(), ctx.file("train_log.csv"));
    throw;
  }
}

void cmd_eval(Context& ctx) {
  const auto& rc = ctx.rc;
  const auto [agent, cfg] = require_checkpoint(rc);
  const std::string env_id =
      rc.dataset_path.empty() ? env_id_for(rc) : require_dataset(rc).env_id();
  const auto env = cli::make_env(rc, env_id);
  if (env->state_dim() != agent.state_dim || env->action_dim() != agent.action_dim) {
    throw std::runtime_error("checkpoint does not match environment " + env_id);
  }
  Rng rng = derive_rng(rc.seed, 2);
  const auto r = experiments::eval_policy(*env, agent, cli::eval_episodes_for(rc, env_id), rng);
  std::ofstream out(ctx.file("eval.csv"), std::ios::binary);
  out << "env,episodes,mean_return,std_return,success_rate\n"
      << env_id << ',' << r.episodes << ',' << data::format_double(r.mean_return) << ','
      << data::format_double(r.std_return) << ',' << data::format_double(r.success_rate) << '\n';
  ctx.metrics["mean_return"] = r.mean_return;
  ctx.metrics["success_rate"] = r.success_rate;
}

void cmd_grid(Context& ctx) {
  const auto& rc = ctx.rc;
  const auto ds = require_dataset(rc);
  if (ds.env_id() != "randomwalk1d") {
    throw cli::ConfigError("grid needs a random-walk dataset");
  }
  const auto [agent, cfg] = require_checkpoint(rc);
  const envs::RandomWalk1d env(rc.randomwalk);
  const auto grid = experiments::error_grid(env, agent, ds, rc.grid_n_s, rc.grid_n_a);
  experiments::write_grid_csv(grid, ctx.file("grid.csv"));
  experiments::write_grid_matrix_csv(grid, ctx.file("grid_matrix.csv"));
  ctx.metrics["mean_rel_in"] = grid.mean_rel_in;
  ctx.metrics["mean_rel_out"] = grid.mean_rel_out;
  ctx.metrics["cells_in"] = grid.n_in;
  ctx.metrics["cells_out"] = grid.n_out;
}

void cmd_probe(Context& ctx) {
  const auto& rc = ctx.rc;
  const auto ds = require_dataset(rc);
  const auto [agent, cfg] = require_checkpoint(rc);
  Rng rng = derive_rng(rc.seed, 4);
  const auto recs = experiments::interp_extrap_probe(ds, agent, rc.probe, rng);
  const auto bins = experiments::binned_max(recs, rc.probe_bins, rc.probe_min_count);
  experiments::write_probe_csv(recs, ctx.file("probe.csv"));
  experiments::write_bins_csv(bins, ctx.file("probe_bins.csv"));
  std::vector<double> d;
  std::vector<double> dq;
  double max_interp_d = 0.0;
  for (const auto& r : recs) {
    d.push_back(r.d);
    dq.push_back(r.dq);
    if (r.kind == experiments::ProbeKind::interpolated) max_interp_d = std::max(max_interp_d, r.d);
  }
  ctx.metrics["spearman"] = experiments::spearman(d, dq);
  ctx.metrics["max_pairwise_distance"] = experiments::max_pairwise_distance(ds);
  ctx.metrics["max_interpolated_d"] = max_interp_d;
  ctx.metrics["bin_inversions"] = experiments::count_inversions(bins);
}

void cmd_ablate(Context& ctx) {
  const auto& rc = ctx.rc;
  const auto ds = require_dataset(rc);
  const auto env = cli::make_env(rc, ds.env_id());
  const auto rep = experiments::ablation_sweep(*env, ds, rc.agent, rc.ablate_param,
                                               rc.ablate_values, rc.ablate_seeds, rc.seed,
                                               cli::eval_episodes_for(rc, ds.env_id()));
  experiments::write_ablation_runs_csv(rep, ctx.file("ablation_runs.csv"));
  experiments::write_ablation_summary_csv(rep, ctx.file("ablation_summary.csv"));
  long failed = 0;
  for (const auto& r : rep.rows) failed += r.failed;
  ctx.metrics["failed_runs"] = failed;
  if (!rep.all_completed()) {
    throw PartialFailure(std::to_string(failed) + " sweep run(s) failed");
  }
}

void cmd_study(Context& ctx) {
  const auto& rc = ctx.rc;
  const envs::PointMaze2d env(rc.maze);
  experiments::StudyConfig sc;
  sc.base = rc.agent;
  sc.algorithms = rc.study_algorithms;
  sc.removal = rc.remove;
  sc.data = rc.maze_data;
  sc.seeds = rc.study_seeds;
  sc.eval_episodes = cli::eval_episodes_for(rc, env.id());
  sc.seed = rc.seed;

  Rng data_rng = derive_rng(rc.seed, 0);
  const auto full = data::generate_maze(env, sc.data, data_rng);
  const auto removed = data::remove_regions(full, sc.removal);
  data::save_dataset(full, ctx.file("dataset_full.csv"));
  data::save_dataset(removed.dataset, ctx.file("dataset_removed.csv"));
  ctx.outputs.push_back("dataset_full.json");
  ctx.outputs.push_back("dataset_removed.json");

  const auto rep = experiments::generalization_study(env, full, removed.dataset,
                                                     removed.fraction_removed, sc);
  experiments::write_study_runs_csv(rep, ctx.file("study_runs.csv"));
  experiments::write_study_summary_csv(rep, ctx.file("study_summary.csv"));
  ctx.metrics["removed_fraction"] = rep.removed_fraction;
  int failed = 0;
  for (const auto& row : rep.rows) {
    ctx.metrics["drop_percent_" + agents::to_string(row.algorithm)] = row.drop_percent;
    failed += row.failed;
  }
  ctx.metrics["failed_runs"] = failed;
  if (failed > 0) {
    throw PartialFailure(std::to_string(failed) + " study run(s) diverged (scored 0)");
  }
}

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return text;
  }
}

bool non_empty_dir(const fs::path& p) {
  return fs::is_directory(p) && fs::directory_iterator(p) != fs::directory_iterator();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline RL laboratory: distance-constrained actor-critic and geometry probes"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<long long> seed;
  std::string out;
  bool force = false;
  std::optional<int> jobs;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "TOML or JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Base random seed");
  app.add_option("--out", out, "Output directory");
  app.add_flag("--force", force, "Write into a non-empty output directory");
  app.add_option("--jobs", jobs, "Worker threads for parallel sections (0: runtime default)");
  app.add_option("--set", sets, "Override any config key: dotted.key=value (repeatable)");

  // Per-command shortcuts; each maps onto one config key.
  std::vector<std::pair<std::string, std::string>> shortcut_values;
  auto shortcut = [&](CLI::App* sub, const std::string& flag, const std::string& key,
                      const std::string& help) {
    sub->add_option_function<std::string>(
        flag, [&, key](const std::string& v) { shortcut_values.emplace_back(key, v); }, help);
  };
  std::vector<std::string> removes;
  auto add_remove = [&](CLI::App* sub) {
    sub->add_option("--remove", removes,
                    "State-space box to drop, \"x0,y0,x1,y1\" or \"s0,s1\" (repeatable)");
  };

  auto* gen = app.add_subcommand("gen-data", "Generate an offline dataset");
  shortcut(gen, "--env", "env.kind", "randomwalk or maze");
  shortcut(gen, "--geometry", "dataset.geometry", "Random-walk geometry preset");
  shortcut(gen, "--episodes", "dataset.maze.n_episodes", "Maze episodes");
  add_remove(gen);

  auto* train = app.add_subcommand("train", "Train an agent on a dataset");
  shortcut(train, "--data", "dataset.path", "Dataset CSV");
  shortcut(train, "--algo", "agent.algorithm", "doge, td3bc or td3");
  shortcut(train, "--steps", "agent.total_steps", "Training steps");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  shortcut(eval, "--checkpoint", "checkpoint", "Checkpoint directory");
  shortcut(eval, "--data", "dataset.path", "Dataset CSV (selects the environment)");
  shortcut(eval, "--episodes", "eval.episodes", "Evaluation episodes");

  auto* grid = app.add_subcommand("grid", "Relative Q-error grid on the random walk");
  shortcut(grid, "--checkpoint", "checkpoint", "Checkpoint directory");
  shortcut(grid, "--data", "dataset.path", "Training dataset CSV");
  shortcut(grid, "--n-s", "grid.n_s", "State cells");
  shortcut(grid, "--n-a", "grid.n_a", "Action cells");

  auto* probe = app.add_subcommand("probe", "Interpolation / extrapolation probe");
  shortcut(probe, "--checkpoint", "checkpoint", "Checkpoint directory");
  shortcut(probe, "--data", "dataset.path", "Training dataset CSV");
  shortcut(probe, "--samples", "probe.n_samples", "Probe points");

  auto* ablate = app.add_subcommand("ablate", "Hyperparameter sweep");
  shortcut(ablate, "--data", "dataset.path", "Dataset CSV");
  shortcut(ablate, "--param", "ablate.param", "alpha, G or N");
  std::string ablate_values;
  ablate->add_option("--values", ablate_values, "Comma-separated values");
  shortcut(ablate, "--seeds", "ablate.seeds", "Seeds per value");
  shortcut(ablate, "--steps", "agent.total_steps", "Training steps per run");

  auto* study = app.add_subcommand("study", "Data-removal generalization study on the maze");
  shortcut(study, "--seeds", "study.seeds", "Seeds per algorithm and variant");
  shortcut(study, "--steps", "agent.total_steps", "Training steps per run");
  add_remove(study);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  Context ctx;
  ctx.command = app.get_subcommands().front()->get_name();
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();

  try {
    json cfg = cli::default_config();
    if (ctx.command == "study") {
      cli::set_config_value(cfg, "env.kind", "maze");
    }
    if (!config_path.empty()) cfg = cli::merge_config(cfg, cli::load_config_file(config_path));
    for (const auto& [key, value] : shortcut_values) {
      cli::set_config_value(cfg, key, parse_value(value));
    }
    if (!ablate_values.empty()) {
      json vals = json::array();
      std::stringstream ss(ablate_values);
      std::string item;
      while (std::getline(ss, item, ',')) vals.push_back(item);
      cli::set_config_value(cfg, "ablate.values", vals);
    }
    if (!removes.empty()) {
      json boxes = json::array();
      for (const auto& r : removes) boxes.push_back(cli::box_to_json(cli::parse_box(r)));
      cli::set_config_value(cfg, "dataset.remove", boxes);
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw cli::ConfigError("--set expects key=value, got '" + s + "'");
      cli::set_config_value(cfg, s.substr(0, eq), parse_value(s.substr(eq + 1)));
    }
    if (seed) cli::set_config_value(cfg, "seed", *seed);
    if (!out.empty()) cli::set_config_value(cfg, "out", out);
    if (jobs) cli::set_config_value(cfg, "jobs", *jobs);
    ctx.config = cfg;
    ctx.rc = cli::resolve(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  ctx.out = ctx.rc.out;
  if (non_empty_dir(ctx.out) && !force) {
    std::cerr << "error: output directory " << ctx.out << " is not empty (use --force)\n";
    return kExitUsage;
  }
  try {
    fs::create_directories(ctx.out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  kernels::set_num_threads(ctx.rc.jobs);

  int code = kExitOk;
  std::string error;
  try {
    if (ctx.command == "gen-data") cmd_gen_data(ctx);
    else if (ctx.command == "train") cmd_train(ctx);
    else if (ctx.command == "eval") cmd_eval(ctx);
    else if (ctx.command == "grid") cmd_grid(ctx);
    else if (ctx.command == "probe") cmd_probe(ctx);
    else if (ctx.command == "ablate") cmd_ablate(ctx);
    else if (ctx.command == "study") cmd_study(ctx);
  } catch (const cli::ConfigError& e) {
    error = e.what();
    code = kExitUsage;
  } catch (const std::exception& e) {
    error = e.what();
    code = kExitRuntime;
  }
  write_manifest(ctx, started, t0, code == kExitOk ? "ok" : "failed", error);
  if (code != kExitOk) {
    std::cerr << "error: " << error << '\n';
  }
  return code;
}

#pragma once

// Layered run configuration: built-in defaults, then a TOML or JSON file,
// then command-line overrides. Every key of the file must exist in the
// defaults tree.

#include "doge/agents.hpp"
#include "doge/dataset.hpp"
#include "doge/envs.hpp"
#include "doge/experiments.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace doge::cli {

/// Unknown keys, wrong types and malformed files. Maps to the usage exit code.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

nlohmann::json default_config();

/// Parses TOML, or JSON when the text starts with '{'.
nlohmann::json parse_config_text(const std::string& text);
nlohmann::json load_config_file(const std::filesystem::path& path);

/// Recursively overlays `patch` on `base`. Keys missing from `base` raise
/// ConfigError naming the dotted path; a value's type must match the default
/// (integers are accepted where reals are expected; a null default accepts
/// a number). Arrays are replaced wholesale.
nlohmann::json merge_config(const nlohmann::json& base, const nlohmann::json& patch);

/// Sets a dotted key, e.g. "agent.total_steps", checking it exists.
void set_config_value(nlohmann::json& cfg, const std::string& dotted, const nlohmann::json& value);

/// Typed view of a resolved configuration.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out;
  int jobs = 0;

  std::string env_kind;  // "randomwalk" or "maze"
  envs::RandomWalk1d::Config randomwalk;
  envs::PointMaze2d::Layout maze;

  std::filesystem::path dataset_path;
  data::GeometrySpec geometry;
  data::MazeDataConfig maze_data;
  std::vector<envs::Box> remove;

  agents::AgentConfig agent;
  std::filesystem::path checkpoint;
  int eval_episodes = 0;

  int grid_n_s = 100;
  int grid_n_a = 50;

  experiments::ProbeConfig probe;
  int probe_bins = 20;
  long probe_min_count = 5;

  experiments::AblationParam ablate_param = experiments::AblationParam::g_quantile;
  std::vector<std::string> ablate_values;
  int ablate_seeds = 3;

  std::vector<agents::Algorithm> study_algorithms;
  int study_seeds = 5;
};

RunConfig resolve(const nlohmann::json& cfg);

/// "x0,y0,x1,y1" (or "s0,s1" in 1D): the lower corner followed by the upper.
envs::Box parse_box(const std::string& text);
nlohmann::json box_to_json(const envs::Box& b);

/// Environment matching an env id ("randomwalk1d", "pointmaze2d").
std::unique_ptr<envs::Environment> make_env(const RunConfig& rc, const std::string& env_id);

/// Evaluation episodes: the configured count, or 10 on the random walk and
/// 100 on the maze when left at 0.
int eval_episodes_for(const RunConfig& rc, const std::string& env_id);

/// 64-bit FNV-1a of the compact JSON dump.
std::uint64_t config_hash(const nlohmann::json& cfg);

}  // namespace doge::cli

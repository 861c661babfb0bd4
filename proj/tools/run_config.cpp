#include "run_config.hpp"

#include <toml.hpp>

#include <fstream>
#include <sstream>

namespace doge::cli {

using nlohmann::json;

namespace {

json toml_to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    json j = json::object();
    for (const auto& [k, v] : *t) {
      j[std::string(k.str())] = toml_to_json(v);
    }
    return j;
  }
  if (const auto* a = node.as_array()) {
    json j = json::array();
    for (const auto& v : *a) {
      j.push_back(toml_to_json(v));
    }
    return j;
  }
  if (const auto* v = node.as_string()) return v->get();
  if (const auto* v = node.as_integer()) return v->get();
  if (const auto* v = node.as_floating_point()) return v->get();
  if (const auto* v = node.as_boolean()) return v->get();
  throw ConfigError("config: dates and times are not supported");
}

bool compatible(const json& def, const json& val) {
  if (def.is_null()) return val.is_null() || val.is_number();
  if (def.is_number_float()) return val.is_number();
  if (def.is_number_integer()) return val.is_number_integer();
  if (def.is_boolean()) return val.is_boolean();
  if (def.is_string()) return val.is_string();
  if (def.is_array()) return val.is_array();
  if (def.is_object()) return val.is_object();
  return false;
}

void merge_into(json& base, const json& patch, const std::string& where) {
  if (!patch.is_object()) {
    throw ConfigError("config: expected a table at '" + (where.empty() ? "<root>" : where) + "'");
  }
  for (const auto& [k, v] : patch.items()) {
    const std::string path = where.empty() ? k : where + "." + k;
    if (!base.contains(k)) {
      throw ConfigError("config: unknown key '" + path + "'");
    }
    json& slot = base[k];
    if (!compatible(slot, v)) {
      throw ConfigError("config: wrong type for '" + path + "' (expected " +
                        std::string(slot.type_name()) + ")");
    }
    if (slot.is_object()) {
      merge_into(slot, v, path);
    } else if (slot.is_number_float()) {
      slot = v.get<double>();
    } else {
      slot = v;
    }
  }
}

std::vector<double> numbers(const json& j, const std::string& what) {
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError("config: " + what + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

envs::Box box_from_numbers(const std::vector<double>& v, const std::string& what) {
  if (v.empty() || v.size() % 2 != 0) {
    throw ConfigError(what + ": expected the lower corner followed by the upper corner");
  }
  const auto d = static_cast<Eigen::Index>(v.size() / 2);
  envs::Box b{Vec(d), Vec(d)};
  for (Eigen::Index i = 0; i < d; ++i) {
    b.lo(i) = v[static_cast<std::size_t>(i)];
    b.hi(i) = v[static_cast<std::size_t>(i + d)];
    if (!(b.lo(i) <= b.hi(i))) {
      throw ConfigError(what + ": lower corner exceeds upper corner");
    }
  }
  return b;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

json default_config() {
  const agents::AgentConfig agent;
  const data::MazeDataConfig maze;
  const experiments::ProbeConfig probe;
  const envs::RandomWalk1d::Config rw;
  return json{
      {"seed", 0},
      {"out", "out"},
      {"jobs", 0},
      {"env",
       {{"kind", "randomwalk"},
        {"randomwalk",
         {{"horizon", rw.horizon}, {"gamma", rw.gamma}, {"fixed_start", nullptr}}},
        {"maze",
         {{"layout", ""}, {"position_noise", 0.0}, {"subtract_one", false}}}}},
      {"dataset",
       {{"path", ""},
        {"geometry", "full"},
        {"geometry_file", ""},
        {"remove", json::array()},
        {"maze",
         {{"n_episodes", maze.n_episodes},
          {"action_noise", maze.action_noise},
          {"goal_fraction", maze.goal_fraction},
          {"waypoint_tolerance", maze.waypoint_tolerance}}}}},
      {"agent", agents::to_json(agent)},
      {"checkpoint", ""},
      {"eval", {{"episodes", 0}}},
      {"grid", {{"n_s", 100}, {"n_a", 50}}},
      {"probe",
       {{"n_samples", probe.n_samples},
        {"k", probe.k},
        {"extrapolated_fraction", probe.extrapolated_fraction},
        {"rescale", probe.rescale},
        {"scale_lo", probe.scale_lo},
        {"scale_hi", probe.scale_hi},
        {"bins", 20},
        {"min_count", 5}}},
      {"ablate",
       {{"param", "G"}, {"values", {"30", "50", "70", "90", "100"}}, {"seeds", 3}}},
      {"study", {{"algorithms", {"doge", "td3bc"}}, {"seeds", 5}}},
  };
}

json parse_config_text(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  try {
    return toml_to_json(toml::parse(text));
  } catch (const toml::parse_error& e) {
    std::ostringstream ss;
    ss << "config: " << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(ss.str());
  }
}

json load_config_file(const std::filesystem::path& path) {
  return parse_config_text(read_text(path));
}

json merge_config(const json& base, const json& patch) {
  json out = base;
  merge_into(out, patch, "");
  return out;
}

void set_config_value(json& cfg, const std::string& dotted, const json& value) {
  json patch = value;
  std::string rest = dotted;
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while ((pos = rest.find('.')) != std::string::npos) {
    parts.push_back(rest.substr(0, pos));
    rest.erase(0, pos + 1);
  }
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    patch = json{{*it, patch}};
  }
  merge_into(cfg, patch, "");
}

envs::Box parse_box(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos) {
      throw ConfigError("bad box '" + text + "'");
    }
    v.push_back(x);
  }
  return box_from_numbers(v, "box '" + text + "'");
}

json box_to_json(const envs::Box& b) {
  json j = json::array();
  for (Eigen::Index i = 0; i < b.lo.size(); ++i) j.push_back(b.lo(i));
  for (Eigen::Index i = 0; i < b.hi.size(); ++i) j.push_back(b.hi(i));
  return j;
}

RunConfig resolve(const json& cfg) {
  RunConfig rc;
  try {
    const auto seed = cfg.at("seed").get<long long>();
    if (seed < 0) throw ConfigError("config: seed must be non-negative");
    rc.seed = static_cast<std::uint64_t>(seed);
    rc.out = cfg.at("out").get<std::string>();
    rc.jobs = cfg.at("jobs").get<int>();
    if (rc.jobs < 0) throw ConfigError("config: jobs must be non-negative");

    const auto& env = cfg.at("env");
    rc.env_kind = env.at("kind").get<std::string>();
    if (rc.env_kind != "randomwalk" && rc.env_kind != "maze") {
      throw ConfigError("config: env.kind must be 'randomwalk' or 'maze'");
    }
    const auto& rw = env.at("randomwalk");
    rc.randomwalk.horizon = rw.at("horizon").get<int>();
    rc.randomwalk.gamma = rw.at("gamma").get<double>();
    if (!rw.at("fixed_start").is_null()) rc.randomwalk.fixed_start = rw.at("fixed_start").get<double>();
    const auto& mz = env.at("maze");
    const auto layout_path = mz.at("layout").get<std::string>();
    rc.maze = layout_path.empty() ? envs::PointMaze2d::u_maze() : envs::load_maze_layout(layout_path);
    rc.maze.position_noise = mz.at("position_noise").get<double>();
    rc.maze.subtract_one = mz.at("subtract_one").get<bool>();

    const auto& ds = cfg.at("dataset");
    rc.dataset_path = ds.at("path").get<std::string>();
    const auto geo_file = ds.at("geometry_file").get<std::string>();
    rc.geometry = geo_file.empty() ? data::geometry_preset(ds.at("geometry").get<std::string>())
                                   : data::geometry_from_json_text(read_text(geo_file));
    for (const auto& b : ds.at("remove")) {
      if (!b.is_array()) throw ConfigError("config: dataset.remove holds number arrays");
      rc.remove.push_back(box_from_numbers(numbers(b, "dataset.remove"), "dataset.remove"));
    }
    const auto& md = ds.at("maze");
    rc.maze_data.n_episodes = md.at("n_episodes").get<int>();
    rc.maze_data.action_noise = md.at("action_noise").get<double>();
    rc.maze_data.goal_fraction = md.at("goal_fraction").get<double>();
    rc.maze_data.waypoint_tolerance = md.at("waypoint_tolerance").get<double>();

    rc.agent = agents::agent_config_from_json(cfg.at("agent"));
    rc.checkpoint = cfg.at("checkpoint").get<std::string>();
    rc.eval_episodes = cfg.at("eval").at("episodes").get<int>();
    if (rc.eval_episodes < 0) throw ConfigError("config: eval.episodes must be non-negative");

    rc.grid_n_s = cfg.at("grid").at("n_s").get<int>();
    rc.grid_n_a = cfg.at("grid").at("n_a").get<int>();
    if (rc.grid_n_s < 1 || rc.grid_n_a < 1) throw ConfigError("config: grid size must be positive");

    const auto& pr = cfg.at("probe");
    rc.probe.n_samples = pr.at("n_samples").get<int>();
    rc.probe.k = pr.at("k").get<int>();
    rc.probe.extrapolated_fraction = pr.at("extrapolated_fraction").get<double>();
    rc.probe.rescale = pr.at("rescale").get<bool>();
    rc.probe.scale_lo = pr.at("scale_lo").get<double>();
    rc.probe.scale_hi = pr.at("scale_hi").get<double>();
    rc.probe_bins = pr.at("bins").get<int>();
    rc.probe_min_count = pr.at("min_count").get<long>();

    const auto& ab = cfg.at("ablate");
    rc.ablate_param = experiments::parse_ablation_param(ab.at("param").get<std::string>());
    for (const auto& v : ab.at("values")) {
      rc.ablate_values.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    }
    rc.ablate_seeds = ab.at("seeds").get<int>();

    for (const auto& a : cfg.at("study").at("algorithms")) {
      rc.study_algorithms.push_back(agents::parse_algorithm(a.get<std::string>()));
    }
    rc.study_seeds = cfg.at("study").at("seeds").get<int>();
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return rc;
}

std::unique_ptr<envs::Environment> make_env(const RunConfig& rc, const std::string& env_id) {
  if (env_id == "randomwalk1d") return std::make_unique<envs::RandomWalk1d>(rc.randomwalk);
  if (env_id == "pointmaze2d") return std::make_unique<envs::PointMaze2d>(rc.maze);
  throw InvalidArgument("unknown environment id '" + env_id + "'");
}

int eval_episodes_for(const RunConfig& rc, const std::string& env_id) {
  if (rc.eval_episodes > 0) return rc.eval_episodes;
  return env_id == "pointmaze2d" ? 100 : 10;
}

std::uint64_t config_hash(const json& cfg) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : cfg.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace doge::cli

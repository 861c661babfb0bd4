#include "doge/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace doge::data {

using nlohmann::json;

// ------------------------------------------------------------ NormStats

Vec NormStats::normalize(const Vec& x) const {
  return (x - mean).cwiseQuotient(std);
}

Vec NormStats::denormalize(const Vec& x) const {
  return x.cwiseProduct(std) + mean;
}

Matrix NormStats::normalize_columns(const Matrix& x) const {
  Matrix out = x;
  out.colwise() -= mean;
  out.array().colwise() /= std.array();
  return out;
}

// ------------------------------------------------------------ OfflineDataset

OfflineDataset::OfflineDataset(std::string env_id, std::string geometry_id, double max_action,
                               const std::vector<Transition>& transitions)
    : env_id_(std::move(env_id)), geometry_id_(std::move(geometry_id)), max_action_(max_action) {
  if (transitions.empty()) {
    throw EmptyDataset("dataset has no transitions");
  }
  const auto n = static_cast<Eigen::Index>(transitions.size());
  const Eigen::Index ds = transitions.front().s.size();
  const Eigen::Index da = transitions.front().a.size();
  if (ds == 0 || da == 0) {
    throw InvalidArgument("dataset: zero-dimensional state or action");
  }
  states_.resize(ds, n);
  actions_.resize(da, n);
  rewards_.resize(n);
  next_states_.resize(ds, n);
  dones_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& t = transitions[static_cast<std::size_t>(i)];
    if (t.s.size() != ds || t.s_next.size() != ds || t.a.size() != da) {
      throw InvalidArgument("dataset: inconsistent transition dimensions");
    }
    states_.col(i) = t.s;
    actions_.col(i) = t.a;
    rewards_(i) = t.r;
    next_states_.col(i) = t.s_next;
    dones_(i) = t.done ? 1.0 : 0.0;
  }
  if (!states_.allFinite() || !actions_.allFinite() || !rewards_.allFinite() ||
      !next_states_.allFinite()) {
    throw InvalidArgument("dataset: non-finite entries");
  }
  state_actions_.resize(ds + da, n);
  state_actions_.topRows(ds) = states_;
  state_actions_.bottomRows(da) = actions_;
}

Transition OfflineDataset::transition(std::size_t i) const {
  const auto j = static_cast<Eigen::Index>(i);
  return Transition{states_.col(j), actions_.col(j), rewards_(j), next_states_.col(j),
                    dones_(j) != 0.0};
}

std::vector<Transition> OfflineDataset::transitions() const {
  std::vector<Transition> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    out.push_back(transition(i));
  }
  return out;
}

OfflineDataset OfflineDataset::with_norm_stats(std::optional<NormStats> stats) const {
  OfflineDataset copy = *this;
  copy.norm_stats_ = std::move(stats);
  return copy;
}

OfflineDataset OfflineDataset::with_geometry_id(std::string id) const {
  OfflineDataset copy = *this;
  copy.geometry_id_ = std::move(id);
  return copy;
}

bool operator==(const OfflineDataset& a, const OfflineDataset& b) {
  const bool stats_equal =
      a.norm_stats_.has_value() == b.norm_stats_.has_value() &&
      (!a.norm_stats_ ||
       (a.norm_stats_->mean == b.norm_stats_->mean && a.norm_stats_->std == b.norm_stats_->std));
  return a.env_id_ == b.env_id_ && a.geometry_id_ == b.geometry_id_ &&
         a.max_action_ == b.max_action_ && a.states_ == b.states_ && a.actions_ == b.actions_ &&
         a.rewards_ == b.rewards_ && a.next_states_ == b.next_states_ && a.dones_ == b.dones_ &&
         stats_equal;
}

// ------------------------------------------------------------ geometry

int GeometrySpec::total_count() const {
  int n = 0;
  for (const auto& r : regions) {
    n += r.count;
  }
  return n;
}

namespace {

Region rect(double s_lo, double s_hi, double a_lo, double a_hi, int count) {
  Region r;
  r.kind = Region::Kind::rect;
  r.s_lo = s_lo;
  r.s_hi = s_hi;
  r.a_lo = a_lo;
  r.a_hi = a_hi;
  r.count = count;
  return r;
}

Region cluster(double s, double a, double rs, double ra, int count) {
  Region r;
  r.kind = Region::Kind::cluster;
  r.s_center = s;
  r.a_center = a;
  r.s_radius = rs;
  r.a_radius = ra;
  r.count = count;
  return r;
}

void validate(const GeometrySpec& spec, const envs::RandomWalk1d& env) {
  if (spec.regions.empty()) {
    throw InvalidArgument("geometry '" + spec.id + "' has no regions");
  }
  const auto& c = env.config();
  const double am = c.max_action;
  constexpr double tol = 1e-12;
  for (const auto& r : spec.regions) {
    if (r.count <= 0) {
      throw InvalidArgument("geometry region counts must be positive");
    }
    switch (r.kind) {
      case Region::Kind::rect:
        if (r.s_lo > r.s_hi || r.a_lo > r.a_hi || r.s_lo < c.lo - tol || r.s_hi > c.hi + tol ||
            r.a_lo < -am - tol || r.a_hi > am + tol) {
          throw InvalidArgument("rect region outside the state-action box");
        }
        break;
      case Region::Kind::band:
        if (r.s_lo > r.s_hi || r.s_lo < c.lo - tol || r.s_hi > c.hi + tol ||
            r.half_width < 0.0) {
          throw InvalidArgument("band region outside the state range");
        }
        break;
      case Region::Kind::cluster:
        if (r.s_radius < 0.0 || r.a_radius < 0.0 || r.s_center - r.s_radius < c.lo - tol ||
            r.s_center + r.s_radius > c.hi + tol || r.a_center - r.a_radius < -am - tol ||
            r.a_center + r.a_radius > am + tol) {
          throw InvalidArgument("cluster region outside the state-action box");
        }
        break;
    }
  }
}

std::string kind_name(Region::Kind k) {
  switch (k) {
    case Region::Kind::rect:
      return "rect";
    case Region::Kind::band:
      return "band";
    case Region::Kind::cluster:
      return "cluster";
  }
  return "rect";
}

}  // namespace

GeometrySpec geometry_preset(const std::string& name) {
  GeometrySpec g;
  g.id = name;
  if (name == "full") {
    g.regions = {rect(-10, 10, -1, 1, 200)};
  } else if (name == "band") {
    Region b;
    b.kind = Region::Kind::band;
    b.s_lo = -10;
    b.s_hi = 10;
    b.intercept = 0.0;
    b.slope = 0.05;
    b.half_width = 0.2;
    b.count = 200;
    g.regions = {b};
  } else if (name == "clusters") {
    g.regions = {cluster(-5, -0.4, 3, 0.4, 100), cluster(5, 0.4, 3, 0.4, 100)};
  } else if (name == "block") {
    g.regions = {rect(-6, 6, -0.5, 0.5, 200)};
  } else if (name == "quadrant") {
    g.regions = {rect(0, 10, 0, 1, 200)};
  } else {
    throw InvalidArgument("unknown geometry preset '" + name + "'");
  }
  return g;
}

GeometrySpec geometry_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  GeometrySpec g;
  g.id = j.value("id", std::string("custom"));
  for (const auto& rj : j.at("regions")) {
    Region r;
    const std::string kind = rj.at("kind").get<std::string>();
    r.count = rj.at("count").get<int>();
    if (kind == "rect") {
      r.kind = Region::Kind::rect;
      r.s_lo = rj.at("s")[0];
      r.s_hi = rj.at("s")[1];
      r.a_lo = rj.at("a")[0];
      r.a_hi = rj.at("a")[1];
    } else if (kind == "band") {
      r.kind = Region::Kind::band;
      r.s_lo = rj.at("s")[0];
      r.s_hi = rj.at("s")[1];
      r.intercept = rj.value("intercept", 0.0);
      r.slope = rj.value("slope", 0.0);
      r.half_width = rj.at("half_width");
    } else if (kind == "cluster") {
      r.kind = Region::Kind::cluster;
      r.s_center = rj.at("center")[0];
      r.a_center = rj.at("center")[1];
      r.s_radius = rj.at("radius")[0];
      r.a_radius = rj.at("radius")[1];
    } else {
      throw InvalidArgument("unknown region kind '" + kind + "'");
    }
    g.regions.push_back(r);
  }
  return g;
}

std::string geometry_to_json_text(const GeometrySpec& spec) {
  json j;
  j["id"] = spec.id;
  j["regions"] = json::array();
  for (const auto& r : spec.regions) {
    json rj{{"kind", kind_name(r.kind)}, {"count", r.count}};
    switch (r.kind) {
      case Region::Kind::rect:
        rj["s"] = {r.s_lo, r.s_hi};
        rj["a"] = {r.a_lo, r.a_hi};
        break;
      case Region::Kind::band:
        rj["s"] = {r.s_lo, r.s_hi};
        rj["intercept"] = r.intercept;
        rj["slope"] = r.slope;
        rj["half_width"] = r.half_width;
        break;
      case Region::Kind::cluster:
        rj["center"] = {r.s_center, r.a_center};
        rj["radius"] = {r.s_radius, r.a_radius};
        break;
    }
    j["regions"].push_back(rj);
  }
  return j.dump(2);
}

OfflineDataset generate_randomwalk(const envs::RandomWalk1d& env, const GeometrySpec& spec,
                                   Rng& rng) {
  validate(spec, env);
  const double am = env.max_action();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Transition> out;
  out.reserve(static_cast<std::size_t>(spec.total_count()));
  for (const auto& r : spec.regions) {
    for (int k = 0; k < r.count; ++k) {
      double s = 0.0;
      double a = 0.0;
      switch (r.kind) {
        case Region::Kind::rect:
          s = r.s_lo + (r.s_hi - r.s_lo) * unit(rng);
          a = r.a_lo + (r.a_hi - r.a_lo) * unit(rng);
          break;
        case Region::Kind::band:
          s = r.s_lo + (r.s_hi - r.s_lo) * unit(rng);
          a = r.intercept + r.slope * s + r.half_width * (2.0 * unit(rng) - 1.0);
          a = std::clamp(a, -am, am);
          break;
        case Region::Kind::cluster: {
          // Rejection sampling from the bounding box of the ellipse.
          double u = 0.0;
          double v = 0.0;
          do {
            u = 2.0 * unit(rng) - 1.0;
            v = 2.0 * unit(rng) - 1.0;
          } while (u * u + v * v > 1.0);
          s = r.s_center + r.s_radius * u;
          a = r.a_center + r.a_radius * v;
          break;
        }
      }
      const Vec sv = Vec::Constant(1, s);
      const Vec av = Vec::Constant(1, a);
      const auto step = env.step(sv, av, nullptr);
      out.push_back(Transition{sv, av, step.reward, step.next, step.terminal});
    }
  }
  return OfflineDataset(env.id(), spec.id, am, out);
}

// ------------------------------------------------------------ maze data

namespace {

// Arc-length parameterization of the corridor centerline.
struct Centerline {
  std::vector<Vec> points;
  std::vector<double> cumulative;  // arc length at each point

  explicit Centerline(std::vector<Vec> pts) : points(std::move(pts)) {
    cumulative.push_back(0.0);
    for (std::size_t i = 1; i < points.size(); ++i) {
      cumulative.push_back(cumulative.back() + (points[i] - points[i - 1]).norm());
    }
  }
  double length() const { return cumulative.back(); }

  Vec at(double u) const {
    u = std::clamp(u, 0.0, length());
    for (std::size_t i = 1; i < points.size(); ++i) {
      if (u <= cumulative[i]) {
        const double seg = cumulative[i] - cumulative[i - 1];
        const double t = seg > 0.0 ? (u - cumulative[i - 1]) / seg : 0.0;
        return points[i - 1] + t * (points[i] - points[i - 1]);
      }
    }
    return points.back();
  }

  /// Corner points strictly between u0 and u1, in travel order, then at(u1).
  std::vector<Vec> route(double u0, double u1) const {
    std::vector<Vec> r;
    if (u1 >= u0) {
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (cumulative[i] > u0 && cumulative[i] < u1) {
          r.push_back(points[i]);
        }
      }
    } else {
      for (std::size_t i = points.size(); i-- > 0;) {
        if (cumulative[i] < u0 && cumulative[i] > u1) {
          r.push_back(points[i]);
        }
      }
    }
    r.push_back(at(u1));
    return r;
  }
};

}  // namespace

OfflineDataset generate_maze(const envs::PointMaze2d& env, const MazeDataConfig& cfg, Rng& rng) {
  if (cfg.n_episodes <= 0) {
    throw EmptyDataset("generate_maze: n_episodes must be positive");
  }
  const auto& layout = env.layout();
  if (layout.waypoints.size() < 2) {
    throw InvalidArgument("generate_maze: layout needs a waypoint centerline");
  }
  const Centerline line(layout.waypoints);
  const double am = env.max_action();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<Transition> out;
  for (int ep = 0; ep < cfg.n_episodes; ++ep) {
    const bool to_goal = unit(rng) < cfg.goal_fraction;
    Vec s;
    std::vector<Vec> route;
    if (to_goal) {
      s = env.reset(rng);
      route.assign(layout.waypoints.begin() + 1, layout.waypoints.end());
      route.push_back(layout.goal_center);
    } else {
      const double u0 = line.length() * unit(rng);
      const double u1 = line.length() * unit(rng);
      s = line.at(u0);
      route = line.route(u0, u1);
    }
    std::size_t target = 0;
    for (int t = 0; t < env.horizon() && target < route.size(); ++t) {
      const Vec to = route[target] - s;
      const double dist = to.norm();
      // Full speed toward the waypoint, slowing to land on it.
      Vec a = dist > 0.0 ? Vec(to / dist * std::min(am, dist / layout.dt)) : Vec::Zero(2);
      if (cfg.action_noise > 0.0) {
        for (Eigen::Index d = 0; d < a.size(); ++d) {
          a(d) += cfg.action_noise * noise(rng);
        }
      }
      a = env.clip_action(a);
      auto step = env.step(s, a, &rng);
      out.push_back(Transition{s, a, step.reward, step.next, step.terminal});
      s = step.next;
      if (step.terminal) {
        break;
      }
      while (target < route.size() && (route[target] - s).norm() < cfg.waypoint_tolerance) {
        ++target;
      }
    }
  }
  return OfflineDataset(env.id(), "maze", am, out);
}

// ------------------------------------------------------------ transforms

RemovalResult remove_regions(const OfflineDataset& ds, const std::vector<envs::Box>& boxes) {
  for (const auto& b : boxes) {
    if (b.lo.size() != ds.state_dim() || b.hi.size() != ds.state_dim()) {
      throw InvalidArgument("remove_regions: rectangle dimension differs from state dimension");
    }
  }
  std::vector<Transition> kept;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(i);
    const Vec s = ds.states().col(j);
    const Vec sn = ds.next_states().col(j);
    const bool hit = std::any_of(boxes.begin(), boxes.end(), [&](const envs::Box& b) {
      return b.contains(s) || b.contains(sn);
    });
    if (!hit) {
      kept.push_back(ds.transition(i));
    }
  }
  if (kept.empty()) {
    throw EmptyDataset("remove_regions: every transition was removed");
  }
  RemovalResult r{OfflineDataset(ds.env_id(), ds.geometry_id(), ds.max_action(), kept),
                  1.0 - static_cast<double>(kept.size()) / static_cast<double>(ds.size())};
  r.dataset = r.dataset.with_norm_stats(ds.norm_stats());
  return r;
}

std::pair<OfflineDataset, NormStats> normalize_states(const OfflineDataset& ds) {
  const double n = static_cast<double>(ds.size());
  NormStats st;
  st.mean = ds.states().rowwise().mean();
  Matrix centered = ds.states();
  centered.colwise() -= st.mean;
  st.std = (centered.array().square().rowwise().sum() / n).sqrt().max(1e-3).matrix();
  std::vector<Transition> ts = ds.transitions();
  for (auto& t : ts) {
    t.s = st.normalize(t.s);
    t.s_next = st.normalize(t.s_next);
  }
  OfflineDataset out(ds.env_id(), ds.geometry_id(), ds.max_action(), ts);
  return {out.with_norm_stats(st), st};
}

OfflineDataset denormalize_states(const OfflineDataset& ds) {
  if (!ds.norm_stats()) {
    return ds;
  }
  std::vector<Transition> ts = ds.transitions();
  for (auto& t : ts) {
    t.s = ds.norm_stats()->denormalize(t.s);
    t.s_next = ds.norm_stats()->denormalize(t.s_next);
  }
  return OfflineDataset(ds.env_id(), ds.geometry_id(), ds.max_action(), ts);
}

Batch gather(const OfflineDataset& ds, const std::vector<std::size_t>& indices) {
  const auto b = static_cast<Eigen::Index>(indices.size());
  Batch out;
  out.s.resize(ds.state_dim(), b);
  out.a.resize(ds.action_dim(), b);
  out.r.resize(1, b);
  out.s_next.resize(ds.state_dim(), b);
  out.done.resize(1, b);
  for (Eigen::Index k = 0; k < b; ++k) {
    const auto i = static_cast<Eigen::Index>(indices[static_cast<std::size_t>(k)]);
    out.s.col(k) = ds.states().col(i);
    out.a.col(k) = ds.actions().col(i);
    out.r(0, k) = ds.rewards()(i);
    out.s_next.col(k) = ds.next_states().col(i);
    out.done(0, k) = ds.dones()(i);
  }
  out.indices = indices;
  return out;
}

Batch sample_minibatch(const OfflineDataset& ds, Rng& rng, int batch) {
  if (batch <= 0) {
    throw InvalidArgument("sample_minibatch: batch must be positive");
  }
  std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 1);
  std::vector<std::size_t> idx(static_cast<std::size_t>(batch));
  for (auto& i : idx) {
    i = pick(rng);
  }
  return gather(ds, idx);
}

Projection project(const Vec& x, const OfflineDataset& ds) {
  if (!x.allFinite()) {
    throw InvalidArgument("project: non-finite query");
  }
  const auto hit = kernels::serial::nearest(ds.state_actions(), x);
  return Projection{ds.state_actions().col(hit.index), hit.distance,
                    static_cast<std::size_t>(hit.index)};
}

std::vector<Projection> project_batch(const Matrix& queries, const OfflineDataset& ds,
                                      kernels::Exec exec) {
  const auto hits = kernels::nearest_batch(ds.state_actions(), queries, exec);
  std::vector<Projection> out;
  out.reserve(hits.size());
  for (const auto& h : hits) {
    out.push_back(Projection{ds.state_actions().col(h.index), h.distance,
                             static_cast<std::size_t>(h.index)});
  }
  return out;
}

// ------------------------------------------------------------ files

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InvalidArgument("dataset csv: bad number '" + s + "'");
  }
  return v;
}

std::vector<std::string> column_names(int ds, int da) {
  std::vector<std::string> cols;
  for (int i = 0; i < ds; ++i) cols.push_back("s" + std::to_string(i));
  for (int i = 0; i < da; ++i) cols.push_back("a" + std::to_string(i));
  cols.push_back("r");
  for (int i = 0; i < ds; ++i) cols.push_back("sn" + std::to_string(i));
  cols.push_back("done");
  return cols;
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

void save_dataset(const OfflineDataset& ds, const std::filesystem::path& csv_path) {
  const auto cols = column_names(ds.state_dim(), ds.action_dim());
  {
    std::ofstream out(csv_path);
    if (!out) {
      throw std::runtime_error("cannot write " + csv_path.string());
    }
    for (std::size_t c = 0; c < cols.size(); ++c) {
      out << (c ? "," : "") << cols[c];
    }
    out << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto j = static_cast<Eigen::Index>(i);
      std::string line;
      auto put = [&line](double v) {
        if (!line.empty()) line += ',';
        line += format_double(v);
      };
      for (Eigen::Index d = 0; d < ds.state_dim(); ++d) put(ds.states()(d, j));
      for (Eigen::Index d = 0; d < ds.action_dim(); ++d) put(ds.actions()(d, j));
      put(ds.rewards()(j));
      for (Eigen::Index d = 0; d < ds.state_dim(); ++d) put(ds.next_states()(d, j));
      line += ds.dones()(j) != 0.0 ? ",1" : ",0";
      out << line << '\n';
    }
  }
  json side;
  side["env_id"] = ds.env_id();
  side["geometry_id"] = ds.geometry_id();
  side["max_action"] = ds.max_action();
  side["state_dim"] = ds.state_dim();
  side["action_dim"] = ds.action_dim();
  side["size"] = ds.size();
  side["columns"] = cols;
  if (ds.norm_stats()) {
    // Stored as exact text so the inverse mapping is bit-exact after reload.
    json m = json::array();
    json s = json::array();
    for (Eigen::Index i = 0; i < ds.norm_stats()->mean.size(); ++i) {
      m.push_back(format_double(ds.norm_stats()->mean(i)));
      s.push_back(format_double(ds.norm_stats()->std(i)));
    }
    side["norm_stats"] = {{"mean", m}, {"std", s}};
  } else {
    side["norm_stats"] = nullptr;
  }
  std::ofstream out(sidecar_path(csv_path));
  out << side.dump(2) << '\n';
}

OfflineDataset load_dataset(const std::filesystem::path& csv_path) {
  std::ifstream side_in(sidecar_path(csv_path));
  if (!side_in) {
    throw InvalidArgument("missing dataset sidecar " + sidecar_path(csv_path).string());
  }
  const json side = json::parse(side_in);
  const int ds = side.at("state_dim").get<int>();
  const int da = side.at("action_dim").get<int>();
  const auto cols = column_names(ds, da);
  if (side.at("columns").get<std::vector<std::string>>() != cols) {
    throw InvalidArgument("dataset sidecar: unexpected column order");
  }
  std::ifstream in(csv_path);
  if (!in) {
    throw InvalidArgument("cannot open dataset " + csv_path.string());
  }
  std::string line;
  std::getline(in, line);
  std::vector<Transition> ts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      vals.push_back(parse_double(cell));
    }
    if (vals.size() != cols.size()) {
      throw InvalidArgument("dataset csv: wrong column count");
    }
    Transition t;
    t.s = Eigen::Map<Vec>(vals.data(), ds);
    t.a = Eigen::Map<Vec>(vals.data() + ds, da);
    t.r = vals[static_cast<std::size_t>(ds + da)];
    t.s_next = Eigen::Map<Vec>(vals.data() + ds + da + 1, ds);
    t.done = vals.back() != 0.0;
    ts.push_back(std::move(t));
  }
  OfflineDataset out(side.at("env_id").get<std::string>(),
                     side.at("geometry_id").get<std::string>(),
                     side.at("max_action").get<double>(), ts);
  if (!side.at("norm_stats").is_null()) {
    NormStats st;
    const auto& m = side["norm_stats"]["mean"];
    const auto& s = side["norm_stats"]["std"];
    st.mean.resize(static_cast<Eigen::Index>(m.size()));
    st.std.resize(static_cast<Eigen::Index>(s.size()));
    for (std::size_t i = 0; i < m.size(); ++i) {
      st.mean(static_cast<Eigen::Index>(i)) = parse_double(m[i].get<std::string>());
      st.std(static_cast<Eigen::Index>(i)) = parse_double(s[i].get<std::string>());
    }
    out = out.with_norm_stats(st);
  }
  return out;
}

}  // namespace doge::data

#include "doge/experiments.hpp"

#include "doge/geometry.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

namespace doge::experiments {

namespace {

using data::format_double;

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  return out;
}

data::OfflineDataset raw_dataset(const data::OfflineDataset& ds) {
  return ds.norm_stats() ? data::denormalize_states(ds) : ds;
}

envs::Policy actor_policy(const agents::AgentState& agent) {
  return [&agent](const Vec& s) { return agents::act(agent, s); };
}

std::vector<double> centers(double lo, double hi, int n) {
  std::vector<double> c(static_cast<std::size_t>(n));
  const double w = (hi - lo) / n;
  for (int i = 0; i < n; ++i) {
    c[static_cast<std::size_t>(i)] = lo + (i + 0.5) * w;
  }
  return c;
}

/// Dirichlet(1, ..., 1) via normalized unit exponentials.
Vec dirichlet_ones(int k, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  Vec w(k);
  for (int i = 0; i < k; ++i) {
    w(i) = e(rng);
  }
  return w / w.sum();
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) {
      ++j;
    }
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      ranks[order[k]] = r;
    }
    i = j + 1;
  }
  return ranks;
}

}  // namespace

// ------------------------------------------------------------ error grid

ErrorGrid error_grid_from(const std::vector<double>& s_centers,
                          const std::vector<double>& a_centers,
                          const std::vector<double>& q_hat, const std::vector<double>& q_mc,
                          const data::OfflineDataset& ds) {
  const std::size_t ns = s_centers.size();
  const std::size_t na = a_centers.size();
  if (ns == 0 || na == 0 || q_hat.size() != ns * na || q_mc.size() != ns * na) {
    throw InvalidArgument("error_grid: inconsistent grid sizes");
  }
  if (ds.state_dim() != 1 || ds.action_dim() != 1) {
    throw InvalidArgument("error_grid: hull membership needs a 1D state and action");
  }
  const auto raw = raw_dataset(ds);
  const auto hull = geometry::convex_hull(geometry::to_points(raw.state_actions()));

  ErrorGrid g;
  g.n_s = static_cast<int>(ns);
  g.n_a = static_cast<int>(na);
  g.cells.resize(ns * na);
  double sum_in = 0.0;
  double sum_out = 0.0;
  for (std::size_t i = 0; i < ns; ++i) {
    double row_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < na; ++j) {
      const std::size_t c = i * na + j;
      GridCell& cell = g.cells[c];
      cell.s = s_centers[i];
      cell.a = a_centers[j];
      cell.q_hat = q_hat[c];
      cell.q_mc = q_mc[c];
      cell.eps = cell.q_hat - cell.q_mc;
      row_min = std::min(row_min, cell.eps);
    }
    for (std::size_t j = 0; j < na; ++j) {
      GridCell& cell = g.cells[i * na + j];
      cell.rel = cell.eps - row_min;
      cell.in_hull = geometry::in_hull({cell.s, cell.a}, hull);
      if (cell.in_hull) {
        sum_in += cell.rel;
        ++g.n_in;
      } else {
        sum_out += cell.rel;
        ++g.n_out;
      }
    }
  }
  if (g.n_in > 0) g.mean_rel_in = sum_in / static_cast<double>(g.n_in);
  if (g.n_out > 0) g.mean_rel_out = sum_out / static_cast<double>(g.n_out);
  return g;
}

ErrorGrid error_grid(const envs::RandomWalk1d& env, const agents::AgentState& agent,
                     const data::OfflineDataset& ds, int n_s, int n_a, kernels::Exec exec) {
  if (n_s < 1 || n_a < 1) {
    throw InvalidArgument("error_grid: resolution must be positive");
  }
  const auto sc = centers(env.config().lo, env.config().hi, n_s);
  const auto ac = centers(-env.max_action(), env.max_action(), n_a);
  const std::size_t n = sc.size() * ac.size();

  Matrix states(1, static_cast<Eigen::Index>(n));
  Matrix actions(1, static_cast<Eigen::Index>(n));
  for (std::size_t c = 0; c < n; ++c) {
    states(0, static_cast<Eigen::Index>(c)) = sc[c / ac.size()];
    actions(0, static_cast<Eigen::Index>(c)) = ac[c % ac.size()];
  }
  const Matrix q = agents::q_values(agent, states, actions);
  std::vector<double> q_hat(q.data(), q.data() + n);

  std::vector<double> q_mc(n);
  const auto policy = actor_policy(agent);
  kernels::for_each_index(
      n,
      [&](std::size_t c) {
        const Vec s = Vec::Constant(1, states(0, static_cast<Eigen::Index>(c)));
        const Vec a = Vec::Constant(1, actions(0, static_cast<Eigen::Index>(c)));
        q_mc[c] = envs::mc_q(env, policy, s, a, env.gamma(), 1, nullptr);
      },
      exec);
  return error_grid_from(sc, ac, q_hat, q_mc, ds);
}

void write_grid_csv(const ErrorGrid& grid, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "s,a,q_hat,q_mc,eps,rel,in_hull\n";
  for (const auto& c : grid.cells) {
    out << format_double(c.s) << ',' << format_double(c.a) << ',' << format_double(c.q_hat) << ','
        << format_double(c.q_mc) << ',' << format_double(c.eps) << ',' << format_double(c.rel)
        << ',' << (c.in_hull ? 1 : 0) << '\n';
  }
}

void write_grid_matrix_csv(const ErrorGrid& grid, const std::filesystem::path& path) {
  auto out = open_csv(path);
  for (int i = 0; i < grid.n_s; ++i) {
    for (int j = 0; j < grid.n_a; ++j) {
      out << (j ? "," : "") << format_double(grid.at(i, j).rel);
    }
    out << '\n';
  }
}

// ------------------------------------------------------------ probe

std::vector<ProbeRecord> interp_extrap_probe(const data::OfflineDataset& ds_in,
                                             const agents::AgentState& agent,
                                             const ProbeConfig& cfg, Rng& rng,
                                             kernels::Exec exec) {
  if (cfg.n_samples < 0 || cfg.k < 1) {
    throw InvalidArgument("probe: n_samples must be non-negative and k positive");
  }
  if (cfg.extrapolated_fraction > 0 && cfg.k < 2) {
    throw InvalidArgument("probe: extrapolation needs k >= 2");
  }
  const auto ds = raw_dataset(ds_in);
  const Matrix& pts = ds.state_actions();
  const int sd = ds.state_dim();
  const int ad = ds.action_dim();
  const auto n = static_cast<Eigen::Index>(cfg.n_samples);

  std::uniform_int_distribution<Eigen::Index> pick(0, pts.cols() - 1);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> uscale(cfg.scale_lo, cfg.scale_hi);
  std::vector<ProbeRecord> recs(static_cast<std::size_t>(n));
  Matrix xs(pts.rows(), n);
  for (Eigen::Index m = 0; m < n; ++m) {
    ProbeRecord& r = recs[static_cast<std::size_t>(m)];
    const bool extrap = u01(rng) < cfg.extrapolated_fraction;
    Vec w = dirichlet_ones(cfg.k, rng);
    if (extrap) {
      std::uniform_int_distribution<int> pick_k(0, cfg.k - 1);
      const int j = pick_k(rng);
      const double wj = w(j);
      w *= (1.0 + wj) / (1.0 - wj);
      w(j) = -wj;
      r.kind = ProbeKind::extrapolated;
      r.negated = j;
      if (cfg.rescale) {
        r.scale = uscale(rng);
        w *= r.scale;
      }
    }
    Vec x = Vec::Zero(pts.rows());
    for (int i = 0; i < cfg.k; ++i) {
      x += w(i) * pts.col(pick(rng));
    }
    xs.col(m) = x;
    r.x = x;
  }

  const auto proj = data::project_batch(xs, ds, exec);
  Matrix proj_pts(pts.rows(), n);
  for (Eigen::Index m = 0; m < n; ++m) {
    proj_pts.col(m) = proj[static_cast<std::size_t>(m)].nearest;
  }
  const Matrix qx = agents::q_values(agent, xs.topRows(sd), xs.bottomRows(ad));
  const Matrix qp = agents::q_values(agent, proj_pts.topRows(sd), proj_pts.bottomRows(ad));
  Matrix gx;
  if (agent.distance) {
    gx = agent.distance->evaluate(agent.normalize_columns(xs.topRows(sd)), xs.bottomRows(ad));
  }
  for (Eigen::Index m = 0; m < n; ++m) {
    ProbeRecord& r = recs[static_cast<std::size_t>(m)];
    r.d = proj[static_cast<std::size_t>(m)].distance;
    r.dq = std::abs(qx(0, m) - qp(0, m));
    if (agent.distance) r.g_value = gx(0, m);
  }
  return recs;
}

void write_probe_csv(const std::vector<ProbeRecord>& records, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "kind";
  const Eigen::Index dim = records.empty() ? 0 : records.front().x.size();
  for (Eigen::Index i = 0; i < dim; ++i) {
    out << ",x" << i;
  }
  out << ",d,dq,g,negated,scale\n";
  for (const auto& r : records) {
    out << (r.kind == ProbeKind::interpolated ? "interpolated" : "extrapolated");
    for (Eigen::Index i = 0; i < r.x.size(); ++i) {
      out << ',' << format_double(r.x(i));
    }
    out << ',' << format_double(r.d) << ',' << format_double(r.dq) << ','
        << (std::isnan(r.g_value) ? std::string() : format_double(r.g_value)) << ','
        << r.negated << ',' << format_double(r.scale) << '\n';
  }
}

std::vector<BinRow> binned_max(const std::vector<ProbeRecord>& records, int n_bins,
                               long min_count) {
  if (n_bins < 1) {
    throw InvalidArgument("binned_max: n_bins must be positive");
  }
  if (records.empty()) return {};
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& r : records) {
    lo = std::min(lo, r.d);
    hi = std::max(hi, r.d);
  }
  const double width = (hi - lo) / n_bins;
  std::vector<BinRow> raw(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b) {
    raw[static_cast<std::size_t>(b)].lo = lo + b * width;
    raw[static_cast<std::size_t>(b)].hi = b + 1 == n_bins ? hi : lo + (b + 1) * width;
  }
  for (const auto& r : records) {
    int b = width > 0 ? static_cast<int>((r.d - lo) / width) : 0;
    b = std::clamp(b, 0, n_bins - 1);
    auto& bin = raw[static_cast<std::size_t>(b)];
    bin.max_dq = bin.count == 0 ? r.dq : std::max(bin.max_dq, r.dq);
    ++bin.count;
  }

  auto absorb = [](BinRow& into, const BinRow& from) {
    if (from.count > 0) {
      into.max_dq = into.count == 0 ? from.max_dq : std::max(into.max_dq, from.max_dq);
    }
    into.count += from.count;
    into.lo = std::min(into.lo, from.lo);
    into.hi = std::max(into.hi, from.hi);
  };
  std::vector<BinRow> merged;
  std::optional<BinRow> acc;
  for (const auto& bin : raw) {
    if (!acc) {
      acc = bin;
    } else {
      absorb(*acc, bin);
    }
    if (acc->count >= min_count) {
      merged.push_back(*acc);
      acc.reset();
    }
  }
  if (acc && acc->count > 0) {
    if (merged.empty()) {
      merged.push_back(*acc);
    } else {
      absorb(merged.back(), *acc);
    }
  } else if (acc && !merged.empty()) {
    merged.back().hi = acc->hi;
  }
  return merged;
}

int count_inversions(const std::vector<BinRow>& bins) {
  int n = 0;
  for (std::size_t i = 1; i < bins.size(); ++i) {
    if (bins[i].max_dq < bins[i - 1].max_dq) ++n;
  }
  return n;
}

void write_bins_csv(const std::vector<BinRow>& bins, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "d_lo,d_hi,count,max_dq\n";
  for (const auto& b : bins) {
    out << format_double(b.lo) << ',' << format_double(b.hi) << ',' << b.count << ','
        << format_double(b.max_dq) << '\n';
  }
}

double max_pairwise_distance(const data::OfflineDataset& ds_in, kernels::Exec exec) {
  const auto ds = raw_dataset(ds_in);
  const Matrix& p = ds.state_actions();
  const auto n = static_cast<std::size_t>(p.cols());
  std::vector<double> row_max(n, 0.0);
  kernels::for_each_index(
      n,
      [&](std::size_t i) {
        double m = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
          m = std::max(m, (p.col(static_cast<Eigen::Index>(i)) -
                           p.col(static_cast<Eigen::Index>(j)))
                              .norm());
        }
        row_max[i] = m;
      },
      exec);
  return n == 0 ? 0.0 : *std::max_element(row_max.begin(), row_max.end());
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw InvalidArgument("spearman: length mismatch");
  }
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

// ------------------------------------------------------------ evaluation

EvalResult eval_policy(const envs::Environment& env, const envs::Policy& policy, int n_episodes,
                       Rng& rng) {
  if (n_episodes < 1) {
    throw InvalidArgument("eval_policy: n_episodes must be at least 1");
  }
  std::vector<double> returns;
  int successes = 0;
  for (int e = 0; e < n_episodes; ++e) {
    const Vec start = env.reset(rng);
    const auto ro = envs::rollout(env, policy, start, env.gamma(), &rng);
    returns.push_back(ro.discounted_return);
    successes += ro.success ? 1 : 0;
  }
  const auto sum = summarize(returns);
  return {sum.mean, sum.std, static_cast<double>(successes) / n_episodes, n_episodes};
}

EvalResult eval_policy(const envs::Environment& env, const agents::AgentState& agent,
                       int n_episodes, Rng& rng) {
  return eval_policy(env, actor_policy(agent), n_episodes, rng);
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) {
    ss += (v - s.mean) * (v - s.mean);
  }
  s.std = std::sqrt(ss / n);
  return s;
}

// ------------------------------------------------------------ runs

RunOutcome run_once(const envs::Environment& env, const data::OfflineDataset& ds,
                    const RunSpec& spec) {
  RunOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    Rng train_rng = derive_rng(spec.seed, 1);
    Rng during_rng = derive_rng(spec.seed, 3);
    agents::Evaluator evaluator;
    if (spec.cfg.eval_every > 0 && spec.eval_episodes > 0) {
      evaluator = [&](const agents::AgentState& st) {
        return eval_policy(env, st, spec.eval_episodes, during_rng).mean_return;
      };
    }
    auto res = agents::train(ds, spec.cfg, train_rng, evaluator);
    out.log = std::move(res.log);
    Rng eval_rng = derive_rng(spec.seed, 2);
    out.eval = eval_policy(env, res.agent, std::max(1, spec.eval_episodes), eval_rng);
    out.ok = true;
  } catch (const agents::TrainingFailed& e) {
    out.log = e.log();
    out.error = e.what();
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// ------------------------------------------------------------ generalization study

double drop_percent(double full, double removed) {
  if (!(full > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return 100.0 * (full - removed) / full;
}

std::vector<StudyRow> aggregate_study(const std::vector<StudyRun>& runs,
                                      const std::vector<agents::Algorithm>& algorithms) {
  std::vector<StudyRow> rows;
  for (auto alg : algorithms) {
    StudyRow row;
    row.algorithm = alg;
    std::vector<double> full;
    std::vector<double> removed;
    for (const auto& r : runs) {
      if (r.algorithm != alg) continue;
      (r.variant == "full" ? full : removed).push_back(r.success);
      row.failed += r.failed ? 1 : 0;
    }
    row.full = summarize(full);
    row.removed = summarize(removed);
    row.drop_percent = drop_percent(row.full.mean, row.removed.mean);
    rows.push_back(row);
  }
  return rows;
}

StudyReport generalization_study(const envs::PointMaze2d& env, const data::OfflineDataset& full,
                                 const data::OfflineDataset& removed, double removed_fraction,
                                 const StudyConfig& cfg, kernels::Exec exec) {
  if (cfg.seeds < 1) {
    throw InvalidArgument("study: seeds must be positive");
  }
  StudyReport rep;
  rep.full_size = full.size();
  rep.removed_size = removed.size();
  rep.removed_fraction = removed_fraction;
  for (auto alg : cfg.algorithms) {
    for (const char* variant : {"full", "removed"}) {
      for (int k = 1; k <= cfg.seeds; ++k) {
        StudyRun r;
        r.algorithm = alg;
        r.variant = variant;
        r.seed = cfg.seed + static_cast<std::uint64_t>(k);
        rep.runs.push_back(r);
      }
    }
  }
  kernels::for_each_index(
      rep.runs.size(),
      [&](std::size_t i) {
        StudyRun& r = rep.runs[i];
        RunSpec spec;
        spec.cfg = cfg.base;
        spec.cfg.algorithm = r.algorithm;
        spec.seed = r.seed;
        spec.eval_episodes = cfg.eval_episodes;
        const auto out = run_once(env, r.variant == "full" ? full : removed, spec);
        if (out.ok) {
          r.success = out.eval.success_rate;
          r.mean_return = out.eval.mean_return;
        } else {
          r.failed = true;
          r.error = out.error;
          r.success = kFailedScore;
          r.mean_return = kFailedScore;
        }
      },
      exec);
  rep.rows = aggregate_study(rep.runs, cfg.algorithms);
  return rep;
}

StudyReport generalization_study(const envs::PointMaze2d& env, const StudyConfig& cfg,
                                 kernels::Exec exec) {
  Rng data_rng = derive_rng(cfg.seed, 0);
  const auto full = data::generate_maze(env, cfg.data, data_rng);
  const auto removed = data::remove_regions(full, cfg.removal);
  return generalization_study(env, full, removed.dataset, removed.fraction_removed, cfg, exec);
}

void write_study_runs_csv(const StudyReport& report, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "algorithm,variant,seed,success,return,failed,error\n";
  for (const auto& r : report.runs) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << agents::to_string(r.algorithm) << ',' << r.variant << ',' << r.seed << ','
        << format_double(r.success) << ',' << format_double(r.mean_return) << ','
        << (r.failed ? 1 : 0) << ',' << err << '\n';
  }
}

void write_study_summary_csv(const StudyReport& report, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "algorithm,full_mean,full_std,removed_mean,removed_std,drop_percent,failed\n";
  for (const auto& r : report.rows) {
    out << agents::to_string(r.algorithm) << ',' << format_double(r.full.mean) << ','
        << format_double(r.full.std) << ',' << format_double(r.removed.mean) << ','
        << format_double(r.removed.std) << ','
        << (std::isnan(r.drop_percent) ? std::string() : format_double(r.drop_percent)) << ','
        << r.failed << '\n';
  }
}

// ------------------------------------------------------------ ablation sweep

std::string to_string(AblationParam p) {
  switch (p) {
    case AblationParam::alpha:
      return "alpha";
    case AblationParam::g_quantile:
      return "G";
    case AblationParam::n_noise:
      return "N";
  }
  return "?";
}

AblationParam parse_ablation_param(const std::string& s) {
  if (s == "alpha") return AblationParam::alpha;
  if (s == "G" || s == "g_quantile") return AblationParam::g_quantile;
  if (s == "N" || s == "n_noise") return AblationParam::n_noise;
  throw InvalidArgument("unknown ablation parameter '" + s + "' (alpha, G, N)");
}

agents::AgentConfig apply_ablation(const agents::AgentConfig& base, AblationParam p,
                                   const std::string& value) {
  agents::AgentConfig c = base;
  std::size_t used = 0;
  switch (p) {
    case AblationParam::alpha:
      try {
        c.alpha = std::stod(value, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != value.size()) {
        throw InvalidArgument("ablation: bad alpha '" + value + "'");
      }
      break;
    case AblationParam::g_quantile:
      c.threshold = agents::Threshold::parse(value);
      break;
    case AblationParam::n_noise: {
      int n = 0;
      try {
        n = std::stoi(value, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != value.size() || n < 1) {
        throw InvalidArgument("ablation: bad N '" + value + "'");
      }
      c.distance.n_noise = n;
      break;
    }
  }
  c.validate();
  return c;
}

bool AblationReport::all_completed() const {
  return std::all_of(runs.begin(), runs.end(), [](const AblationRun& r) { return r.ok; });
}

AblationReport ablation_sweep(const envs::Environment& env, const data::OfflineDataset& ds,
                              const agents::AgentConfig& base, AblationParam param,
                              const std::vector<std::string>& values, int seeds,
                              std::uint64_t base_seed, int eval_episodes, kernels::Exec exec) {
  if (values.empty()) {
    throw InvalidArgument("ablation: no values given");
  }
  if (seeds < 1) {
    throw InvalidArgument("ablation: seeds must be positive");
  }
  std::vector<agents::AgentConfig> cfgs;
  for (const auto& v : values) {
    cfgs.push_back(apply_ablation(base, param, v));
  }
  AblationReport rep;
  rep.param = param;
  for (const auto& v : values) {
    for (int k = 1; k <= seeds; ++k) {
      AblationRun r;
      r.value = v;
      r.seed = base_seed + static_cast<std::uint64_t>(k);
      rep.runs.push_back(r);
    }
  }
  kernels::for_each_index(
      rep.runs.size(),
      [&](std::size_t i) {
        AblationRun& r = rep.runs[i];
        RunSpec spec;
        spec.cfg = cfgs[i / static_cast<std::size_t>(seeds)];
        spec.seed = r.seed;
        spec.eval_episodes = eval_episodes;
        const auto out = run_once(env, ds, spec);
        r.ok = out.ok;
        r.error = out.error;
        if (out.ok) {
          r.final_return = out.eval.mean_return;
          r.success = out.eval.success_rate;
        }
      },
      exec);
  for (const auto& v : values) {
    AblationRow row;
    row.value = v;
    std::vector<double> rets;
    for (const auto& r : rep.runs) {
      if (r.value != v) continue;
      if (r.ok) {
        rets.push_back(r.final_return);
        ++row.completed;
      } else {
        ++row.failed;
      }
    }
    row.final_return = summarize(rets);
    rep.rows.push_back(row);
  }
  return rep;
}

void write_ablation_runs_csv(const AblationReport& report, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "param,value,seed,ok,final_return,success,error\n";
  const auto name = to_string(report.param);
  for (const auto& r : report.runs) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << name << ',' << r.value << ',' << r.seed << ',' << (r.ok ? 1 : 0) << ','
        << (r.ok ? format_double(r.final_return) : std::string()) << ','
        << (r.ok ? format_double(r.success) : std::string()) << ',' << err << '\n';
  }
}

void write_ablation_summary_csv(const AblationReport& report, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "param,value,mean,std,completed,failed\n";
  const auto name = to_string(report.param);
  for (const auto& r : report.rows) {
    out << name << ',' << r.value << ','
        << (r.completed ? format_double(r.final_return.mean) : std::string()) << ','
        << (r.completed ? format_double(r.final_return.std) : std::string()) << ','
        << r.completed << ',' << r.failed << '\n';
  }
}

}  // namespace doge::experiments

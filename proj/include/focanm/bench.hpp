#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include "focanm/config.hpp"
#include "focanm/pipeline.hpp"
#include "focanm/signal_sim.hpp"

namespace focanm {

struct ExperimentConfig {
  ArrayGeometry geometry = make_ula(4);
  std::vector<double> thetas_deg{-23.0, 17.0};
  double sigma_s2 = 1.0;
  std::vector<double> ar_coeffs{1.0, -1.0, 0.8};
  std::vector<double> snr_grid{-6, -3, 0, 3, 6, 9, 12};
  std::vector<long> j_grid{300};
  int trials = 100;
  std::vector<Method> methods{Method::et_focanm, Method::foc_anm_fixed, Method::foc_music};
  PipelineOptions pipeline;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: hardware concurrency
  std::string rows_path = "rows.csv";
  std::string summary_path = "summary.csv";

  void validate() const {
    if (trials < 1) throw std::invalid_argument("sweep.trials must be >= 1");
    if (snr_grid.empty() || j_grid.empty()) throw std::invalid_argument("sweep grids must be nonempty");
    if (methods.empty()) throw std::invalid_argument("methods must be nonempty");
    if (thetas_deg.empty()) throw std::invalid_argument("source.thetas must be nonempty");
    for (long j : j_grid) {
      if (j < 2) throw std::invalid_argument("sweep.snapshots entries must be >= 2");
    }
    for (double t : thetas_deg) require_visible_angle(t, "source.thetas");
  }
};

/// Every key understood by the config file and mirrored as a CLI flag.
inline const std::vector<std::pair<std::string, std::string>>& config_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys{
      {"array.omega", "antenna indices, e.g. 1,2,5,7"},
      {"source.thetas", "DOAs in degrees, e.g. -23,17"},
      {"source.sigma_s2", "source power"},
      {"noise.ar", "AR filter denominator, e.g. 1,-1,0.8"},
      {"sweep.snr_db", "SNR grid: list or start:step:stop"},
      {"sweep.snapshots", "snapshot grid: list or start:step:stop"},
      {"sweep.trials", "Monte Carlo trials per grid point"},
      {"methods", "subset of et-focanm,foc-anm-fixed,foc-music"},
      {"error.delta", "exceedance probability of the chi-square bound"},
      {"error.estimator", "influence|segment|asymptotic"},
      {"error.segments", "segment count for the segment estimator"},
      {"error.ridge", "relative ridge added before whitening"},
      {"error.dof", "chi-square degrees of freedom override"},
      {"solver.rho", "initial ADMM penalty"},
      {"solver.max_iters", "ADMM iteration budget"},
      {"solver.tol", "primal and dual tolerance"},
      {"solver.tol_primal", "primal residual tolerance"},
      {"solver.tol_dual", "dual residual tolerance"},
      {"baseline.xi", "error-energy budget of foc-anm-fixed"},
      {"music.grid_step", "MUSIC grid step in degrees"},
      {"doa.order", "known|eigengap"},
      {"doa.order_threshold", "relative eigenvalue threshold for eigengap order"},
      {"seed", "base random seed"},
      {"threads", "worker threads (0 = hardware)"},
      {"output.rows", "per-trial CSV path"},
      {"output.summary", "summary CSV path"},
  };
  return keys;
}

inline void apply_config(ExperimentConfig& cfg, const KeyValueConfig& kv) {
  std::set<std::string> known;
  for (const auto& [k, _] : config_keys()) known.insert(k);
  for (const auto& [key, value] : kv.values()) {
    if (!known.count(key)) throw std::invalid_argument("unknown config key '" + key + "'");
    auto& p = cfg.pipeline;
    if (key == "array.omega") cfg.geometry = parse_geometry(value);
    else if (key == "source.thetas") cfg.thetas_deg = parse_grid(value, key);
    else if (key == "source.sigma_s2") cfg.sigma_s2 = parse_double(value, key);
    else if (key == "noise.ar") cfg.ar_coeffs = parse_grid(value, key);
    else if (key == "sweep.snr_db") cfg.snr_grid = parse_grid(value, key);
    else if (key == "sweep.snapshots") {
      cfg.j_grid.clear();
      for (double j : parse_grid(value, key)) cfg.j_grid.push_back(std::lround(j));
    } else if (key == "sweep.trials") cfg.trials = static_cast<int>(parse_long(value, key));
    else if (key == "methods") {
      cfg.methods.clear();
      for (const auto& m : split_list(value)) cfg.methods.push_back(parse_method(m));
    } else if (key == "error.delta") p.tolerance.delta = parse_double(value, key);
    else if (key == "error.estimator") p.tolerance.covariance.mode = parse_covariance_mode(value);
    else if (key == "error.segments") p.tolerance.covariance.segments = static_cast<int>(parse_long(value, key));
    else if (key == "error.ridge") p.tolerance.ridge_rel = parse_double(value, key);
    else if (key == "error.dof") p.tolerance.dof_override = static_cast<int>(parse_long(value, key));
    else if (key == "solver.rho") p.solver.rho = parse_double(value, key);
    else if (key == "solver.max_iters") p.solver.max_iters = static_cast<int>(parse_long(value, key));
    else if (key == "solver.tol") p.solver.tol_primal = p.solver.tol_dual = parse_double(value, key);
    else if (key == "solver.tol_primal") p.solver.tol_primal = parse_double(value, key);
    else if (key == "solver.tol_dual") p.solver.tol_dual = parse_double(value, key);
    else if (key == "baseline.xi") p.fixed_xi = parse_double(value, key);
    else if (key == "music.grid_step") p.music_grid_step = parse_double(value, key);
    else if (key == "doa.order") {
      if (value == "known") p.order = OrderMode::known;
      else if (value == "eigengap") p.order = OrderMode::eigengap;
      else throw std::invalid_argument("doa.order must be known|eigengap");
    } else if (key == "doa.order_threshold") p.order_threshold = parse_double(value, key);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_long(value, key));
    else if (key == "threads") cfg.threads = static_cast<int>(parse_long(value, key));
    else if (key == "output.rows") cfg.rows_path = value;
    else if (key == "output.summary") cfg.summary_path = value;
  }
}

struct ResultRow {
  Method method = Method::et_focanm;
  double snr_db = 0.0;
  long j = 0;
  int trial = 0;
  std::vector<double> theta_true;
  std::vector<double> theta_est;  // NaN where missing
  std::vector<double> err_deg;    // NaN where missing
  double time_ms = 0.0;
  std::string status;
  bool failed = false;
};

/// Seed of one realization; shared by every method at that grid point.
inline std::uint64_t trial_seed(std::uint64_t base, double snr_db, long j, int trial) {
  std::uint64_t s = derive_seed(base, static_cast<std::uint64_t>(trial));
  s = derive_seed(s, static_cast<std::uint64_t>(j));
  return derive_seed(s, static_cast<std::uint64_t>(std::llround(snr_db * 1000.0)));
}

inline std::vector<ResultRow> run_trial(const ExperimentConfig& cfg, double snr_db, long j, int trial) {
  SourceConfig src{cfg.thetas_deg, cfg.sigma_s2};
  NoiseConfig noise;
  noise.ar_coeffs = cfg.ar_coeffs;
  noise.sigma_n2 = noise_power_from_snr(snr_db, cfg.sigma_s2);
  const SnapshotMatrix y = gen_snapshots(cfg.geometry, src, noise, j, trial_seed(cfg.seed, snr_db, j, trial));

  std::vector<double> truth = cfg.thetas_deg;
  std::sort(truth.begin(), truth.end());
  std::vector<ResultRow> rows;
  for (Method m : cfg.methods) {
    ResultRow row;
    row.method = m;
    row.snr_db = snr_db;
    row.j = j;
    row.trial = trial;
    row.theta_true = truth;
    const auto t0 = std::chrono::steady_clock::now();
    MethodResult res = estimate_doas(m, y, static_cast<int>(truth.size()), cfg.pipeline);
    row.time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    row.status = res.status;
    row.failed = res.failed;
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    row.theta_est.assign(truth.size(), nan);
    row.err_deg.assign(truth.size(), nan);
    if (!res.failed) {
      const auto err = matched_errors(truth, res.estimates.thetas_deg);
      if (err.empty()) {
        row.failed = true;
        row.status = "failed: estimate count mismatch";
      } else {
        row.theta_est = res.estimates.thetas_deg;
        row.err_deg = err;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Runs every (snr, j, trial) realization; rows come back ordered by
/// snr, then j, then trial, then method regardless of thread scheduling.
inline std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  struct Task { double snr; long j; int trial; };
  std::vector<Task> tasks;
  for (double snr : cfg.snr_grid)
    for (long j : cfg.j_grid)
      for (int t = 0; t < cfg.trials; ++t) tasks.push_back({snr, j, t});

  std::vector<std::vector<ResultRow>> slots(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) slots[i] = run_trial(cfg, tasks[i].snr, tasks[i].j, tasks[i].trial);
  };
  unsigned n_threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(tasks.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  std::vector<ResultRow> rows;
  for (auto& s : slots)
    for (auto& r : s) rows.push_back(std::move(r));
  return rows;
}

struct SummaryRow {
  Method method = Method::et_focanm;
  double snr_db = 0.0;
  long j = 0;
  int trials = 0;
  int failures = 0;
  int nonconverged = 0;  // max_iters rows; still included in the RMSE
  double rmse_deg = std::numeric_limits<double>::quiet_NaN();
  double mean_time_ms = 0.0;

  double failure_rate() const { return trials ? static_cast<double>(failures) / trials : 0.0; }
};

/// RMSE pooled over trials and sources: sqrt(mean of squared errors) over
/// the rows that did not fail.
inline std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  struct Acc { SummaryRow row; double se = 0.0; long count = 0; };
  std::map<std::tuple<double, long, int>, Acc> acc;
  for (const auto& r : rows) {
    auto& a = acc[{r.snr_db, r.j, static_cast<int>(r.method)}];
    a.row.method = r.method;
    a.row.snr_db = r.snr_db;
    a.row.j = r.j;
    ++a.row.trials;
    a.row.mean_time_ms += r.time_ms;
    if (r.status == "max_iters") ++a.row.nonconverged;
    if (r.failed) {
      ++a.row.failures;
      continue;
    }
    for (double e : r.err_deg) {
      a.se += e * e;
      ++a.count;
    }
  }
  std::vector<SummaryRow> out;
  for (auto& [_, a] : acc) {
    if (a.count > 0) a.row.rmse_deg = std::sqrt(a.se / static_cast<double>(a.count));
    a.row.mean_time_ms /= a.row.trials;
    out.push_back(a.row);
  }
  return out;
}

inline constexpr const char* kRowsSchema = "# focanm-rows v1";
inline constexpr const char* kSummarySchema = "# focanm-summary v1";

namespace detail {

inline std::string fmt_num(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

}  // namespace detail

inline std::size_t max_sources(const std::vector<ResultRow>& rows) {
  std::size_t k = 0;
  for (const auto& r : rows) k = std::max(k, r.theta_true.size());
  return k;
}

inline void write_rows_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  const std::size_t k = max_sources(rows);
  out << kRowsSchema << "\nmethod,snr_db,j,trial";
  for (std::size_t i = 1; i <= k; ++i) out << ",theta_true_" << i << ",theta_est_" << i;
  for (std::size_t i = 1; i <= k; ++i) out << ",err_deg_" << i;
  out << ",time_ms,status\n";
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  auto at = [&](const std::vector<double>& v, std::size_t i) { return i < v.size() ? v[i] : nan; };
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << detail::fmt_num(r.snr_db) << ',' << r.j << ',' << r.trial;
    for (std::size_t i = 0; i < k; ++i) out << ',' << detail::fmt_num(at(r.theta_true, i)) << ',' << detail::fmt_num(at(r.theta_est, i));
    for (std::size_t i = 0; i < k; ++i) out << ',' << detail::fmt_num(at(r.err_deg, i));
    char tbuf[32];
    std::snprintf(tbuf, sizeof tbuf, "%.3f", r.time_ms);
    out << ',' << tbuf << ',' << detail::sanitize(r.status) << '\n';
  }
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary) {
  out << kSummarySchema << "\nmethod,snr_db,j,trials,failures,failure_rate,nonconverged,rmse_deg,mean_time_ms\n";
  for (const auto& s : summary) {
    char tbuf[32];
    std::snprintf(tbuf, sizeof tbuf, "%.3f", s.mean_time_ms);
    out << to_string(s.method) << ',' << detail::fmt_num(s.snr_db) << ',' << s.j << ',' << s.trials << ',' << s.failures << ','
        << detail::fmt_num(s.failure_rate()) << ',' << s.nonconverged << ',' << detail::fmt_num(s.rmse_deg) << ',' << tbuf << '\n';
  }
}

/// Reads a rows file written by write_rows_csv.
inline std::vector<ResultRow> read_rows_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || KeyValueConfig::trim(line) != kRowsSchema) throw std::invalid_argument("rows CSV: missing schema tag");
  if (!std::getline(in, line)) throw std::invalid_argument("rows CSV: missing header");
  std::vector<std::string> header;
  {
    std::stringstream hs(line);
    std::string h;
    while (std::getline(hs, h, ',')) header.push_back(h);
  }
  const std::size_t k = (header.size() - 6) / 3;
  if (header.size() != 6 + 3 * k) throw std::invalid_argument("rows CSV: malformed header");
  auto num = [](const std::string& s) { return s.empty() ? std::numeric_limits<double>::quiet_NaN() : parse_double(s, "rows CSV"); };
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.push_back("");
    if (f.size() != header.size()) throw std::invalid_argument("rows CSV: wrong field count");
    ResultRow r;
    r.method = parse_method(f[0]);
    r.snr_db = num(f[1]);
    r.j = parse_long(f[2], "rows CSV j");
    r.trial = static_cast<int>(parse_long(f[3], "rows CSV trial"));
    for (std::size_t i = 0; i < k; ++i) {
      const double tt = num(f[4 + 2 * i]);
      if (!std::isnan(tt)) r.theta_true.push_back(tt);
      r.theta_est.push_back(num(f[5 + 2 * i]));
      r.err_deg.push_back(num(f[4 + 2 * k + i]));
    }
    r.theta_est.resize(r.theta_true.size());
    r.err_deg.resize(r.theta_true.size());
    r.time_ms = num(f[4 + 3 * k]);
    r.status = f[5 + 3 * k];
    r.failed = r.status.rfind("failed", 0) == 0 || r.status == "peak_shortfall";
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Runs the sweep and writes both CSV files.
inline std::vector<SummaryRow> sweep_and_report(const ExperimentConfig& cfg) {
  const auto rows = run_sweep(cfg);
  const auto summary = summarize(rows);
  std::ofstream rows_out(cfg.rows_path);
  if (!rows_out) throw std::runtime_error("cannot write '" + cfg.rows_path + "'");
  write_rows_csv(rows_out, rows);
  std::ofstream sum_out(cfg.summary_path);
  if (!sum_out) throw std::runtime_error("cannot write '" + cfg.summary_path + "'");
  write_summary_csv(sum_out, summary);
  if (!rows_out || !sum_out) throw std::runtime_error("write error on output CSV");
  return summary;
}

}  // namespace focanm

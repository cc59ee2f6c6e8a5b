// focanm: simulate snapshots, estimate DOAs, run Monte Carlo sweeps and the
// verification suite.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "focanm/bench.hpp"
#include "focanm/io.hpp"
#include "focanm/testing/acceptance.hpp"

namespace {

using namespace focanm;

struct SimulateArgs {
  std::string omega = "1,2,3,4";
  std::string thetas = "-23,17";
  std::string ar = "1,-1,0.8";
  double snr_db = 0.0;
  long snapshots = 300;
  double sigma_s2 = 1.0;
  std::uint64_t seed = 1;
  std::string out = "-";
};

struct EstimateArgs {
  std::string input;
  std::string method = "et-focanm";
  int sources = 0;
  double delta = 0.001;
  std::string estimator = "influence";
  int segments = 10;
  double xi = 1.0;
  double grid_step = 0.01;
  std::string dump_dir;
};

struct BenchArgs {
  std::string config;
  std::map<std::string, std::string> overrides;
};

struct VerifyArgs {
  std::vector<int> criteria;
  int trials = 100;
  bool quick = false;
};

int run_simulate(const SimulateArgs& a) {
  const ArrayGeometry geom = parse_geometry(a.omega);
  SourceConfig src{parse_grid(a.thetas, "--thetas"), a.sigma_s2};
  NoiseConfig noise;
  noise.ar_coeffs = parse_grid(a.ar, "--ar");
  noise.sigma_n2 = noise_power_from_snr(a.snr_db, a.sigma_s2);
  const SnapshotMatrix y = gen_snapshots(geom, src, noise, a.snapshots, a.seed);
  std::ostringstream meta;
  meta << "# source.thetas = " << a.thetas << "\n# snr_db = " << a.snr_db << "\n# seed = " << a.seed << "\n";
  if (a.out == "-") {
    write_snapshots_csv(std::cout, y, meta.str());
    return 0;
  }
  std::ofstream out(a.out);
  if (!out) throw std::runtime_error("cannot write '" + a.out + "'");
  write_snapshots_csv(out, y, meta.str());
  if (!out) throw std::runtime_error("write error on '" + a.out + "'");
  return 0;
}

int run_estimate(const EstimateArgs& a) {
  std::ifstream in(a.input);
  if (!in) throw std::runtime_error("cannot open '" + a.input + "'");
  const SnapshotMatrix y = read_snapshots_csv(in);
  PipelineOptions opt;
  opt.tolerance.delta = a.delta;
  opt.tolerance.covariance.mode = parse_covariance_mode(a.estimator);
  opt.tolerance.covariance.segments = a.segments;
  opt.fixed_xi = a.xi;
  opt.music_grid_step = a.grid_step;
  if (a.sources <= 0) opt.order = OrderMode::eigengap;
  const Method method = parse_method(a.method);

  const MethodResult res = estimate_doas(method, y, a.sources, opt);
  std::cout << "method: " << to_string(method) << "\nstatus: " << res.status << "\n";
  if (res.solution) {
    std::cout << "iterations: " << res.solution->iterations << "\nobjective: " << res.solution->objective() << "\n";
  }
  std::cout << "doa_deg:";
  char buf[32];
  for (double t : res.estimates.thetas_deg) {
    std::snprintf(buf, sizeof buf, " %.4f", t == 0.0 ? 0.0 : t);
    std::cout << buf;
  }
  std::cout << "\n";

  if (!a.dump_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(a.dump_dir);
    const auto ops = reduction_operators(y.geom);
    const CumulantMatrix c4 = sample_c4(y);
    const RcFocMatrix r4 = rc_foc(c4, ops);
    const CVector z = smv(r4, ops).z;
    const fs::path dir(a.dump_dir);
    write_matrix_csv((dir / "c4.csv").string(), c4.data);
    write_matrix_csv((dir / "r4.csv").string(), r4.data);
    write_matrix_csv((dir / "z.csv").string(), z);
    if (method == Method::et_focanm) {
      const WhiteningModel wm = error_tolerance_model(y, ops, opt.tolerance);
      write_matrix_csv((dir / "sigma.csv").string(), wm.sigma);
      std::cout << "eta: " << wm.eta << "\n";
    }
    if (res.solution) write_matrix_csv((dir / "toeplitz.csv").string(), res.solution->t());
  }
  return res.failed ? 3 : 0;
}

int run_bench(const BenchArgs& a) {
  KeyValueConfig kv = a.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(a.config);
  for (const auto& [k, v] : a.overrides) kv.set(k, v);
  ExperimentConfig cfg;
  apply_config(cfg, kv);
  cfg.validate();
  const auto summary = sweep_and_report(cfg);
  write_summary_csv(std::cout, summary);
  return 0;
}

int run_verify(const VerifyArgs& a) {
  std::vector<int> ids = a.criteria;
  if (ids.empty() && a.quick) ids = {1, 2, 3, 4, 5, 6, 10};
  testing::SweepCache cache(a.trials);
  const auto results = testing::run_acceptance(ids, cache, [](const testing::CriterionResult& r) {
    std::cout << testing::format_line(r) << std::endl;
  });
  int failed = 0;
  for (const auto& r : results) failed += !r.passed;
  std::cout << results.size() - static_cast<std::size_t>(failed) << "/" << results.size() << " criteria passed\n";
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gridless DOA estimation from fourth-order cumulants"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Write one snapshot realization as CSV");
  sim_cmd->add_option("--omega", sim.omega, "antenna indices")->capture_default_str();
  sim_cmd->add_option("--thetas", sim.thetas, "DOAs in degrees")->capture_default_str();
  sim_cmd->add_option("--ar", sim.ar, "AR noise coefficients")->capture_default_str();
  sim_cmd->add_option("--snr", sim.snr_db, "SNR in dB")->capture_default_str();
  sim_cmd->add_option("-J,--snapshots", sim.snapshots, "snapshot count")->capture_default_str()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--sigma-s2", sim.sigma_s2, "source power")->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "random seed")->capture_default_str();
  sim_cmd->add_option("-o,--out", sim.out, "output path, - for stdout")->capture_default_str();

  EstimateArgs est;
  auto* est_cmd = app.add_subcommand("estimate", "Estimate DOAs from a snapshot CSV");
  est_cmd->add_option("input", est.input, "snapshot CSV")->required();
  est_cmd->add_option("-m,--method", est.method, "et-focanm | foc-anm-fixed | foc-music")->capture_default_str();
  est_cmd->add_option("-P,--sources", est.sources, "number of sources (0: eigengap order estimate)")->capture_default_str();
  est_cmd->add_option("--delta", est.delta, "exceedance probability of the error bound")->capture_default_str();
  est_cmd->add_option("--estimator", est.estimator, "influence | segment | asymptotic")->capture_default_str();
  est_cmd->add_option("--segments", est.segments, "segments for the segment estimator")->capture_default_str();
  est_cmd->add_option("--xi", est.xi, "error budget of foc-anm-fixed")->capture_default_str();
  est_cmd->add_option("--grid-step", est.grid_step, "MUSIC grid step (deg)")->capture_default_str();
  est_cmd->add_option("--dump-dir", est.dump_dir, "write C4, R4, z, Sigma and T as CSV here");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Monte Carlo sweep; writes rows and summary CSV");
  bench_cmd->add_option("-c,--config", bench.config, "key = value config file");
  for (const auto& [key, help] : config_keys()) {
    bench_cmd->add_option_function<std::string>("--" + key, [&bench, k = key](const std::string& v) { bench.overrides[k] = v; }, help);
  }

  VerifyArgs ver;
  auto* ver_cmd = app.add_subcommand("verify", "Run the oracle and acceptance checks");
  ver_cmd->add_option("--criteria", ver.criteria, "criterion ids (default: all)")->delimiter(',');
  ver_cmd->add_option("--trials", ver.trials, "trials per point in the sweep checks")->capture_default_str()->check(CLI::PositiveNumber);
  ver_cmd->add_flag("--quick", ver.quick, "skip the Monte Carlo sweep checks");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim_cmd) return run_simulate(sim);
    if (*est_cmd) return run_estimate(est);
    if (*bench_cmd) return run_bench(bench);
    if (*ver_cmd) return run_verify(ver);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

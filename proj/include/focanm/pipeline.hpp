#pragma once

#include <optional>
#include <string>

#include "focanm/anm_solver.hpp"
#include "focanm/doa_retrieval.hpp"
#include "focanm/error_stats.hpp"

namespace focanm {

enum class Method { et_focanm, foc_anm_fixed, foc_music };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::et_focanm: return "et-focanm";
    case Method::foc_anm_fixed: return "foc-anm-fixed";
    case Method::foc_music: return "foc-music";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "et-focanm") return Method::et_focanm;
  if (s == "foc-anm-fixed") return Method::foc_anm_fixed;
  if (s == "foc-music") return Method::foc_music;
  throw std::invalid_argument("unknown method '" + s + "' (et-focanm|foc-anm-fixed|foc-music)");
}

enum class OrderMode { known, eigengap };

struct PipelineOptions {
  ErrorToleranceOptions tolerance;
  SolverParams solver;
  double fixed_xi = 1.0;  // error-energy budget of the fixed-tolerance baseline
  double music_grid_step = 0.01;
  OrderMode order = OrderMode::known;
  double order_threshold = 1e-3;
};

struct MethodResult {
  DoaEstimates estimates;
  std::optional<ToeplitzSolution> solution;
  std::string status;  // converged | max_iters | peak_shortfall | ok | failed: ...
  bool failed = false;
};

/// One data set through one method. `p_known` is used when the order mode is
/// `known`; errors inside the method are reported through `failed`.
inline MethodResult estimate_doas(Method method, const SnapshotMatrix& y, int p_known, const PipelineOptions& opt,
                                  const AnmSolver& solver = solve_et_anm) {
  MethodResult res;
  try {
    const ReductionOperators ops = reduction_operators(y.geom);
    const RcFocMatrix r4 = rc_foc(sample_c4(y), ops);
    if (method == Method::foc_music) {
      const int p = opt.order == OrderMode::known ? p_known : std::min(model_order(r4.data, opt.order_threshold), ops.coarray_dim() - 1);
      MusicResult mr = foc_music(r4, p, opt.music_grid_step);
      res.estimates = std::move(mr.estimates);
      res.status = mr.shortfall ? "peak_shortfall" : "ok";
      res.failed = mr.shortfall;
      return res;
    }
    const NonRedundantVector z = smv(r4, ops);
    AnmProblem problem{z.z, method == Method::et_focanm ? error_tolerance_model(y, ops, opt.tolerance)
                                                         : identity_whitening(z.z.size(), opt.fixed_xi)};
    ToeplitzSolution sol = solver(problem, opt.solver);
    const CMatrix t = sol.t();
    const int p = opt.order == OrderMode::known ? p_known : model_order(t, opt.order_threshold);
    if (p < 1) throw NumericalError("model order estimate is zero");
    res.estimates = esprit(t, p);
    res.status = to_string(sol.status);
    res.solution = std::move(sol);
  } catch (const std::exception& e) {
    res.failed = true;
    res.status = std::string("failed: ") + e.what();
  }
  return res;
}

}  // namespace focanm

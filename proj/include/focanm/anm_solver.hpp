#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "focanm/error_stats.hpp"

namespace focanm {

/// min ||x||_A  s.t.  ||Sigma^{-1/2}(z - x)||^2 <= eta, posed as
/// min 1/2 q + 1/2 mu_0  s.t.  [[T(mu), x], [x^H, q]] >= 0 and the ellipsoid.
struct AnmProblem {
  CVector z;
  WhiteningModel whitening;  // metric and eta

  double eta() const { return whitening.eta; }
};

struct SolverParams {
  double rho = 1.0;
  int max_iters = 5000;
  double tol_primal = 1e-7;
  double tol_dual = 1e-7;
  bool adapt_rho = true;
  bool record_history = false;
};

enum class SolverStatus { converged, max_iters };

inline const char* to_string(SolverStatus s) { return s == SolverStatus::converged ? "converged" : "max_iters"; }

/// Hermitian Toeplitz matrix with first column mu.
inline CMatrix toeplitz(const CVector& mu) {
  const Eigen::Index n = mu.size();
  CMatrix t(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) t(i, j) = i >= j ? mu(i - j) : std::conj(mu(j - i));
  }
  for (Eigen::Index i = 0; i < n; ++i) t(i, i) = mu(0).real();
  return t;
}

struct ToeplitzSolution {
  CVector x_hat;
  double q_hat = 0.0;
  CVector mu;
  SolverStatus status = SolverStatus::max_iters;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  std::vector<double> residual_history;  // max(primal, dual) per iteration, normalized units

  CMatrix t() const { return toeplitz(mu); }
  double objective() const { return 0.5 * q_hat + 0.5 * mu(0).real(); }
  bool converged() const { return status == SolverStatus::converged; }
};

/// Nearest PSD matrix in Frobenius norm: clip negative eigenvalues.
inline CMatrix psd_project(const CMatrix& m) {
  const CMatrix h = (m + m.adjoint()) * 0.5;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  if (es.info() != Eigen::Success) throw NumericalError("psd_project: eigendecomposition failed");
  const RVector ev = es.eigenvalues().cwiseMax(0.0);
  CMatrix out = es.eigenvectors() * ev.cast<cdouble>().asDiagonal() * es.eigenvectors().adjoint();
  return (out + out.adjoint()) * 0.5;
}

/// Euclidean projection of v onto {x : (x - z)^H Sigma^{-1} (x - z) <= eta}.
/// In the eigenbasis of Sigma the minimizer is u_i / (1 + nu w_i); nu >= 0 is
/// the root of sum w_i |u_i|^2 / (1 + nu w_i)^2 = eta (safeguarded Newton).
inline CVector ellipsoid_project(const CVector& v, const CVector& z, const WhiteningModel& metric, double eta) {
  if (!(eta >= 0.0)) throw std::invalid_argument("ellipsoid_project: eta must be non-negative");
  const CVector u = metric.eigvecs.adjoint() * (v - z);
  const RVector& w = metric.metric_eigs;
  const RVector u2 = u.cwiseAbs2();
  auto phi = [&](double nu) {
    double f = 0.0;
    double df = 0.0;
    for (Eigen::Index i = 0; i < u2.size(); ++i) {
      const double den = 1.0 + nu * w(i);
      f += w(i) * u2(i) / (den * den);
      df -= 2.0 * w(i) * w(i) * u2(i) / (den * den * den);
    }
    return std::pair{f - eta, df};
  };
  if (phi(0.0).first <= 0.0) return v;
  if (eta == 0.0) return z;

  double lo = 0.0;
  double hi = 1.0 / w.minCoeff();
  while (phi(hi).first > 0.0) hi *= 2.0;
  double nu = 0.0;
  for (int it = 0; it < 200; ++it) {
    const auto [f, df] = phi(nu);
    if (f > 0.0) lo = nu; else hi = nu;
    if (std::abs(f) <= 1e-12 * eta) break;
    double next = df < 0.0 ? nu - f / df : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - nu) <= 1e-15 * std::max(1.0, nu)) {
      nu = next;
      break;
    }
    nu = next;
  }
  CVector y(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) y(i) = u(i) / (1.0 + nu * w(i));
  return z + metric.eigvecs * y;
}

/// Operator-splitting (ADMM) solver. A PSD copy Z of the block matrix
/// K(mu, x, q) = [[T(mu), x], [x^H, q]] is split off; each sweep does
///  (a) the (mu, x, q) update: Toeplitz diagonal averaging for mu and the
///      ellipsoid projection for x,
///  (b) Z <- PSD projection of K + Lambda / rho,
///  (c) Lambda <- Lambda + rho (K - Z),
/// with residual balancing on rho. The problem is scaled so max|z| = 1.
inline ToeplitzSolution solve_et_anm(const AnmProblem& problem, const SolverParams& params = {}) {
  const Eigen::Index n = problem.z.size();
  if (n < 1) throw std::invalid_argument("solve_et_anm: empty measurement");
  if (problem.whitening.dim() != n) throw std::invalid_argument("solve_et_anm: metric size does not match z");
  if (!(problem.eta() >= 0.0)) throw std::invalid_argument("solve_et_anm: eta must be non-negative");
  if (!(params.rho > 0.0) || !(params.tol_primal > 0.0) || !(params.tol_dual > 0.0) || params.max_iters < 1) {
    throw std::invalid_argument("solve_et_anm: invalid solver parameters");
  }

  ToeplitzSolution sol;
  const double scale = problem.z.cwiseAbs().maxCoeff();
  if (scale == 0.0) {
    sol.x_hat = CVector::Zero(n);
    sol.mu = CVector::Zero(n);
    sol.status = SolverStatus::converged;
    return sol;
  }
  const CVector z = problem.z / scale;
  const double eta = problem.eta() / (scale * scale);

  const Eigen::Index b = n + 1;
  CMatrix zmat = CMatrix::Zero(b, b);
  CMatrix lambda = CMatrix::Zero(b, b);
  CMatrix k(b, b);
  CVector mu = CVector::Zero(n);
  CVector x = z;
  double q = 0.0;
  double rho = params.rho;

  for (int it = 1; it <= params.max_iters; ++it) {
    const CMatrix y = zmat - lambda / rho;
    // (a) Toeplitz block: mean of each diagonal, folding the upper half in conjugated.
    mu(0) = y.topLeftCorner(n, n).diagonal().real().mean() - 1.0 / (2.0 * rho * static_cast<double>(n));
    for (Eigen::Index lag = 1; lag < n; ++lag) {
      cdouble acc = 0.0;
      for (Eigen::Index i = 0; i + lag < n; ++i) acc += y(i + lag, i) + std::conj(y(i, i + lag));
      mu(lag) = acc / (2.0 * static_cast<double>(n - lag));
    }
    const CVector x_target = 0.5 * (y.col(n).head(n) + y.row(n).head(n).adjoint());
    x = ellipsoid_project(x_target, z, problem.whitening, eta);
    q = y(n, n).real() - 1.0 / (2.0 * rho);

    k.topLeftCorner(n, n) = toeplitz(mu);
    k.col(n).head(n) = x;
    k.row(n).head(n) = x.adjoint();
    k(n, n) = q;

    // (b)
    const CMatrix z_prev = zmat;
    zmat = psd_project(k + lambda / rho);
    // (c)
    const CMatrix gap = k - zmat;
    lambda += rho * gap;

    sol.primal_residual = gap.norm();
    sol.dual_residual = rho * (zmat - z_prev).norm();
    sol.iterations = it;
    if (params.record_history) sol.residual_history.push_back(std::max(sol.primal_residual, sol.dual_residual));
    if (sol.primal_residual <= params.tol_primal && sol.dual_residual <= params.tol_dual) {
      sol.status = SolverStatus::converged;
      break;
    }
    if (params.adapt_rho && it % 10 == 0) {
      if (sol.primal_residual > 10.0 * sol.dual_residual) rho *= 2.0;
      else if (sol.dual_residual > 10.0 * sol.primal_residual) rho /= 2.0;
    }
  }

  // K meets the PSD cone only up to the residual tolerance. Lifting the
  // diagonal by the most negative eigenvalue makes the returned block exactly
  // PSD at an objective cost of that same amount; x is untouched so the
  // ellipsoid constraint still holds.
  Eigen::SelfAdjointEigenSolver<CMatrix> final_eigs(k, Eigen::EigenvaluesOnly);
  const double lift = std::max(0.0, -final_eigs.eigenvalues().minCoeff());
  mu(0) += lift;
  q += lift;

  sol.x_hat = x * scale;
  sol.mu = mu * scale;
  sol.mu(0) = sol.mu(0).real();
  sol.q_hat = q * scale;
  sol.primal_residual *= scale;
  sol.dual_residual *= scale;
  return sol;
}

using AnmSolver = std::function<ToeplitzSolution(const AnmProblem&, const SolverParams&)>;

struct VerificationReport {
  double min_block_eigenvalue = 0.0;
  double t_norm = 0.0;
  double constraint_value = 0.0;  // ||Sigma^{-1/2}(z - x)||^2
  double slack = 0.0;             // eta - constraint_value
  double objective = 0.0;
  std::optional<double> objective_gap;  // objective - reference
  bool psd_ok = false;
  bool constraint_ok = false;

  bool feasible() const { return psd_ok && constraint_ok; }
};

/// Feasibility margins of a solution. PSD holds if the block matrix's
/// smallest eigenvalue is >= -1e-7 max(1, ||T||); the ellipsoid holds if the
/// constraint value is <= eta (1 + 1e-6).
inline VerificationReport verify_solution(const ToeplitzSolution& sol, const AnmProblem& problem,
                                          std::optional<double> reference_objective = std::nullopt) {
  const Eigen::Index n = sol.mu.size();
  CMatrix block(n + 1, n + 1);
  block.topLeftCorner(n, n) = sol.t();
  block.col(n).head(n) = sol.x_hat;
  block.row(n).head(n) = sol.x_hat.adjoint();
  block(n, n) = sol.q_hat;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(block, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<CMatrix> et(sol.t(), Eigen::EigenvaluesOnly);

  VerificationReport rep;
  rep.min_block_eigenvalue = es.eigenvalues().minCoeff();
  rep.t_norm = et.eigenvalues().cwiseAbs().maxCoeff();
  rep.constraint_value = problem.whitening.mahalanobis2(problem.z - sol.x_hat);
  rep.slack = problem.eta() - rep.constraint_value;
  rep.objective = sol.objective();
  if (reference_objective) rep.objective_gap = rep.objective - *reference_objective;
  rep.psd_ok = rep.min_block_eigenvalue >= -1e-7 * std::max(1.0, rep.t_norm);
  rep.constraint_ok = rep.constraint_value <= problem.eta() * (1.0 + 1e-6) + 1e-300;
  return rep;
}

}  // namespace focanm

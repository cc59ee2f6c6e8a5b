#pragma once

#include <algorithm>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "focanm/array_geometry.hpp"
#include "focanm/cumulants.hpp"

namespace focanm {

struct DoaEstimates {
  std::vector<double> thetas_deg;  // ascending
  int clamped = 0;                 // estimates pulled back from the edge of the visible region

  int p() const { return static_cast<int>(thetas_deg.size()); }
};

/// Number of eigenvalues >= threshold_rel * largest, capped at dim - 1
/// (which is 4N - 4 for the (4N-3)-dimensional Toeplitz matrix).
inline int model_order(const CMatrix& t, double threshold_rel = 1e-3) {
  if (t.rows() != t.cols()) throw std::invalid_argument("model_order: matrix must be square");
  if (t.rows() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es((t + t.adjoint()) * 0.5, Eigen::EigenvaluesOnly);
  const RVector ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  if (!(top > 0.0)) return 0;
  int count = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) count += ev(i) >= threshold_rel * top ? 1 : 0;
  return std::min(count, static_cast<int>(t.rows()) - 1);
}

namespace detail {

// Phase step between adjacent virtual elements is exp(j pi sin(theta)).
inline double phase_to_angle(double phase, int& clamped) {
  double s = phase / kPi;
  constexpr double kEdge = 1.0 - 1e-12;
  if (std::abs(s) > kEdge) {
    s = std::copysign(kEdge, s);
    ++clamped;
  }
  return rad_to_deg(std::asin(s));
}

}  // namespace detail

/// ESPRIT with maximal-overlap subarrays: E1 = Es without its last row,
/// E2 = Es without its first row, Psi = E1^+ E2.
inline DoaEstimates esprit(const CMatrix& t, int p) {
  const Eigen::Index n = t.rows();
  if (t.cols() != n) throw std::invalid_argument("esprit: matrix must be square");
  if (p < 1 || p > n - 1) throw std::invalid_argument("esprit: need 1 <= p <= dim - 1");
  Eigen::SelfAdjointEigenSolver<CMatrix> es((t + t.adjoint()) * 0.5);
  if (es.info() != Eigen::Success) throw NumericalError("esprit: eigendecomposition failed");
  const CMatrix signal = es.eigenvectors().rightCols(p);
  const CMatrix e1 = signal.topRows(n - 1);
  const CMatrix e2 = signal.bottomRows(n - 1);
  const CMatrix psi = e1.completeOrthogonalDecomposition().solve(e2);
  Eigen::ComplexEigenSolver<CMatrix> ces(psi, false);
  if (ces.info() != Eigen::Success) throw NumericalError("esprit: rotation eigenvalues failed");

  DoaEstimates out;
  for (Eigen::Index i = 0; i < p; ++i) out.thetas_deg.push_back(detail::phase_to_angle(std::arg(ces.eigenvalues()(i)), out.clamped));
  std::sort(out.thetas_deg.begin(), out.thetas_deg.end());
  return out;
}

struct MusicResult {
  std::vector<double> grid_deg;
  std::vector<double> spectrum;
  DoaEstimates estimates;
  bool shortfall = false;  // fewer than p local maxima
};

/// MUSIC pseudo-spectrum 1 / ||E_n^H b(theta)||^2 on the reduced cumulant
/// matrix; the p highest local maxima are returned.
inline MusicResult foc_music(const RcFocMatrix& r4, int p, double grid_step_deg = 0.01) {
  const Eigen::Index dim = r4.data.rows();
  if (!(grid_step_deg > 0.0)) throw std::invalid_argument("foc_music: grid step must be positive");
  if (p < 0 || p >= dim) throw std::invalid_argument("foc_music: need 0 <= p < dim(R4)");
  const int n_aperture = static_cast<int>((dim + 1) / 2);
  Eigen::SelfAdjointEigenSolver<CMatrix> es((r4.data + r4.data.adjoint()) * 0.5);
  if (es.info() != Eigen::Success) throw NumericalError("foc_music: eigendecomposition failed");
  const CMatrix noise = es.eigenvectors().leftCols(dim - p);

  MusicResult res;
  for (long k = 1;; ++k) {
    const double theta = -90.0 + static_cast<double>(k) * grid_step_deg;
    if (theta >= 90.0) break;
    const double proj = (noise.adjoint() * coarray_steering(n_aperture, theta)).squaredNorm();
    res.grid_deg.push_back(theta);
    res.spectrum.push_back(1.0 / std::max(proj, 1e-300));
  }

  std::vector<std::size_t> peaks;
  const auto& sp = res.spectrum;
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const bool left_ok = i == 0 || sp[i] >= sp[i - 1];
    const bool right_ok = i + 1 == sp.size() || sp[i] > sp[i + 1];
    if (left_ok && right_ok && sp.size() > 1) peaks.push_back(i);
  }
  std::sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return sp[a] > sp[b]; });
  if (static_cast<int>(peaks.size()) < p) res.shortfall = true;
  peaks.resize(std::min<std::size_t>(peaks.size(), static_cast<std::size_t>(p)));
  for (std::size_t i : peaks) res.estimates.thetas_deg.push_back(res.grid_deg[i]);
  std::sort(res.estimates.thetas_deg.begin(), res.estimates.thetas_deg.end());
  return res;
}

/// Signed errors after sorted-order matching; empty if the counts differ.
inline std::vector<double> matched_errors(std::vector<double> truth, std::vector<double> est) {
  if (truth.size() != est.size()) return {};
  std::sort(truth.begin(), truth.end());
  std::sort(est.begin(), est.end());
  std::vector<double> err(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) err[i] = est[i] - truth[i];
  return err;
}

}  // namespace focanm

#pragma once

#include <array>
#include <optional>
#include <string>

#include <Eigen/Eigenvalues>

#include "focanm/chi_square.hpp"
#include "focanm/cumulants.hpp"

namespace focanm {

/// Dense W mapping vec(Delta C4) (column-major, M^4 entries) to the error of
/// the non-redundant vector. Each C4 entry lands on exactly one virtual lag.
inline CMatrix w_matrix(const ReductionOperators& ops) {
  const int p = ops.pair_dim();
  const int l = ops.coarray_dim();
  CMatrix w = CMatrix::Zero(ops.virtual_dim(), static_cast<Eigen::Index>(p) * p);
  for (int c = 0; c < p; ++c) {
    const int j = ops.pair_lag[static_cast<std::size_t>(c)];
    for (int r = 0; r < p; ++r) {
      const int i = ops.pair_lag[static_cast<std::size_t>(r)];
      const int m = ops.virtual_lag[static_cast<std::size_t>(j * l + i)];
      w(m, static_cast<Eigen::Index>(c) * p + r) =
          1.0 / (ops.pair_count(i) * ops.pair_count(j) * ops.virtual_count(m));
    }
  }
  return w;
}

inline CMatrix w_matrix(int n_aperture, const std::optional<ArrayGeometry>& geom = std::nullopt) {
  return w_matrix(reduction_operators(n_aperture, geom));
}

enum class CovarianceMode {
  influence,   // per-snapshot delta-method influence vectors
  segment,     // spread of K non-overlapping segment estimates
  asymptotic,  // materialized moment formula for V, then W V W^H (small M only)
};

inline const char* to_string(CovarianceMode mode) {
  switch (mode) {
    case CovarianceMode::influence: return "influence";
    case CovarianceMode::segment: return "segment";
    case CovarianceMode::asymptotic: return "asymptotic";
  }
  return "?";
}

inline CovarianceMode parse_covariance_mode(const std::string& s) {
  if (s == "influence") return CovarianceMode::influence;
  if (s == "segment") return CovarianceMode::segment;
  if (s == "asymptotic") return CovarianceMode::asymptotic;
  throw std::invalid_argument("unknown covariance estimator '" + s + "' (influence|segment|asymptotic)");
}

/// Vectors whose scaled outer-product sum estimates cov(epsilon).
struct ErrorSamples {
  CMatrix vectors;     // (4N-3) x count
  double scale = 1.0;  // Sigma = scale * vectors * vectors^H
  Eigen::Index j_total = 0;

  Eigen::Index count() const { return vectors.cols(); }
};

/// One epsilon_k = z(segment k) - z(all snapshots) per segment.
/// Sigma = sum eps eps^H / ((K - 1) K).
inline ErrorSamples segment_error_samples(const CMatrix& y, const ReductionOperators& ops, int segments) {
  if (segments < 8) throw std::invalid_argument("segment covariance needs at least 8 segments");
  const Eigen::Index j = y.cols();
  if (j < 2 * segments) throw std::invalid_argument("segment covariance: too few snapshots for the segment count");
  const CVector z_full = smv(rc_foc(sample_c4(y), ops), ops).z;
  ErrorSamples out;
  out.vectors.resize(ops.virtual_dim(), segments);
  out.j_total = j;
  for (int k = 0; k < segments; ++k) {
    const Eigen::Index begin = j * k / segments;
    const Eigen::Index end = j * (k + 1) / segments;
    const CMatrix seg = y.middleCols(begin, end - begin);
    out.vectors.col(k) = smv(rc_foc(sample_c4(seg), ops), ops).z - z_full;
  }
  out.scale = 1.0 / (static_cast<double>(segments - 1) * segments);
  return out;
}

/// psi_t = W vec(IF_t), where IF_t is the first-order influence of snapshot t
/// on the C4 estimate:
///   IF_t = (v v^H - M4) - (v - m) m^H - m (v - m)^H
///          - conj(R_t - R) (x) R - conj(R) (x) (R_t - R),
/// v = vec(y_t y_t^H), m = vec(R). Sigma = sum psi psi^H / J^2.
inline ErrorSamples influence_error_samples(const CMatrix& y, const ReductionOperators& ops) {
  const Eigen::Index m = y.rows();
  const Eigen::Index j = y.cols();
  if (j < 2) throw std::invalid_argument("influence covariance needs at least 2 snapshots");
  if (m * m != ops.pair_dim()) throw std::invalid_argument("influence covariance: snapshot rows do not match operators");
  const SampleMoments mom = sample_moments(y);
  const CMatrix w = w_matrix(ops);
  const Eigen::Index p = m * m;
  const CMatrix r_conj = mom.r.conjugate();

  ErrorSamples out;
  out.vectors.resize(ops.virtual_dim(), j);
  out.j_total = j;
  constexpr Eigen::Index kBlock = 512;
  CMatrix infl(p * p, std::min(kBlock, j));
  CVector v(p);
  for (Eigen::Index start = 0; start < j; start += kBlock) {
    const Eigen::Index len = std::min(kBlock, j - start);
    for (Eigen::Index t = 0; t < len; ++t) {
      const auto col = y.col(start + t);
      for (Eigen::Index b = 0; b < m; ++b) v.segment(b * m, m) = col * std::conj(col(b));
      const CVector dv = v - mom.mean_v;
      const CMatrix dr = Eigen::Map<const CMatrix>(dv.data(), m, m);
      CMatrix f = v * v.adjoint() - mom.m4 - dv * mom.mean_v.adjoint() - mom.mean_v * dv.adjoint() -
                  kron(dr.conjugate(), mom.r) - kron(r_conj, dr);
      infl.col(t) = Eigen::Map<const CVector>(f.data(), p * p);
    }
    out.vectors.middleCols(start, len).noalias() = w * infl.leftCols(len);
  }
  out.scale = 1.0 / (static_cast<double>(j) * static_cast<double>(j));
  return out;
}

/// V assembled entry by entry from moment covariances (i.i.d. snapshots, so
/// only the zero-lag term of each Q survives):
///   Q44(tau; rho), Q42(tau; pair), Q22(pair; pair')
/// combined with second moments over the two Gaussian pairings of each
/// index quadruple tau = (a, b*, c*, d): (a b*)(c* d) and (a c*)(b* d).
/// Returns V (M^4 x M^4, already divided by J).
inline CMatrix asymptotic_v(const CMatrix& y) {
  const Eigen::Index m = y.rows();
  const Eigen::Index j = y.cols();
  const Eigen::Index p = m * m;
  const Eigen::Index q = p * p;
  if (m > 4) throw std::invalid_argument("asymptotic covariance is an oracle for M <= 4 only");
  const double inv_j = 1.0 / static_cast<double>(j);

  // pair (x, w) -> y_x conj(y_w), index x + w*m
  auto pair_index = [m](Eigen::Index x, Eigen::Index w) { return x + w * m; };
  CMatrix g(p, j);
  for (Eigen::Index t = 0; t < j; ++t) {
    for (Eigen::Index w = 0; w < m; ++w) {
      for (Eigen::Index x = 0; x < m; ++x) g(pair_index(x, w), t) = y(x, t) * std::conj(y(w, t));
    }
  }
  const CVector g_mean = g.rowwise().mean();
  const CMatrix gc = g.colwise() - g_mean;

  // quadruple tau -> (a, b, c, d); C4 entry (row pos b*m+a, col pos d*m+c), vec index col*p + row
  struct Quad { Eigen::Index a, b, c, d; };
  std::vector<Quad> quads(static_cast<std::size_t>(q));
  CMatrix f(q, j);
  for (Eigen::Index d = 0; d < m; ++d)
    for (Eigen::Index c = 0; c < m; ++c)
      for (Eigen::Index b = 0; b < m; ++b)
        for (Eigen::Index a = 0; a < m; ++a) {
          const Eigen::Index idx = (d * m + c) * p + (b * m + a);
          quads[static_cast<std::size_t>(idx)] = {a, b, c, d};
          f.row(idx) = g.row(pair_index(a, b)).cwiseProduct(g.row(pair_index(d, c)));
        }
  const CVector f_mean = f.rowwise().mean();
  const CMatrix fc = f.colwise() - f_mean;

  const CMatrix q44 = fc * fc.adjoint() * inv_j;
  const CMatrix q42 = fc * gc.adjoint() * inv_j;
  const CMatrix q22 = gc * gc.adjoint() * inv_j;

  // pairings[v] = {first pair, second pair}
  auto pairings = [&](const Quad& t) {
    return std::array<std::array<Eigen::Index, 2>, 2>{{
        {pair_index(t.a, t.b), pair_index(t.d, t.c)},
        {pair_index(t.a, t.c), pair_index(t.d, t.b)},
    }};
  };

  CMatrix v(q, q);
  for (Eigen::Index rho = 0; rho < q; ++rho) {
    const auto pr = pairings(quads[static_cast<std::size_t>(rho)]);
    for (Eigen::Index tau = 0; tau < q; ++tau) {
      const auto pt = pairings(quads[static_cast<std::size_t>(tau)]);
      cdouble acc = q44(tau, rho);
      for (const auto& pp : pr) {
        acc -= q42(tau, pp[0]) * std::conj(g_mean(pp[1])) + q42(tau, pp[1]) * std::conj(g_mean(pp[0]));
      }
      for (const auto& pp : pt) {
        acc -= std::conj(q42(rho, pp[0])) * g_mean(pp[1]) + std::conj(q42(rho, pp[1])) * g_mean(pp[0]);
      }
      for (const auto& a : pt) {
        for (const auto& b : pr) {
          acc += q22(a[0], b[0]) * g_mean(a[1]) * std::conj(g_mean(b[1]));
          acc += q22(a[1], b[0]) * g_mean(a[0]) * std::conj(g_mean(b[1]));
          acc += q22(a[0], b[1]) * g_mean(a[1]) * std::conj(g_mean(b[0]));
          acc += q22(a[1], b[1]) * g_mean(a[0]) * std::conj(g_mean(b[0]));
        }
      }
      v(tau, rho) = acc * inv_j;
    }
  }
  return v;
}

struct CovarianceOptions {
  CovarianceMode mode = CovarianceMode::influence;
  int segments = 10;
};

/// Estimate of Sigma = cov(epsilon) = W V W^H.
inline CMatrix error_covariance(const ErrorSamples& samples) {
  CMatrix s = samples.scale * (samples.vectors * samples.vectors.adjoint());
  return (s + s.adjoint()) * 0.5;
}

inline CMatrix error_covariance(const SnapshotMatrix& y, const ReductionOperators& ops, const CovarianceOptions& opt = {}) {
  switch (opt.mode) {
    case CovarianceMode::segment: return error_covariance(segment_error_samples(y.data, ops, opt.segments));
    case CovarianceMode::influence: return error_covariance(influence_error_samples(y.data, ops));
    case CovarianceMode::asymptotic: {
      const CMatrix w = w_matrix(ops);
      CMatrix s = w * asymptotic_v(y.data) * w.adjoint();
      return (s + s.adjoint()) * 0.5;
    }
  }
  throw std::logic_error("error_covariance: bad mode");
}

/// Sigma, its ridge-regularized inverse square root, and the chi-square
/// threshold on ||Sigma^{-1/2} epsilon||^2.
struct WhiteningModel {
  CMatrix sigma;
  CMatrix inv_sqrt;
  CMatrix eigvecs;      // eigenvectors of sigma
  RVector metric_eigs;  // eigenvalues of Sigma^{-1} (ridge-adjusted), aligned with eigvecs
  double eta = 0.0;
  int dof = 0;
  double delta = 0.0;
  int clipped_eigenvalues = 0;  // negative eigenvalues of sigma set to 0
  double ridge = 0.0;

  Eigen::Index dim() const { return sigma.rows(); }

  /// ||Sigma^{-1/2} e||^2
  double mahalanobis2(const CVector& e) const { return (inv_sqrt * e).squaredNorm(); }
};

inline WhiteningModel whitener(const CMatrix& sigma_in, double ridge_rel = 1e-8) {
  if (sigma_in.rows() != sigma_in.cols() || sigma_in.rows() == 0) throw std::invalid_argument("whitener: sigma must be square");
  if (!(ridge_rel >= 0.0)) throw std::invalid_argument("whitener: ridge must be non-negative");
  WhiteningModel wm;
  wm.sigma = (sigma_in + sigma_in.adjoint()) * 0.5;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(wm.sigma);
  if (es.info() != Eigen::Success) throw NumericalError("whitener: eigendecomposition failed");
  RVector ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  if (!(top > 0.0)) throw NumericalError("whitener: covariance is zero, nothing to whiten");
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < 0.0) {
      ev(i) = 0.0;
      ++wm.clipped_eigenvalues;
    }
  }
  wm.ridge = ridge_rel * top;
  wm.eigvecs = es.eigenvectors();
  wm.metric_eigs = (ev.array() + wm.ridge).inverse();
  wm.inv_sqrt = wm.eigvecs * wm.metric_eigs.cwiseSqrt().cast<cdouble>().asDiagonal() * wm.eigvecs.adjoint();
  return wm;
}

/// Identity metric: ||z - x||^2 <= eta. Used by the fixed-tolerance baseline
/// and by noiseless runs.
inline WhiteningModel identity_whitening(Eigen::Index dim, double eta) {
  if (!(eta >= 0.0)) throw std::invalid_argument("identity_whitening: eta must be non-negative");
  WhiteningModel wm;
  wm.sigma = CMatrix::Identity(dim, dim);
  wm.inv_sqrt = wm.sigma;
  wm.eigvecs = wm.sigma;
  wm.metric_eigs = RVector::Ones(dim);
  wm.eta = eta;
  wm.dof = static_cast<int>(dim);
  return wm;
}

struct ErrorToleranceOptions {
  double delta = 0.001;
  std::optional<int> dof_override;
  double ridge_rel = 1e-8;
  CovarianceOptions covariance;
};

/// Full error-tolerance model for one data set: Sigma estimate, whitener and
/// eta = chi2 inverse CDF at 1 - delta with 4N-3 degrees of freedom.
inline WhiteningModel error_tolerance_model(const SnapshotMatrix& y, const ReductionOperators& ops,
                                            const ErrorToleranceOptions& opt = {}) {
  WhiteningModel wm = whitener(error_covariance(y, ops, opt.covariance), opt.ridge_rel);
  wm.dof = opt.dof_override.value_or(ops.virtual_dim());
  wm.delta = opt.delta;
  wm.eta = chi2_threshold(opt.delta, wm.dof);
  return wm;
}

}  // namespace focanm

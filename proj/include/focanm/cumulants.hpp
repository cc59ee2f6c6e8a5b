#pragma once

#include <optional>
#include <vector>

#include "focanm/array_geometry.hpp"
#include "focanm/signal_sim.hpp"

namespace focanm {

// Conventions used throughout:
//  * vec() is column-major. For a snapshot y the lag vector is
//    v = vec(y y^H) = conj(y) (x) y, so position b*M + a holds y_a conj(y_b).
//  * That entry belongs to coarray lag omega_a - omega_b, stored at column
//    lag + N - 1 of the (2N-1)-wide reduced space. With this ordering the
//    block operator Hbar_n = [0_{N x (N-n)}, I_N, 0_{N x (n-1)}] maps the
//    population matrix onto B C_S B^H with b(theta) = coarray_steering().
//  * The reduced matrix R4 (2N-1 square) is vectorized the same way and
//    entry (i, j) lands on virtual lag i - j, column i - j + 2N - 2.

enum class CumulantKind { population, sample };

struct CumulantMatrix {
  CMatrix data;  // M^2 x M^2 Hermitian
  CumulantKind kind = CumulantKind::population;
  Eigen::Index j_snapshots = 0;
};

struct RcFocMatrix {
  CMatrix data;  // (2N-1) x (2N-1)
};

struct NonRedundantVector {
  CVector z;  // length 4N-3, virtual lags -(2N-2)..(2N-2)
  int n_aperture = 0;
};

/// Lag-averaging operators stored as index maps.
///   pair_lag[pos]  : coarray column of the lag-vector position pos (this is
///                    Hbar for a ULA, (Gamma (x) Gamma) Hbar for an SLA)
///   pair_count[l]  : diagonal of Gbar (ULA) or G_Omega (SLA)
///   virtual_lag[q] : column of H hit by position q of vec(R4)
///   virtual_count  : diagonal of G
struct ReductionOperators {
  int n_aperture = 0;
  int m_elements = 0;
  std::vector<int> pair_lag;
  RVector pair_count;
  std::vector<int> virtual_lag;
  RVector virtual_count;
  RVector gbar;  // full-aperture {1..N..1}
  bool sparse = false;

  int coarray_dim() const { return 2 * n_aperture - 1; }
  int virtual_dim() const { return 4 * n_aperture - 3; }
  int pair_dim() const { return m_elements * m_elements; }
};

// Row-to-column map of the block operator Hbar_n = [0_{n x (n-k)}, I_n, 0_{n x (k-1)}]
// stacked over k = 1..n: row (k-1)*n + r has its one at column n - k + r.
inline std::vector<int> stacked_shift_map(int n) {
  std::vector<int> map(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) {
    for (int r = 0; r < n; ++r) map[static_cast<std::size_t>((k - 1) * n + r)] = n - k + r;
  }
  return map;
}

inline ReductionOperators reduction_operators(int n_aperture, const std::optional<ArrayGeometry>& geom = std::nullopt) {
  if (n_aperture < 1) throw std::invalid_argument("reduction_operators: N must be >= 1");
  if (geom && geom->n_aperture() != n_aperture) {
    throw std::invalid_argument("reduction_operators: geometry aperture does not match N");
  }
  ReductionOperators ops;
  ops.n_aperture = n_aperture;
  const int n = n_aperture;
  const int l = 2 * n - 1;

  ops.gbar = RVector::Zero(l);
  for (int c : stacked_shift_map(n)) ops.gbar(c) += 1.0;

  if (geom && !geom->is_uniform()) {
    ops.sparse = true;
    const int m = geom->m_elements();
    ops.m_elements = m;
    ops.pair_lag.resize(static_cast<std::size_t>(m * m));
    for (int b = 0; b < m; ++b) {
      for (int a = 0; a < m; ++a) {
        const int lag = geom->omega()[static_cast<std::size_t>(a)] - geom->omega()[static_cast<std::size_t>(b)];
        ops.pair_lag[static_cast<std::size_t>(b * m + a)] = lag + n - 1;
      }
    }
    ops.pair_count = RVector::Zero(l);
    for (int c : ops.pair_lag) ops.pair_count(c) += 1.0;
    for (int c = 0; c < l; ++c) {
      if (ops.pair_count(c) == 0.0) {
        throw CoarrayHoleError("difference coarray of {" + geom->to_string() + "} misses lag " +
                               std::to_string(c - (n - 1)));
      }
    }
  } else {
    ops.m_elements = n;
    ops.pair_lag = stacked_shift_map(n);
    ops.pair_count = ops.gbar;
  }

  ops.virtual_lag = stacked_shift_map(l);
  ops.virtual_count = RVector::Zero(4 * n - 3);
  for (int c : ops.virtual_lag) ops.virtual_count(c) += 1.0;
  return ops;
}

inline ReductionOperators reduction_operators(const ArrayGeometry& geom) {
  return reduction_operators(geom.n_aperture(), geom);
}

/// Dense Hbar (or (Gamma (x) Gamma) Hbar) as a binary matrix; test/debug path.
inline RMatrix dense_pair_operator(const ReductionOperators& ops) {
  RMatrix h = RMatrix::Zero(ops.pair_dim(), ops.coarray_dim());
  for (std::size_t r = 0; r < ops.pair_lag.size(); ++r) h(static_cast<Eigen::Index>(r), ops.pair_lag[r]) = 1.0;
  return h;
}

/// Dense H ((2N-1)^2 x (4N-3)).
inline RMatrix dense_virtual_operator(const ReductionOperators& ops) {
  RMatrix h = RMatrix::Zero(ops.coarray_dim() * ops.coarray_dim(), ops.virtual_dim());
  for (std::size_t r = 0; r < ops.virtual_lag.size(); ++r) h(static_cast<Eigen::Index>(r), ops.virtual_lag[r]) = 1.0;
  return h;
}

/// C4 = Bbar diag(gammas) Bbar^H with Bbar columns vec(a_p a_p^H).
inline CumulantMatrix population_c4(const CMatrix& manifold, const RVector& gammas) {
  if (gammas.size() != manifold.cols()) throw std::invalid_argument("population_c4: gammas/manifold column mismatch");
  const Eigen::Index m = manifold.rows();
  CMatrix bbar(m * m, manifold.cols());
  for (Eigen::Index p = 0; p < manifold.cols(); ++p) {
    const CVector& a = manifold.col(p);
    for (Eigen::Index b = 0; b < m; ++b) bbar.col(p).segment(b * m, m) = a * std::conj(a(b));
  }
  CumulantMatrix out;
  out.data = bbar * gammas.cast<cdouble>().asDiagonal() * bbar.adjoint();
  out.kind = CumulantKind::population;
  return out;
}

/// Second-order pieces of the sample estimate, kept for error analysis.
struct SampleMoments {
  CVector mean_v;  // vec(R)
  CMatrix r;       // (1/J) sum y y^H
  CMatrix m4;      // (1/J) sum v v^H
  Eigen::Index j = 0;
};

inline SampleMoments sample_moments(const CMatrix& y) {
  const Eigen::Index m = y.rows();
  const Eigen::Index j = y.cols();
  SampleMoments mom;
  mom.j = j;
  mom.mean_v = CVector::Zero(m * m);
  mom.m4 = CMatrix::Zero(m * m, m * m);
  constexpr Eigen::Index kBlock = 4096;
  CMatrix v(m * m, std::min(kBlock, j));
  for (Eigen::Index start = 0; start < j; start += kBlock) {
    const Eigen::Index len = std::min(kBlock, j - start);
    for (Eigen::Index t = 0; t < len; ++t) {
      const auto col = y.col(start + t);
      for (Eigen::Index b = 0; b < m; ++b) v.col(t).segment(b * m, m) = col * std::conj(col(b));
    }
    const auto blk = v.leftCols(len);
    mom.m4.noalias() += blk * blk.adjoint();
    mom.mean_v += blk.rowwise().sum();
  }
  const double inv_j = 1.0 / static_cast<double>(j);
  mom.m4 *= inv_j;
  mom.mean_v *= inv_j;
  mom.r = Eigen::Map<const CMatrix>(mom.mean_v.data(), m, m);
  return mom;
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index k = 0; k < a.cols(); ++k) out.block(i * b.rows(), k * b.cols(), b.rows(), b.cols()) = a(i, k) * b;
  }
  return out;
}

inline CMatrix c4_from_moments(const SampleMoments& mom) {
  CMatrix c4 = mom.m4 - mom.mean_v * mom.mean_v.adjoint() - kron(mom.r.conjugate(), mom.r);
  return (c4 + c4.adjoint()) * 0.5;
}

/// Sample estimate of C4: every expectation replaced by a 1/J snapshot mean,
/// then Hermitian-symmetrized.
inline CumulantMatrix sample_c4(const CMatrix& y) {
  if (y.cols() < 2) throw std::invalid_argument("sample_c4: need at least 2 snapshots");
  CumulantMatrix out;
  out.data = c4_from_moments(sample_moments(y));
  out.kind = CumulantKind::sample;
  out.j_snapshots = y.cols();
  return out;
}

inline CumulantMatrix sample_c4(const SnapshotMatrix& y) { return sample_c4(y.data); }

/// R4 = Gbar^{-1} Hbar^T C4 Hbar Gbar^{-1}; for an SLA Hbar becomes
/// (Gamma (x) Gamma) Hbar and Gbar becomes G_Omega.
inline RcFocMatrix rc_foc(const CMatrix& c4, const ReductionOperators& ops) {
  if (c4.rows() != ops.pair_dim() || c4.cols() != ops.pair_dim()) {
    throw std::invalid_argument("rc_foc: cumulant matrix size does not match the reduction operators");
  }
  const int l = ops.coarray_dim();
  CMatrix r = CMatrix::Zero(l, l);
  for (Eigen::Index c = 0; c < c4.cols(); ++c) {
    const int jc = ops.pair_lag[static_cast<std::size_t>(c)];
    for (Eigen::Index rr = 0; rr < c4.rows(); ++rr) r(ops.pair_lag[static_cast<std::size_t>(rr)], jc) += c4(rr, c);
  }
  for (int j = 0; j < l; ++j) {
    for (int i = 0; i < l; ++i) r(i, j) /= ops.pair_count(i) * ops.pair_count(j);
  }
  return RcFocMatrix{std::move(r)};
}

inline RcFocMatrix rc_foc(const CumulantMatrix& c4, const ReductionOperators& ops) { return rc_foc(c4.data, ops); }

/// z = G^{-1} H^T vec(R4): the mean of R4 along each of its diagonals.
inline NonRedundantVector smv(const RcFocMatrix& r4, const ReductionOperators& ops) {
  const int l = ops.coarray_dim();
  if (r4.data.rows() != l || r4.data.cols() != l) throw std::invalid_argument("smv: R4 size does not match the operators");
  CVector z = CVector::Zero(ops.virtual_dim());
  for (int j = 0; j < l; ++j) {
    for (int i = 0; i < l; ++i) z(ops.virtual_lag[static_cast<std::size_t>(j * l + i)]) += r4.data(i, j);
  }
  z.array() /= ops.virtual_count.array().cast<cdouble>();
  return NonRedundantVector{std::move(z), ops.n_aperture};
}

/// Sample-path measurement: snapshots -> C4 -> R4 -> z.
inline NonRedundantVector measurement_vector(const SnapshotMatrix& y, const ReductionOperators& ops) {
  return smv(rc_foc(sample_c4(y), ops), ops);
}

/// Noiseless oracle: sum_p gamma_p d(theta_p).
inline CVector population_smv(int n_aperture, const std::vector<double>& thetas_deg, const RVector& gammas) {
  CVector z = CVector::Zero(4 * n_aperture - 3);
  for (std::size_t p = 0; p < thetas_deg.size(); ++p) z += gammas(static_cast<Eigen::Index>(p)) * virtual_steering(n_aperture, thetas_deg[p]);
  return z;
}

}  // namespace focanm

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "focanm/array_geometry.hpp"

namespace focanm {

struct SourceConfig {
  std::vector<double> thetas_deg;
  double sigma_s2 = 1.0;

  int p_sources() const { return static_cast<int>(thetas_deg.size()); }
};

struct NoiseConfig {
  // Filter denominator a with a[0] = 1: sum_i a[i] n[k-i] = w[k].
  std::vector<double> ar_coeffs{1.0, -1.0, 0.8};
  double sigma_n2 = 1.0;
  int burn_in = 50;
};

struct SnapshotMatrix {
  CMatrix data;  // M x J
  ArrayGeometry geom;

  Eigen::Index j_snapshots() const { return data.cols(); }
};

/// splitmix64 finalizer; used to derive independent substream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  return mix_seed(mix_seed(base) ^ (tag * 0xd1b54a32d192ed03ULL));
}

inline double noise_power_from_snr(double snr_db, double sigma_s2 = 1.0) {
  return sigma_s2 * std::pow(10.0, -snr_db / 10.0);
}

namespace detail {

// Circular complex Gaussian with E|w|^2 = variance.
inline cdouble circular_gaussian(std::mt19937_64& rng, std::normal_distribution<double>& unit, double variance) {
  const double scale = std::sqrt(variance / 2.0);
  const double re = unit(rng);
  const double im = unit(rng);
  return {scale * re, scale * im};
}

}  // namespace detail

/// s_p(t) = f_p(t) e_p(t) with f real N(0,1) and e circular N(0, sigma_s2).
/// E|s|^2 = sigma_s2 and cum(s, s*, s*, s) = 4 sigma_s2^2.
inline CMatrix gen_sources(const SourceConfig& cfg, Eigen::Index j, std::uint64_t seed) {
  if (j < 1) throw std::invalid_argument("gen_sources: J must be >= 1");
  if (cfg.p_sources() < 1) throw std::invalid_argument("gen_sources: need at least one source");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  CMatrix s(cfg.p_sources(), j);
  for (Eigen::Index t = 0; t < j; ++t) {
    for (int p = 0; p < cfg.p_sources(); ++p) {
      const double f = unit(rng);
      s(p, t) = f * detail::circular_gaussian(rng, unit, cfg.sigma_s2);
    }
  }
  return s;
}

inline void validate_ar(const std::vector<double>& a) {
  if (a.empty() || a.front() != 1.0) throw std::invalid_argument("AR coefficients must start with 1");
  const auto order = static_cast<Eigen::Index>(a.size()) - 1;
  if (order == 0) return;
  // Companion matrix of z^p + a1 z^{p-1} + ... + ap.
  RMatrix comp = RMatrix::Zero(order, order);
  for (Eigen::Index i = 0; i < order; ++i) comp(0, i) = -a[static_cast<std::size_t>(i + 1)];
  for (Eigen::Index i = 1; i < order; ++i) comp(i, i - 1) = 1.0;
  const Eigen::VectorXcd roots = comp.eigenvalues();
  for (Eigen::Index i = 0; i < roots.size(); ++i) {
    if (std::abs(roots(i)) >= 1.0) throw std::invalid_argument("AR filter is unstable (pole on or outside the unit circle)");
  }
}

/// Stationary output variance of the AR filter driven by unit-variance white input.
inline double ar_power_gain(const std::vector<double>& a) {
  validate_ar(a);
  const std::size_t order = a.size() - 1;
  std::vector<double> h(order, 0.0);  // most recent first
  double energy = 0.0;
  double impulse = 1.0;
  for (int k = 0; k < 200000; ++k) {
    double y = impulse;
    for (std::size_t i = 0; i < order; ++i) y -= a[i + 1] * h[i];
    impulse = 0.0;
    energy += y * y;
    for (std::size_t i = order; i-- > 1;) h[i] = h[i - 1];
    if (order) h[0] = y;
    if (k > 16 && y * y < 1e-20 * energy) break;
  }
  return energy;
}

/// Spatially colored Gaussian noise: the AR recursion runs across the sensor
/// index of the full N-slot aperture (after burn-in), then Gamma_Omega picks
/// the physical sensors. Scaled so the per-sensor power is sigma_n2.
inline CMatrix gen_colored_noise(const ArrayGeometry& geom, Eigen::Index j, const NoiseConfig& cfg, std::uint64_t seed) {
  if (j < 1) throw std::invalid_argument("gen_colored_noise: J must be >= 1");
  if (cfg.sigma_n2 < 0.0) throw std::invalid_argument("gen_colored_noise: negative noise power");
  const double gain = ar_power_gain(cfg.ar_coeffs);
  const double scale = std::sqrt(cfg.sigma_n2 / gain);
  const int n = geom.n_aperture();
  const std::size_t order = cfg.ar_coeffs.size() - 1;
  const int total = cfg.burn_in + n;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<cdouble> chain(static_cast<std::size_t>(total));
  CMatrix out(geom.m_elements(), j);
  for (Eigen::Index t = 0; t < j; ++t) {
    for (int k = 0; k < total; ++k) {
      cdouble v = detail::circular_gaussian(rng, unit, 1.0);
      for (std::size_t i = 1; i <= order && static_cast<int>(i) <= k; ++i) {
        v -= cfg.ar_coeffs[i] * chain[static_cast<std::size_t>(k) - i];
      }
      chain[static_cast<std::size_t>(k)] = v;
    }
    for (int m = 0; m < geom.m_elements(); ++m) {
      const int slot = geom.omega()[static_cast<std::size_t>(m)] - 1;
      out(m, t) = scale * chain[static_cast<std::size_t>(cfg.burn_in + slot)];
    }
  }
  return out;
}

/// Y_Omega = A_Omega S + N_Omega. Sources and noise draw from separate
/// substreams of `seed`, so the source part is geometry independent and the
/// noise part of an SLA is the restriction of the full-aperture noise.
inline SnapshotMatrix gen_snapshots(const ArrayGeometry& geom, const SourceConfig& src, const NoiseConfig& noise,
                                    Eigen::Index j, std::uint64_t seed) {
  for (double th : src.thetas_deg) require_visible_angle(th, "gen_snapshots");
  std::vector<double> sorted = src.thetas_deg;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("gen_snapshots: DOAs must be distinct");
  }
  const CMatrix s = gen_sources(src, j, derive_seed(seed, 1));
  CMatrix y = manifold(geom, src.thetas_deg) * s;
  if (noise.sigma_n2 > 0.0) y += gen_colored_noise(geom, j, noise, derive_seed(seed, 2));
  return SnapshotMatrix{std::move(y), geom};
}

}  // namespace focanm

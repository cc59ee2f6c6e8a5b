#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "focanm/types.hpp"

namespace focanm {

/// Linear array on a half-wavelength grid. Antenna positions are the 1-based
/// slot indices in `omega`; the aperture spans slots 1..N.
class ArrayGeometry {
 public:
  const std::vector<int>& omega() const { return omega_; }
  int n_aperture() const { return omega_.back(); }
  int m_elements() const { return static_cast<int>(omega_.size()); }
  bool is_uniform() const { return m_elements() == n_aperture(); }

  /// Comma-separated 1-based indices, e.g. "1,2,5,7".
  std::string to_string() const {
    std::string out;
    for (std::size_t i = 0; i < omega_.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(omega_[i]);
    }
    return out;
  }

  friend bool operator==(const ArrayGeometry&, const ArrayGeometry&) = default;

 private:
  explicit ArrayGeometry(std::vector<int> omega) : omega_(std::move(omega)) {}
  friend ArrayGeometry make_geometry(std::vector<int> indices);

  std::vector<int> omega_;
};

inline ArrayGeometry make_geometry(std::vector<int> indices) {
  if (indices.empty()) throw std::invalid_argument("make_geometry: empty index set");
  std::sort(indices.begin(), indices.end());
  if (indices.front() < 1) throw std::invalid_argument("make_geometry: indices must be positive");
  if (std::adjacent_find(indices.begin(), indices.end()) != indices.end()) {
    throw std::invalid_argument("make_geometry: duplicate antenna index");
  }
  if (indices.front() != 1) {
    throw std::invalid_argument("make_geometry: the first antenna must sit at index 1");
  }
  return ArrayGeometry(std::move(indices));
}

inline ArrayGeometry make_ula(int n) {
  if (n < 1) throw std::invalid_argument("make_ula: N must be >= 1");
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i + 1;
  return make_geometry(std::move(idx));
}

/// Parses "1,2,5,7" (whitespace tolerated).
inline ArrayGeometry parse_geometry(std::string_view text) {
  std::vector<int> idx;
  std::string token;
  std::stringstream ss{std::string(text)};
  while (std::getline(ss, token, ',')) {
    auto b = token.find_first_not_of(" \t");
    auto e = token.find_last_not_of(" \t");
    if (b == std::string::npos) throw std::invalid_argument("parse_geometry: empty entry in '" + std::string(text) + "'");
    token = token.substr(b, e - b + 1);
    int value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw std::invalid_argument("parse_geometry: not an integer: '" + token + "'");
    }
    idx.push_back(value);
  }
  return make_geometry(std::move(idx));
}

/// Gamma_Omega: M x N with row i selecting column omega[i].
inline RMatrix selection_matrix(const ArrayGeometry& geom) {
  RMatrix gamma = RMatrix::Zero(geom.m_elements(), geom.n_aperture());
  for (int i = 0; i < geom.m_elements(); ++i) gamma(i, geom.omega()[static_cast<std::size_t>(i)] - 1) = 1.0;
  return gamma;
}

/// Physical steering vector; element i is exp(j*pi*(omega_i - 1)*sin(theta)).
inline CVector steering_vector(const ArrayGeometry& geom, double theta_deg) {
  require_visible_angle(theta_deg, "steering_vector");
  const double s = std::sin(deg_to_rad(theta_deg));
  CVector a(geom.m_elements());
  for (int i = 0; i < geom.m_elements(); ++i) {
    a(i) = std::polar(1.0, kPi * (geom.omega()[static_cast<std::size_t>(i)] - 1) * s);
  }
  return a;
}

inline CMatrix manifold(const ArrayGeometry& geom, const std::vector<double>& thetas_deg) {
  CMatrix a(geom.m_elements(), static_cast<Eigen::Index>(thetas_deg.size()));
  for (std::size_t p = 0; p < thetas_deg.size(); ++p) a.col(static_cast<Eigen::Index>(p)) = steering_vector(geom, thetas_deg[p]);
  return a;
}

// Centered Vandermonde vector with lags -half..half.
inline CVector centered_steering(int half, double theta_deg) {
  require_visible_angle(theta_deg, "steering");
  const double s = std::sin(deg_to_rad(theta_deg));
  CVector v(2 * half + 1);
  for (int m = -half; m <= half; ++m) v(m + half) = std::polar(1.0, kPi * m * s);
  return v;
}

/// b(theta) of the reduced cumulant matrix, length 2N-1, lags -(N-1)..N-1.
inline CVector coarray_steering(int n_aperture, double theta_deg) {
  if (n_aperture < 1) throw std::invalid_argument("coarray_steering: N must be >= 1");
  return centered_steering(n_aperture - 1, theta_deg);
}

/// d(theta) of the non-redundant measurement, length 4N-3, lags -(2N-2)..2N-2.
inline CVector virtual_steering(int n_aperture, double theta_deg) {
  if (n_aperture < 1) throw std::invalid_argument("virtual_steering: N must be >= 1");
  return centered_steering(2 * n_aperture - 2, theta_deg);
}

}  // namespace focanm

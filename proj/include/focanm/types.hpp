#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace focanm {

using cdouble = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Raised when an SLA's difference coarray misses a lag, which makes the
/// lag-averaging operator singular.
class CoarrayHoleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative numerical routine cannot produce a usable answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Angles strictly inside the visible region.
inline void require_visible_angle(double theta_deg, const char* who) {
  if (!(std::abs(theta_deg) < 90.0)) {
    throw std::invalid_argument(std::string(who) + ": |theta| must be < 90 degrees, got " +
                                std::to_string(theta_deg));
  }
}

}  // namespace focanm

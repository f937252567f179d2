// Scalar robust functions used in scan matching: Welsch's function for
// positional residuals and the Gaussian robust function for color weights.
//
// Both are exposed as pure scalar functions so the ablation switches reduce
// to substituting identity kernels (residual = d, W = 1).

#pragma once

#include <cmath>
#include <stdexcept>

namespace carloam {

/// Width parameter of Welsch's function, in meters.
struct WelschParam {
  double nu;
  explicit WelschParam(double nu_) : nu(nu_) {
    if (!(nu > 0.0)) throw std::invalid_argument("WelschParam: nu must be > 0");
  }
};

/// Width parameter of the Gaussian robust function, in CIEDE2000 units.
struct GaussianParam {
  double sigma;
  explicit GaussianParam(double sigma_) : sigma(sigma_) {
    if (!(sigma > 0.0)) throw std::invalid_argument("GaussianParam: sigma must be > 0");
  }
};

/// psi_nu(x) = 1 - exp(-x^2 / (2 nu^2)), monotone on [0, inf), bounded by 1.
inline double welsch(double x, const WelschParam& p) {
  return 1.0 - std::exp(-(x * x) / (2.0 * p.nu * p.nu));
}

/// d/dx psi_nu(x) = (x / nu^2) exp(-x^2 / (2 nu^2)).
inline double welsch_derivative(double x, const WelschParam& p) {
  const double nu2 = p.nu * p.nu;
  return (x / nu2) * std::exp(-(x * x) / (2.0 * nu2));
}

/// rho_sigma(x) = exp(-x^2 / (2 sigma^2)), equals 1 at x = 0.
inline double gaussian_weight(double x, const GaussianParam& p) {
  return std::exp(-(x * x) / (2.0 * p.sigma * p.sigma));
}

}  // namespace carloam

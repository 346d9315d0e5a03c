#pragma once

// Power-law constitutive relations of the scaled Navier-Stokes-Korteweg
// system: pressure p = rho^gamma / gamma, capillarity function
// sigma = rho^s, viscosity mu = rho^m with m = s + 1/2.

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "nskqg/errors.hpp"

namespace nskqg {

struct Params {
  double gamma = 2.0;
  double s = 0.5;
  double m = 1.0;
  double alpha = 0.5;
  double eps = 0.2;

  /// Capillary prefactor eps^(2(alpha - 1)).
  double kappa() const { return std::pow(eps, 2.0 * (alpha - 1.0)); }
  /// mu(1); equal to one for every power law but kept explicit.
  double mu_at_one() const { return 1.0; }
};

/// Checks 0 < s <= 1, m = s + 1/2 <= (gamma + 1)/2, gamma > 1,
/// 0 < alpha < 1 and 0 < eps < 1. All violations are reported together.
inline Params validate_params(double gamma, double s, double alpha, double eps) {
  std::vector<std::string> bad;
  if (!(gamma > 1.0)) bad.push_back("gamma: must satisfy gamma > 1");
  if (!(s > 0.0 && s <= 1.0)) bad.push_back("s: must satisfy 0 < s <= 1");
  const double m = s + 0.5;
  if (!(m <= 0.5 * (gamma + 1.0))) {
    std::ostringstream os;
    os << "m: viscosity exponent m = s + 1/2 = " << m << " exceeds (gamma + 1)/2 = "
       << 0.5 * (gamma + 1.0);
    bad.push_back(os.str());
  }
  if (!(alpha > 0.0 && alpha < 1.0)) bad.push_back("alpha: must satisfy 0 < alpha < 1");
  if (!(eps > 0.0 && eps < 1.0)) bad.push_back("eps: must satisfy 0 < eps < 1");
  if (!bad.empty()) {
    std::string msg = "inadmissible parameters:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw ConfigError(msg);
  }
  return Params{gamma, s, m, alpha, eps};
}

namespace detail {

inline void require_nonnegative(double rho, const char* what) {
  if (!(rho >= 0.0)) {
    throw DomainError(std::string(what) + ": density must be >= 0 (got " +
                      std::to_string(rho) + ")");
  }
}

}  // namespace detail

inline double pressure(double rho, const Params& p) {
  detail::require_nonnegative(rho, "pressure");
  return std::pow(rho, p.gamma) / p.gamma;
}

/// h(rho) = (rho^gamma - 1 - gamma (rho - 1)) / (gamma (gamma - 1)), the
/// convex potential with h'' = rho^(gamma - 2) and h(1) = h'(1) = 0.
inline double internal_energy(double rho, const Params& p) {
  detail::require_nonnegative(rho, "internal_energy");
  const double g = p.gamma;
  const double z = rho - 1.0;
  if (std::abs(z) < 0.25) {
    // Binomial series avoids the O(z^2)-vs-O(1) cancellation near rho = 1:
    // h(1+z) = sum_{n>=2} (g-2)(g-3)...(g-n+1)/n! z^n.
    double coeff = 0.5;  // n = 2
    double zn = z * z;
    double sum = coeff * zn;
    for (int n = 3; n < 200; ++n) {
      coeff *= (g - n + 1.0) / n;
      zn *= z;
      const double term = coeff * zn;
      sum += term;
      if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  return (std::pow(rho, g) - 1.0 - g * z) / (g * (g - 1.0));
}

/// G_eps(phi_eps) = (sqrt 2 / eps) sign(phi_eps) sqrt(h(1 + eps phi_eps)),
/// so that G^2 / 2 = h(rho) / eps^2. sign(0) = 0.
inline double g_eps(double phi_eps, const Params& p) {
  const double rho = 1.0 + p.eps * phi_eps;
  if (!(rho >= 0.0)) {
    throw DomainError("g_eps: 1 + eps*phi_eps = " + std::to_string(rho) + " < 0");
  }
  if (p.gamma == 2.0) return phi_eps;  // h = (rho-1)^2/2 makes G the identity
  if (phi_eps == 0.0) return 0.0;
  const double mag = std::sqrt(2.0 * internal_energy(rho, p)) / p.eps;
  return phi_eps > 0.0 ? mag : -mag;
}

enum class Law { sigma, mu, S, dsigma, d2S };

/// sigma = rho^s, mu = rho^m, S = (s/2) rho^(2s), sigma' = s rho^(s-1),
/// S'' = s^2 (2s - 1) rho^(2s - 2).
inline double sigma_mu_S(double rho, Law which, const Params& p) {
  detail::require_nonnegative(rho, "sigma_mu_S");
  double coeff = 1.0;
  double expo = 0.0;
  switch (which) {
    case Law::sigma:
      expo = p.s;
      break;
    case Law::mu:
      expo = p.m;
      break;
    case Law::S:
      coeff = 0.5 * p.s;
      expo = 2.0 * p.s;
      break;
    case Law::dsigma:
      coeff = p.s;
      expo = p.s - 1.0;
      break;
    case Law::d2S:
      coeff = p.s * p.s * (2.0 * p.s - 1.0);
      expo = 2.0 * p.s - 2.0;
      break;
  }
  if (rho == 0.0 && expo < 0.0) {
    throw DomainError("sigma_mu_S: singular at rho = 0 (exponent " + std::to_string(expo) + ")");
  }
  if (expo == 0.0) return coeff;
  return coeff * std::pow(rho, expo);
}

}  // namespace nskqg

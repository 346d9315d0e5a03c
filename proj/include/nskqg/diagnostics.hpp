#pragma once

// Energies, dissipations, the modulated energy and the convergence norms that
// compare an NSK solution with its quasi-geostrophic limit, plus log-log rate
// fitting over eps sweeps.

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nskqg/constitutive.hpp"
#include "nskqg/errors.hpp"
#include "nskqg/nsk.hpp"
#include "nskqg/qg.hpp"
#include "nskqg/spectral.hpp"

namespace nskqg {

struct DiagnosticsRow {
  double t = 0.0;
  double mass = 0.0;
  double E_eps = 0.0;
  double D_eps = 0.0;
  double E_0 = 0.0;
  double D_0 = 0.0;
  double H_eps = 0.0;
  double visc_accum = 0.0;
  double norm_rho_gamma = 0.0;  // ||rho - 1||_{L^gamma}
  double norm_mom = 0.0;        // ||rho u - grad_perp phi||_{L^{2 gamma/(gamma+1)}}
  double norm_kinetic = 0.0;    // ||sqrt(rho)(u - grad_perp phi)||_{L^2}
  double norm_G = 0.0;          // ||G_eps(phi_eps) - phi||_{L^2}
  double norm_cap = 0.0;        // eps^(alpha-1) ||grad sigma(rho)||_{L^2}
};

struct EnergyPair {
  double energy = 0.0;
  double dissipation = 0.0;
};

/// Weight of int |grad sigma(rho)|^2 in the NSK energy. The Korteweg force
/// 2 kappa rho grad(sigma' lap sigma) does work -kappa d/dt int |grad sigma|^2,
/// so the conserved functional carries kappa, not 2 kappa.
inline double capillary_energy_coefficient(const Params& p) { return p.kappa(); }

/// E_eps = int(h(rho)/eps^2 + rho |u|^2 / 2 + kappa |grad sigma|^2),
/// D_eps = 2 int mu(rho) |D(u)|^2, with dE_eps/dt + D_eps = 0 along solutions.
inline EnergyPair energy_nsk(const NskState& st, const Params& p, const SpectralWorkspace& ws,
                             double rho_min = kDefaultRhoMin) {
  check_density(st.rho, rho_min, st.t);
  const VectorField u = st.velocity();
  const VectorField gs =
      grad(map(st.rho, [&](double r) { return sigma_mu_S(r, Law::sigma, p); }), ws);
  const SymTensorField d = sym_gradient(u, ws);
  const ScalarField d2 = frobenius_squared(d);
  const double inv_eps2 = 1.0 / (p.eps * p.eps);
  const double cap = capillary_energy_coefficient(p);
  ScalarField e(ws.n()), diss(ws.n());
  for (std::size_t q = 0; q < e.size(); ++q) {
    const double r = st.rho[q];
    e[q] = inv_eps2 * internal_energy(r, p) + 0.5 * r * (u.x[q] * u.x[q] + u.y[q] * u.y[q]) +
           cap * (gs.x[q] * gs.x[q] + gs.y[q] * gs.y[q]);
    diss[q] = 2.0 * sigma_mu_S(r, Law::mu, p) * d2[q];
  }
  return {integrate(e, ws), integrate(diss, ws)};
}

/// E_0 = int(|grad phi|^2 + phi^2)/2, D_0 = 2 mu(1) int |D(grad_perp phi)|^2.
inline EnergyPair energy_qg(const QgState& st, const Params& p, const SpectralWorkspace& ws) {
  const VectorField g = grad(st.phi, ws);
  ScalarField e = g.x * g.x + g.y * g.y + st.phi * st.phi;
  e *= 0.5;
  const ScalarField d2 = frobenius_squared(sym_gradient(perp_grad(st.phi, ws), ws));
  return {integrate(e, ws), 2.0 * p.mu_at_one() * integrate(d2, ws)};
}

/// phi_eps = (rho - 1) / eps.
inline ScalarField phi_eps(const ScalarField& rho, const Params& p) {
  return map(rho, [&](double r) { return (r - 1.0) / p.eps; });
}

/// 2 int mu(rho) |D(u) - D(grad_perp phi)|^2: the integrand in time of the
/// viscous part of the modulated energy.
inline double viscous_mismatch(const NskState& nsk, const QgState& qg, const Params& p,
                               const SpectralWorkspace& ws) {
  SymTensorField d = sym_gradient(nsk.velocity(), ws);
  d -= sym_gradient(perp_grad(qg.phi, ws), ws);
  ScalarField w = frobenius_squared(d);
  w *= map(nsk.rho, [&](double r) { return 2.0 * sigma_mu_S(r, Law::mu, p); });
  return integrate(w, ws);
}

struct ModulatedEnergyParts {
  double kinetic = 0.0;    // int rho |u - grad_perp phi|^2 / 2
  double internal = 0.0;   // int |G_eps(phi_eps) - phi|^2 / 2
  double capillary = 0.0;  // 2 kappa int |grad sigma(rho)|^2
  double viscous = 0.0;    // accumulated time integral
  double total() const { return kinetic + internal + capillary + viscous; }
};

inline ModulatedEnergyParts modulated_energy_parts(const NskState& nsk, const QgState& qg,
                                                   double visc_accum, const Params& p,
                                                   const SpectralWorkspace& ws, double dt = 0.0) {
  const double tol = dt > 0.0 ? 0.5 * dt : 1e-12 * std::max(1.0, std::abs(nsk.t));
  if (std::abs(nsk.t - qg.t) > tol) {
    throw UsageError("modulated_energy: NSK time " + std::to_string(nsk.t) +
                     " and QG time " + std::to_string(qg.t) + " differ");
  }
  if (visc_accum < 0.0) throw UsageError("modulated_energy: visc_accum must be >= 0");
  const VectorField u = nsk.velocity();
  const VectorField v = perp_grad(qg.phi, ws);
  const VectorField gs =
      grad(map(nsk.rho, [&](double r) { return sigma_mu_S(r, Law::sigma, p); }), ws);
  ScalarField kin(ws.n()), gdiff(ws.n()), cap(ws.n());
  for (std::size_t q = 0; q < kin.size(); ++q) {
    const double r = nsk.rho[q];
    const double dx = u.x[q] - v.x[q], dy = u.y[q] - v.y[q];
    kin[q] = 0.5 * r * (dx * dx + dy * dy);
    const double dg = g_eps((r - 1.0) / p.eps, p) - qg.phi[q];
    gdiff[q] = 0.5 * dg * dg;
    cap[q] = gs.x[q] * gs.x[q] + gs.y[q] * gs.y[q];
  }
  return {integrate(kin, ws), integrate(gdiff, ws), 2.0 * p.kappa() * integrate(cap, ws),
          visc_accum};
}

inline double modulated_energy(const NskState& nsk, const QgState& qg, double visc_accum,
                               const Params& p, const SpectralWorkspace& ws, double dt = 0.0) {
  return modulated_energy_parts(nsk, qg, visc_accum, p, ws, dt).total();
}

inline DiagnosticsRow diagnostics_row(const NskState& nsk, const QgState& qg, double visc_accum,
                                      const Params& p, const SpectralWorkspace& ws,
                                      double rho_min = kDefaultRhoMin) {
  DiagnosticsRow row;
  row.t = nsk.t;
  row.mass = integrate(nsk.rho, ws);
  const EnergyPair en = energy_nsk(nsk, p, ws, rho_min);
  const EnergyPair e0 = energy_qg(qg, p, ws);
  row.E_eps = en.energy;
  row.D_eps = en.dissipation;
  row.E_0 = e0.energy;
  row.D_0 = e0.dissipation;
  const ModulatedEnergyParts h = modulated_energy_parts(nsk, qg, visc_accum, p, ws);
  row.H_eps = h.total();
  row.visc_accum = visc_accum;

  const VectorField v = perp_grad(qg.phi, ws);
  const VectorField u = nsk.velocity();
  row.norm_rho_gamma = lp_norm(nsk.rho + (-1.0), p.gamma, ws);
  row.norm_mom = lp_norm(nsk.mom - v, 2.0 * p.gamma / (p.gamma + 1.0), ws);
  VectorField w = u - v;
  w *= map(nsk.rho, [](double r) { return std::sqrt(r); });
  row.norm_kinetic = lp_norm(w, 2.0, ws);
  ScalarField gd(ws.n());
  for (std::size_t q = 0; q < gd.size(); ++q) {
    gd[q] = g_eps((nsk.rho[q] - 1.0) / p.eps, p) - qg.phi[q];
  }
  row.norm_G = lp_norm(gd, 2.0, ws);
  row.norm_cap = std::pow(p.eps, p.alpha - 1.0) *
                 lp_norm(grad(map(nsk.rho, [&](double r) { return sigma_mu_S(r, Law::sigma, p); }),
                              ws),
                         2.0, ws);
  return row;
}

/// Right-hand side of the Hoelder splitting
///   rho u - v = sqrt(rho) [sqrt(rho)(u - v)] + (rho - 1) v,
/// ||.||_{2g/(g+1)} <= ||sqrt rho||_{2g} ||sqrt rho (u-v)||_2 + ||rho-1||_{2g/(g+1)} ||v||_inf.
inline double momentum_chain_bound(const NskState& nsk, const QgState& qg, const Params& p,
                                   const SpectralWorkspace& ws) {
  const double g = p.gamma;
  const VectorField v = perp_grad(qg.phi, ws);
  const ScalarField sq = map(nsk.rho, [](double r) { return std::sqrt(r); });
  VectorField w = nsk.velocity() - v;
  w *= sq;
  return lp_norm(sq, 2.0 * g, ws) * lp_norm(w, 2.0, ws) +
         lp_norm(nsk.rho + (-1.0), 2.0 * g / (g + 1.0), ws) * lp_norm(v, kInf, ws);
}

struct WellPrep {
  double d1 = 0.0;  // ||G_eps(phi_eps^0) - phi^0||_2
  double d2 = 0.0;  // ||(rho^0 - 1)/eps - phi^0||_2
  double d3 = 0.0;  // ||sqrt(rho^0) u^0 - grad_perp phi^0||_2
  double d4 = 0.0;  // eps^(alpha-1) ||grad sqrt(rho^0)||_2
};

inline WellPrep wellprep_check(const ScalarField& rho0, const VectorField& u0,
                               const ScalarField& phi0, const Params& p,
                               const SpectralWorkspace& ws, double rho_min = kDefaultRhoMin) {
  check_density(rho0, rho_min, 0.0);
  WellPrep out;
  ScalarField a(ws.n()), b(ws.n());
  for (std::size_t q = 0; q < a.size(); ++q) {
    const double pe = (rho0[q] - 1.0) / p.eps;
    a[q] = g_eps(pe, p) - phi0[q];
    b[q] = pe - phi0[q];
  }
  out.d1 = lp_norm(a, 2.0, ws);
  out.d2 = lp_norm(b, 2.0, ws);
  const ScalarField sq = map(rho0, [](double r) { return std::sqrt(r); });
  out.d3 = lp_norm(sq * u0 - perp_grad(phi0, ws), 2.0, ws);
  out.d4 = std::pow(p.eps, p.alpha - 1.0) * lp_norm(grad(sq, ws), 2.0, ws);
  return out;
}

struct RatePoint {
  double eps = 0.0;
  double value = 0.0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;
};

/// Least-squares line through (log eps, log value).
inline RateFit fit_rate(std::span<const RatePoint> pts, std::size_t min_points = 3) {
  if (pts.size() < std::max<std::size_t>(min_points, 2)) {
    throw UsageError("fit_rate needs at least " + std::to_string(min_points) + " points");
  }
  for (std::size_t a = 0; a < pts.size(); ++a) {
    if (!(pts[a].value > 0.0) || !(pts[a].eps > 0.0)) {
      throw UsageError("fit_rate: eps and values must be positive");
    }
    for (std::size_t b = 0; b < a; ++b) {
      if (pts[a].eps == pts[b].eps) throw UsageError("fit_rate: eps values must be distinct");
    }
  }
  const double n = static_cast<double>(pts.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& pt : pts) {
    sx += std::log(pt.eps);
    sy += std::log(pt.value);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& pt : pts) {
    const double dx = std::log(pt.eps) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(pt.value) - my);
  }
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (const auto& pt : pts) {
    const double r = std::log(pt.value) - (fit.intercept + fit.slope * std::log(pt.eps));
    fit.max_residual = std::max(fit.max_residual, std::abs(r));
  }
  return fit;
}

}  // namespace nskqg

#pragma once

// Quick identity and property checks used by `nskqg check`. Each check
// returns a measured value and its threshold; a few seconds in total.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "nskqg/constitutive.hpp"
#include "nskqg/diagnostics.hpp"
#include "nskqg/nsk.hpp"
#include "nskqg/qg.hpp"
#include "nskqg/random_fields.hpp"
#include "nskqg/spectral.hpp"

namespace nskqg {

struct CheckResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
  std::string note;
};

namespace detail {

inline double rel_l2(const ScalarField& a, const ScalarField& b, const SpectralWorkspace& ws) {
  const double nb = lp_norm(b, 2.0, ws);
  return lp_norm(a - b, 2.0, ws) / (nb > 0.0 ? nb : 1.0);
}

inline ScalarField bench_phi(const SpectralWorkspace& ws) {
  return sample(ws, [](double x, double y) { return std::cos(x) + 0.5 * std::cos(x + y + 0.3); });
}

// Well-prepared state; returns phi0 = (rho0 - 1)/eps through `phi0`.
inline NskState bench_state(const SpectralWorkspace& ws, const Params& p, ScalarField* phi0 = nullptr) {
  NskState st;
  st.rho = bench_phi(ws) * p.eps + 1.0;
  const ScalarField phi = phi_eps(st.rho, p);
  st.mom = st.rho * perp_grad(phi, ws);
  if (phi0) *phi0 = phi;
  return st;
}

// Relative residual |E(T) + int D - E(0)| / E(0), trapezoid in time.
inline double nsk_energy_residual(const NskState& init, const Params& p, double t_end, double dt,
                                  const SpectralWorkspace& ws, Scheme sc) {
  const EnergyPair e0 = energy_nsk(init, p, ws);
  double prev = e0.dissipation, accum = 0.0, last = e0.energy, t = init.t;
  nsk_run(init, p, t_end, DtPolicy::fixed(dt), ws,
          [&](double tn, const NskState& s) {
            const EnergyPair e = energy_nsk(s, p, ws);
            accum += 0.5 * (tn - t) * (prev + e.dissipation);
            prev = e.dissipation;
            last = e.energy;
            t = tn;
          },
          {sc});
  return std::abs(last + accum - e0.energy) / e0.energy;
}

inline double qg_energy_residual(const QgState& init, const Params& p, double t_end, double dt,
                                 const SpectralWorkspace& ws) {
  const EnergyPair e0 = energy_qg(init, p, ws);
  double prev = e0.dissipation, accum = 0.0, last = e0.energy, t = init.t;
  qg_run(init, p, t_end, dt, ws, [&](double tn, const QgState& s) {
    const EnergyPair e = energy_qg(s, p, ws);
    accum += 0.5 * (tn - t) * (prev + e.dissipation);
    prev = e.dissipation;
    last = e.energy;
    t = tn;
  });
  return std::abs(last + accum - e0.energy) / e0.energy;
}

}  // namespace detail

inline std::vector<CheckResult> self_check() {
  std::vector<CheckResult> out;
  auto record = [&](std::string name, double value, double threshold, std::string note = {}) {
    out.push_back({std::move(name), value, threshold, value <= threshold, std::move(note)});
  };
  auto record_min = [&](std::string name, double value, double threshold, std::string note = {}) {
    out.push_back({std::move(name), value, threshold, value >= threshold, std::move(note)});
  };

  const SpectralWorkspace ws(64);
  const Params p;

  {
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const ScalarField phi = band_limited_random(ws, ws.n() / 6, seed);
      const VectorField v = perp_grad(phi, ws);
      const ScalarField lap = laplacian(phi, ws);
      SymTensorField vv{v.x * v.x, v.x * v.y, v.y * v.y};
      const ScalarField lhs = div_perp(div_tensor(vv, ws), ws);
      a = std::max(a, detail::rel_l2(lhs, transport(v, lap, ws), ws));
      const ScalarField vis = div_perp(div_tensor(sym_gradient(v, ws), ws), ws) * 2.0;
      b = std::max(b, detail::rel_l2(vis, bilaplacian(phi, ws), ws));
      const double q1 = integrate(lap * lap, ws);
      const double q2 = 2.0 * integrate(frobenius_squared(sym_gradient(v, ws)), ws);
      c = std::max(c, std::abs(q1 - q2) / q1);
      d = std::max(d, std::abs(integrate(transport(v, lap, ws) * phi, ws)) / q1);
    }
    record("stress divergence of grad_perp phi", a, 1e-8);
    record("viscous operator on grad_perp phi", b, 1e-8);
    record("int (lap phi)^2 = 2 int |D|^2", c, 1e-8);
    record("transport skew-symmetry", d, 1e-8);
  }

  {
    double worst = 0.0;
    for (auto [g, s] : {std::pair{2.0, 0.5}, {2.0, 1.0}, {3.0, 0.5}}) {
      const Params q = validate_params(g, s, 0.5, 0.2);
      const ScalarField rho = band_limited_random(ws, 3, 7) * 0.5 + 1.0;
      const VectorField k1 = korteweg_divergence(rho, KortewegForm::primitive, q, ws);
      const VectorField k2 = korteweg_divergence(rho, KortewegForm::conservative, q, ws);
      worst = std::max(worst, lp_norm(k1 - k2, 2.0, ws) / lp_norm(k2, 2.0, ws));
    }
    record("Korteweg primitive vs conservative form", worst, 1e-6);
  }

  {
    double worst = 0.0;
    for (double g : {1.5, 2.0, 3.0, 5.0}) {
      const Params q = validate_params(g, 0.5, 0.5, 0.1);
      for (int i = 0; i <= 1000; ++i) {
        const double phi = -0.999 / q.eps + i * (6.0 / q.eps) / 1000.0;
        const double gv = g_eps(phi, q);
        const double h = internal_energy(1.0 + q.eps * phi, q) / (q.eps * q.eps);
        worst = std::max(worst, std::abs(0.5 * gv * gv - h) / std::max(1.0, h));
      }
    }
    record("G^2/2 = h/eps^2", worst, 1e-13);
  }

  {
    const SpectralWorkspace w32(32);
    const Params q = validate_params(2.0, 0.5, 0.5, 0.2);
    const NskState init = detail::bench_state(w32, q);
    const double r1 = detail::nsk_energy_residual(init, q, 0.05, 2e-3, w32, Scheme::imex);
    const double r2 = detail::nsk_energy_residual(init, q, 0.05, 1e-3, w32, Scheme::imex);
    record("NSK energy identity residual (N=32, dt=1e-3)", r2, 1e-3);
    record_min("NSK energy identity order", std::log2(r1 / r2), 1.8);

    double drift = 0.0;
    const double m0 = integrate(init.rho, w32);
    nsk_run(init, q, 0.05, DtPolicy::fixed(1e-3), w32, [&](double, const NskState& s) {
      drift = std::max(drift, std::abs(integrate(s.rho, w32) - m0) / m0);
    });
    record("NSK mass drift", drift, 1e-10);

    const QgState qinit{detail::bench_phi(w32), 0.0};
    const double s1 = detail::qg_energy_residual(qinit, q, 0.2, 0.02, w32);
    const double s2 = detail::qg_energy_residual(qinit, q, 0.2, 0.01, w32);
    record("QG energy identity residual (N=32, dt=0.01)", s2, 1e-3);
    record_min("QG energy identity order", std::log2(s1 / s2), 1.8);

    ScalarField phi0(w32.n());
    detail::bench_state(w32, q, &phi0);
    const WellPrep wp = wellprep_check(init.rho, init.velocity(), phi0, q, w32);
    record("well-prepared data: d2", wp.d2, 0.0);
    record("well-prepared data: d1 at gamma = 2", wp.d1, 0.0);
  }
  return out;
}

}  // namespace nskqg

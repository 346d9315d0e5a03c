#pragma once

// Viscous quasi-geostrophic equation
//   d_t(lap phi - phi) + (grad_perp phi . grad) lap phi = mu(1) lap^2 phi,
// advanced through the auxiliary variable u = phi - lap phi:
//   d_t u = mu lap u + (grad_perp phi . grad)(phi - u) - mu (phi - u).

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "nskqg/constitutive.hpp"
#include "nskqg/errors.hpp"
#include "nskqg/spectral.hpp"
#include "nskqg/stepping.hpp"

namespace nskqg {

struct QgState {
  ScalarField phi;
  double t = 0.0;
};

/// Solves -lap phi + phi = u.
inline ScalarField helmholtz_solve(const ScalarField& u, const SpectralWorkspace& ws) {
  Spectrum s = ws.forward(u);
  for (std::size_t q = 0; q < s.size(); ++q) s[q] /= 1.0 + ws.k_squared(q);
  return ws.backward(s);
}

/// u = phi - lap phi.
inline ScalarField helmholtz_apply(const ScalarField& phi, const SpectralWorkspace& ws) {
  Spectrum s = ws.forward(phi);
  for (std::size_t q = 0; q < s.size(); ++q) s[q] *= 1.0 + ws.k_squared(q);
  return ws.backward(s);
}

/// (a . grad) f, dealiased.
inline ScalarField transport(const VectorField& a, const ScalarField& f,
                             const SpectralWorkspace& ws) {
  const VectorField g = grad(f, ws);
  return dealias(a.x * g.x + a.y * g.y, ws);
}

namespace detail {

/// Everything in d_t u except the diffusion mu lap u.
inline ScalarField qg_explicit_part(const ScalarField& u, const Params& p,
                                    const SpectralWorkspace& ws) {
  const ScalarField phi = helmholtz_solve(u, ws);
  const ScalarField phi_minus_u = phi - u;
  ScalarField out = transport(perp_grad(phi, ws), phi_minus_u, ws);
  out -= p.mu_at_one() * phi_minus_u;
  return out;
}

}  // namespace detail

/// Tendency d_t u of the auxiliary variable u = phi - lap phi.
inline ScalarField qg_rhs(const QgState& st, const Params& p, const SpectralWorkspace& ws) {
  Spectrum s = ws.forward(st.phi);
  for (std::size_t q = 0; q < s.size(); ++q) s[q] *= 1.0 + ws.k_squared(q);
  const ScalarField u = ws.backward(s);
  ScalarField out = detail::qg_explicit_part(u, p, ws);
  for (std::size_t q = 0; q < s.size(); ++q) s[q] *= -p.mu_at_one() * ws.k_squared(q);
  out += ws.backward(s);
  if (!out.all_finite()) throw BlowUpError("non-finite QG tendency", st.t);
  return out;
}

/// Integrating-factor midpoint step: diffusion exact per mode, the rest
/// explicit. The same dt can be imposed from an NSK run for co-stepping.
inline QgState qg_step(const QgState& st, double dt, const Params& p,
                       const SpectralWorkspace& ws) {
  if (!(dt > 0.0)) throw UsageError("qg step: dt must be positive");
  const double mu = p.mu_at_one();
  const std::size_t ns = ws.spectral_size();
  std::vector<double> e_half(ns), e_full(ns);
  for (std::size_t q = 0; q < ns; ++q) {
    e_half[q] = std::exp(-mu * ws.k_squared(q) * 0.5 * dt);
    e_full[q] = e_half[q] * e_half[q];
  }

  const ScalarField u0 = helmholtz_apply(st.phi, ws);
  const Spectrum u0h = ws.forward(u0);
  const Spectrum r1 = ws.forward(detail::qg_explicit_part(u0, p, ws));

  Spectrum mid(ns);
  for (std::size_t q = 0; q < ns; ++q) mid[q] = e_half[q] * (u0h[q] + 0.5 * dt * r1[q]);
  const Spectrum r2 = ws.forward(detail::qg_explicit_part(ws.backward(mid), p, ws));

  Spectrum next(ns);
  for (std::size_t q = 0; q < ns; ++q) {
    next[q] = e_full[q] * u0h[q] + dt * e_half[q] * r2[q];
    next[q] /= 1.0 + ws.k_squared(q);  // back to phi
  }
  QgState out{ws.backward(next), st.t + dt};
  if (!out.phi.all_finite()) throw BlowUpError("non-finite QG state after step", st.t);
  return out;
}

using QgObserver = std::function<void(double, const QgState&)>;

inline QgState qg_run(const QgState& init, const Params& p, double t_end, double dt,
                      const SpectralWorkspace& ws, const QgObserver& observer = {}) {
  if (t_end < init.t) throw UsageError("qg_run: final time precedes initial time");
  const FixedSchedule sched(init.t, t_end, dt);
  QgState st = init;
  for (long n = 0; n < sched.steps(); ++n) {
    const double t_next = sched.time(n + 1);
    st = detail::annotate_step(n, [&] {
      QgState next = qg_step(st, t_next - st.t, p, ws);
      next.t = t_next;
      return next;
    });
    if (observer) observer(st.t, st);
  }
  return st;
}

/// Residual of the QG equation at the interior states of a uniformly spaced
/// trajectory, time derivative by centred differences. Returns the largest
/// spatial L^2 norm over the interior states.
inline double qg_residual(std::span<const QgState> traj, const Params& p,
                          const SpectralWorkspace& ws) {
  if (traj.size() < 3) throw UsageError("qg_residual needs at least 3 states");
  const double dt = traj[1].t - traj[0].t;
  if (!(dt > 0.0)) throw UsageError("qg_residual: times must increase");
  for (std::size_t n = 1; n + 1 < traj.size(); ++n) {
    const double d = traj[n + 1].t - traj[n].t;
    if (std::abs(d - dt) > 1e-9 * std::max(1.0, std::abs(dt))) {
      throw UsageError("qg_residual: trajectory must have uniform time spacing");
    }
  }
  const double mu = p.mu_at_one();
  double worst = 0.0;
  for (std::size_t n = 1; n + 1 < traj.size(); ++n) {
    // d_t(lap phi - phi) = -(d_t u)
    ScalarField r = helmholtz_apply(traj[n - 1].phi, ws) - helmholtz_apply(traj[n + 1].phi, ws);
    r *= 1.0 / (traj[n + 1].t - traj[n - 1].t);
    const ScalarField& phi = traj[n].phi;
    r += transport(perp_grad(phi, ws), laplacian(phi, ws), ws);
    r -= mu * bilaplacian(phi, ws);
    worst = std::max(worst, lp_norm(r, 2.0, ws));
  }
  return worst;
}

}  // namespace nskqg

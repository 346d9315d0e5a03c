#pragma once

// Scaled Navier-Stokes-Korteweg system in conservative variables (rho, m):
//
//   d_t rho = -div m
//   d_t m   = -div(m x m / rho) - m_perp / eps - grad(rho^gamma) / (eps^2 gamma)
//             + 2 kappa rho grad(sigma'(rho) lap sigma(rho))
//             + 2 div(mu(rho) D(m / rho)),          kappa = eps^(2(alpha-1)).

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "nskqg/constitutive.hpp"
#include "nskqg/errors.hpp"
#include "nskqg/spectral.hpp"
#include "nskqg/stepping.hpp"

namespace nskqg {

inline constexpr double kDefaultRhoMin = 1e-4;

struct NskState {
  ScalarField rho;
  VectorField mom;
  double t = 0.0;

  /// Velocity u = m / rho.
  VectorField velocity() const {
    VectorField u = mom;
    for (std::size_t q = 0; q < rho.size(); ++q) {
      u.x[q] /= rho[q];
      u.y[q] /= rho[q];
    }
    return u;
  }
};

struct NskTendency {
  ScalarField rho;
  VectorField mom;
};

enum class KortewegForm { primitive, conservative };

inline void check_density(const ScalarField& rho, double rho_min, double t) {
  double lo = rho[0];
  for (double r : rho.values()) {
    if (!std::isfinite(r)) throw BlowUpError("non-finite density", t);
    lo = std::min(lo, r);
  }
  if (!(lo > rho_min)) {
    throw VacuumError("density floor breached: min rho = " + std::to_string(lo) +
                          " <= rho_min = " + std::to_string(rho_min),
                      t);
  }
}

namespace detail {

inline VectorField korteweg_raw(const ScalarField& rho, KortewegForm form, const Params& p,
                                const SpectralWorkspace& ws) {
  const double c = 2.0 * p.kappa();
  const ScalarField sig = map(rho, [&](double r) { return sigma_mu_S(r, Law::sigma, p); });
  if (form == KortewegForm::primitive) {
    ScalarField inner = map(rho, [&](double r) { return sigma_mu_S(r, Law::dsigma, p); });
    inner *= laplacian(sig, ws);
    VectorField out = grad(inner, ws);
    out *= rho;
    out *= c;
    return out;
  }
  const ScalarField big_s = map(rho, [&](double r) { return sigma_mu_S(r, Law::S, p); });
  const VectorField grad_rho = grad(rho, ws);
  const VectorField grad_sig = grad(sig, ws);
  ScalarField iso = laplacian(big_s, ws);
  for (std::size_t q = 0; q < iso.size(); ++q) {
    const double g2 = grad_rho.x[q] * grad_rho.x[q] + grad_rho.y[q] * grad_rho.y[q];
    iso[q] -= 0.5 * sigma_mu_S(rho[q], Law::d2S, p) * g2;
  }
  SymTensorField t{iso - grad_sig.x * grad_sig.x, -(grad_sig.x * grad_sig.y),
                   iso - grad_sig.y * grad_sig.y};
  VectorField out = div_tensor(t, ws);
  out *= c;
  return out;
}

inline VectorField viscous_raw(const ScalarField& rho, const VectorField& u, const Params& p,
                               const SpectralWorkspace& ws) {
  SymTensorField d = sym_gradient(u, ws);
  d *= map(rho, [&](double r) { return sigma_mu_S(r, Law::mu, p); });
  VectorField out = div_tensor(d, ws);
  out *= 2.0;
  return out;
}

}  // namespace detail

/// Korteweg force 2 kappa rho grad(sigma' lap sigma), either directly
/// (primitive) or as the divergence of the capillary stress (conservative).
inline VectorField korteweg_divergence(const ScalarField& rho, KortewegForm form, const Params& p,
                                       const SpectralWorkspace& ws,
                                       double rho_min = kDefaultRhoMin) {
  check_density(rho, rho_min, 0.0);
  return dealias(detail::korteweg_raw(rho, form, p, ws), ws);
}

/// 2 div(mu(rho) D(u)).
inline VectorField viscous_divergence(const ScalarField& rho, const VectorField& u,
                                      const Params& p, const SpectralWorkspace& ws,
                                      double rho_min = kDefaultRhoMin) {
  check_density(rho, rho_min, 0.0);
  return dealias(detail::viscous_raw(rho, u, p, ws), ws);
}

inline NskTendency nsk_rhs(const NskState& st, const Params& p, const SpectralWorkspace& ws,
                           double rho_min = kDefaultRhoMin) {
  check_density(st.rho, rho_min, st.t);
  const ScalarField& rho = st.rho;
  const VectorField& m = st.mom;
  const VectorField u = st.velocity();

  NskTendency out;
  out.rho = -dealias(div(m, ws), ws);

  SymTensorField flux{m.x * u.x, m.x * u.y, m.y * u.y};
  VectorField f = div_tensor(flux, ws);
  f *= -1.0;

  const double inv_eps = 1.0 / p.eps;
  f.x += inv_eps * m.y;
  f.y += -inv_eps * m.x;

  VectorField gp = grad(map(rho, [&](double r) { return std::pow(r, p.gamma); }), ws);
  gp *= -1.0 / (p.eps * p.eps * p.gamma);
  f += gp;

  f += detail::korteweg_raw(rho, KortewegForm::conservative, p, ws);
  f += detail::viscous_raw(rho, u, p, ws);
  out.mom = dealias(f, ws);

  if (!out.rho.all_finite() || !out.mom.all_finite()) {
    throw BlowUpError("non-finite NSK tendency", st.t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linearization about (rho, m) = (1, 0).

/// Per-mode linear operator acting on (rho_hat, m1_hat, m2_hat).
using ModeMatrix = Eigen::Matrix3cd;

/// Switches for the individual linear couplings (all on for the solver).
struct LinearTerms {
  bool mass = true;
  bool pressure = true;
  bool coriolis = true;
  bool capillary = true;
  bool viscous = true;
};

inline ModeMatrix linearized_mode_matrix(double k1, double k2, const Params& p,
                                         LinearTerms terms = {}) {
  const Complex i{0.0, 1.0};
  const double kk = k1 * k1 + k2 * k2;
  const std::array<double, 2> k{k1, k2};
  ModeMatrix l = ModeMatrix::Zero();
  if (terms.mass) {
    l(0, 1) = -i * k1;
    l(0, 2) = -i * k2;
  }
  // grad rho force: pressure (p'(1) = 1) minus the capillary restoring term
  // 2 kappa sigma'(1)^2 grad lap rho.
  Complex rho_coupling = 0.0;
  if (terms.pressure) rho_coupling += -i / (p.eps * p.eps);
  if (terms.capillary) rho_coupling += -2.0 * p.kappa() * p.s * p.s * i * kk;
  l(1, 0) = rho_coupling * k[0];
  l(2, 0) = rho_coupling * k[1];
  if (terms.coriolis) {
    l(1, 2) += 1.0 / p.eps;
    l(2, 1) += -1.0 / p.eps;
  }
  if (terms.viscous) {
    const double mu = p.mu_at_one();
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        l(1 + a, 1 + b) += -mu * ((a == b ? kk : 0.0) + k[a] * k[b]);
      }
    }
  }
  return l;
}

struct NskOptions {
  Scheme scheme = Scheme::imex;
  double rho_min = kDefaultRhoMin;
};

/// Advances NskState by one step. Holds the per-mode linear operators and
/// caches the exact propagators exp(L(k) dt/2) for the step sizes in use.
class NskStepper {
 public:
  NskStepper(const Params& p, const SpectralWorkspace& ws, NskOptions opts = {})
      : p_(p), ws_(ws), opts_(opts) {
    lin_.reserve(ws.spectral_size());
    for (std::size_t q = 0; q < ws.spectral_size(); ++q) {
      lin_.push_back(linearized_mode_matrix(ws.dk1(q), ws.dk2(q), p));
    }
  }

  const Params& params() const noexcept { return p_; }
  const SpectralWorkspace& workspace() const noexcept { return ws_; }
  const NskOptions& options() const noexcept { return opts_; }

  NskState step(const NskState& st, double dt) {
    if (!(dt > 0.0)) throw UsageError("nsk step: dt must be positive");
    check_density(st.rho, opts_.rho_min, st.t);
    NskState out = opts_.scheme == Scheme::imex ? step_imex(st, dt) : step_rk4(st, dt);
    out.t = st.t + dt;
    if (!out.rho.all_finite() || !out.mom.all_finite()) {
      throw BlowUpError("non-finite NSK state after step", st.t);
    }
    check_density(out.rho, opts_.rho_min, st.t);
    return out;
  }

  /// Stable step from the policy for the current state.
  double suggest_dt(const NskState& st, const DtPolicy& pol) const {
    if (pol.kind == DtPolicy::Kind::fixed) return pol.dt;
    const VectorField u = st.velocity();
    const double umax = magnitude(u).max_abs();
    const double dx = ws_.dx();
    double dt = pol.c_adv * dx / (umax + 1.0);
    if (opts_.scheme == Scheme::rk4) {
      dt = std::min(dt, pol.c_wave * p_.eps * dx);
      dt = std::min(dt, pol.c_disp * std::pow(p_.eps, 1.0 - p_.alpha) * dx * dx);
    }
    return dt;
  }

 private:
  using Spectra = std::array<Spectrum, 3>;

  const std::vector<ModeMatrix>& propagator(double h) {
    auto it = props_.find(h);
    if (it != props_.end()) return it->second;
    if (props_.size() >= 4) props_.erase(props_.begin());
    std::vector<ModeMatrix> e(lin_.size());
    for (std::size_t q = 0; q < lin_.size(); ++q) {
      e[q] = ws_.kept(q) ? ModeMatrix((lin_[q] * h).exp()) : ModeMatrix::Zero();
    }
    return props_.emplace(h, std::move(e)).first->second;
  }

  Spectra to_spectral(const NskState& st) const {
    ScalarField drho = st.rho + (-1.0);
    return {ws_.forward(drho), ws_.forward(st.mom.x), ws_.forward(st.mom.y)};
  }

  NskState to_physical(const Spectra& w, double t) const {
    NskState st;
    st.rho = ws_.backward(w[0]) + 1.0;
    st.mom = VectorField(ws_.backward(w[1]), ws_.backward(w[2]));
    st.t = t;
    return st;
  }

  void apply(const std::vector<ModeMatrix>& mats, Spectra& w) const {
    for (std::size_t q = 0; q < mats.size(); ++q) {
      const Eigen::Vector3cd v(w[0][q], w[1][q], w[2][q]);
      const Eigen::Vector3cd r = mats[q] * v;
      w[0][q] = r(0);
      w[1][q] = r(1);
      w[2][q] = r(2);
    }
  }

  /// Spectral coefficients of nsk_rhs(w) - L w, restricted to the kept modes.
  Spectra remainder(const Spectra& w, double t) const {
    const NskTendency f = nsk_rhs(to_physical(w, t), p_, ws_, opts_.rho_min);
    Spectra r{ws_.forward(f.rho), ws_.forward(f.mom.x), ws_.forward(f.mom.y)};
    for (std::size_t q = 0; q < lin_.size(); ++q) {
      if (!ws_.kept(q)) {
        r[0][q] = r[1][q] = r[2][q] = 0.0;
        continue;
      }
      const Eigen::Vector3cd v(w[0][q], w[1][q], w[2][q]);
      const Eigen::Vector3cd lw = lin_[q] * v;
      r[0][q] -= lw(0);
      r[1][q] -= lw(1);
      r[2][q] -= lw(2);
    }
    return r;
  }

  static Spectra axpy(const Spectra& x, double a, const Spectra& y) {
    Spectra out = x;
    for (int c = 0; c < 3; ++c) {
      for (std::size_t q = 0; q < out[c].size(); ++q) out[c][q] += a * y[c][q];
    }
    return out;
  }

  // Strang splitting: exact half-step of the linear part, explicit midpoint on
  // the nonlinear remainder, exact half-step.
  NskState step_imex(const NskState& st, double dt) {
    const auto& half = propagator(0.5 * dt);
    Spectra w = to_spectral(st);
    apply(half, w);
    const Spectra r1 = remainder(w, st.t);
    const Spectra mid = axpy(w, 0.5 * dt, r1);
    const Spectra r2 = remainder(mid, st.t + 0.5 * dt);
    w = axpy(w, dt, r2);
    apply(half, w);
    return to_physical(w, st.t + dt);
  }

  NskState step_rk4(const NskState& st, double dt) const {
    auto stage = [&](const NskState& base, const NskTendency& k, double h) {
      NskState s = base;
      s.rho += h * k.rho;
      s.mom += h * k.mom;
      s.t = base.t + h;
      return s;
    };
    const NskTendency k1 = nsk_rhs(st, p_, ws_, opts_.rho_min);
    const NskTendency k2 = nsk_rhs(stage(st, k1, 0.5 * dt), p_, ws_, opts_.rho_min);
    const NskTendency k3 = nsk_rhs(stage(st, k2, 0.5 * dt), p_, ws_, opts_.rho_min);
    const NskTendency k4 = nsk_rhs(stage(st, k3, dt), p_, ws_, opts_.rho_min);
    NskState out = st;
    const double w = dt / 6.0;
    out.rho += w * k1.rho;
    out.rho += (2.0 * w) * k2.rho;
    out.rho += (2.0 * w) * k3.rho;
    out.rho += w * k4.rho;
    out.mom += w * k1.mom;
    out.mom += (2.0 * w) * k2.mom;
    out.mom += (2.0 * w) * k3.mom;
    out.mom += w * k4.mom;
    return out;
  }

  Params p_;
  SpectralWorkspace ws_;
  NskOptions opts_;
  std::vector<ModeMatrix> lin_;
  std::map<double, std::vector<ModeMatrix>> props_;
};

/// One step without a persistent stepper (rebuilds the propagator).
inline NskState nsk_step(const NskState& st, double dt, Scheme scheme, const Params& p,
                         const SpectralWorkspace& ws, double rho_min = kDefaultRhoMin) {
  NskStepper stepper(p, ws, NskOptions{scheme, rho_min});
  return stepper.step(st, dt);
}

/// Called once per accepted step with the new time and state.
using NskObserver = std::function<void(double, const NskState&)>;

inline NskState nsk_run(const NskState& init, const Params& p, double t_end,
                        const DtPolicy& policy, const SpectralWorkspace& ws,
                        const NskObserver& observer = {}, NskOptions opts = {}) {
  if (t_end < init.t) throw UsageError("nsk_run: final time precedes initial time");
  NskStepper stepper(p, ws, opts);
  NskState st = init;
  if (policy.kind == DtPolicy::Kind::fixed) {
    const FixedSchedule sched(init.t, t_end, policy.dt);
    for (long n = 0; n < sched.steps(); ++n) {
      const double t_next = sched.time(n + 1);
      st = detail::annotate_step(n, [&] {
        NskState next = stepper.step(st, t_next - st.t);
        next.t = t_next;
        return next;
      });
      if (observer) observer(st.t, st);
    }
    return st;
  }
  long n = 0;
  while (st.t < t_end) {
    double dt = stepper.suggest_dt(st, policy);
    const bool last = st.t + dt >= t_end * (1.0 - 1e-14);
    if (last) dt = t_end - st.t;
    st = detail::annotate_step(n, [&] {
      NskState next = stepper.step(st, dt);
      if (last) next.t = t_end;
      return next;
    });
    ++n;
    if (observer) observer(st.t, st);
  }
  return st;
}

}  // namespace nskqg

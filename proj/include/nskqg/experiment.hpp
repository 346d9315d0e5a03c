#pragma once

// Experiment orchestration: initial data, single NSK / QG runs, co-stepped
// limit runs, and eps sweeps with rate fits.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "nskqg/config.hpp"
#include "nskqg/diagnostics.hpp"
#include "nskqg/errors.hpp"
#include "nskqg/io.hpp"
#include "nskqg/nsk.hpp"
#include "nskqg/qg.hpp"
#include "nskqg/spectral.hpp"

namespace nskqg {

struct InitialData {
  NskState nsk;
  QgState qg;
};

/// phi0 = sum amp cos(k.x + phase); rho0 = 1 + eps phi0, m0 = rho0 grad_perp phi0.
inline InitialData generate_initial(const ExperimentConfig& cfg, double eps,
                                    const SpectralWorkspace& ws) {
  if (ws.n() != cfg.N) throw UsageError("generate_initial: workspace size differs from config N");
  ScalarField phi = sample(ws, [&](double x1, double x2) {
    double v = 0.0;
    for (const PhiMode& m : cfg.phi0_modes) v += m.amplitude * std::cos(m.k1 * x1 + m.k2 * x2 + m.phase);
    return v;
  });
  InitialData d;
  d.nsk.rho = phi * eps + 1.0;
  // phi0 := (rho0 - 1)/eps, within an ulp of the cosine sum, so that the data
  // are well prepared exactly in floating point and not just to roundoff.
  d.qg.phi = phi_eps(d.nsk.rho, Params{.eps = eps});
  d.nsk.mom = d.nsk.rho * perp_grad(d.qg.phi, ws);
  const double lo = d.nsk.rho.min();
  if (!(lo > cfg.rho_min)) {
    throw VacuumError("initial density min " + format_real(lo) + " <= rho_min " +
                          format_real(cfg.rho_min) + " (eps = " + format_real(eps) +
                          "); reduce the phi0 amplitudes",
                      0.0, 0);
  }
  return d;
}

inline InitialData generate_initial(const ExperimentConfig& cfg, const SpectralWorkspace& ws) {
  return generate_initial(cfg, cfg.eps, ws);
}

/// Where a run writes. An empty csv path disables file output.
struct RunOutput {
  std::filesystem::path csv;
  std::filesystem::path snapshot_dir;
  std::string snapshot_prefix;
};

struct RunReport {
  double eps = 0.0;
  ExperimentKind kind = ExperimentKind::limit;
  std::vector<DiagnosticsRow> rows;  // nsk runs fill mass/E_eps/D_eps, qg runs E_0/D_0
  std::vector<double> dissipated;    // running trapezoid of D_eps (nsk) or D_0 (qg)
  bool completed = true;
  double last_good_t = 0.0;
  long steps = 0;
  std::string failure;
  double max_mass_drift = 0.0;  // relative to the initial mass
  double sup_H = 0.0;
  WellPrep wellprep;
  std::string csv;
  double wall_seconds = 0.0;

  const DiagnosticsRow& final_row() const { return rows.back(); }
};

inline constexpr std::array<const char*, 5> kNskColumns = {"t", "mass", "E_eps", "D_eps", "dissipated"};
inline constexpr std::array<const char*, 4> kQgColumns = {"t", "E_0", "D_0", "dissipated"};

namespace detail {

inline double qg_suggest_dt(const QgState& st, const DtPolicy& pol, const SpectralWorkspace& ws) {
  const double vmax = magnitude(perp_grad(st.phi, ws)).max_abs();
  return pol.c_adv * ws.dx() / (vmax + 1.0);
}

inline std::string snapshot_name(const std::string& prefix, long step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%06ld.nskg", step);
  return prefix + buf;
}

}  // namespace detail

/// Runs cfg.experiment (nsk, qg or limit; a sweep runs limit) at the given
/// eps. Solver failures do not throw: the report and the CSV record the last
/// good time instead.
inline RunReport run_experiment(const ExperimentConfig& cfg, double eps, const SpectralWorkspace& ws,
                                const RunOutput& out = {}) {
  const auto wall0 = std::chrono::steady_clock::now();
  const ExperimentKind kind =
      cfg.experiment == ExperimentKind::sweep ? ExperimentKind::limit : cfg.experiment;
  const bool with_nsk = kind != ExperimentKind::qg;
  const bool with_qg = kind != ExperimentKind::nsk;
  const Params p = cfg.params(eps);
  const DtPolicy pol = cfg.dt_policy();

  RunReport rep;
  rep.eps = eps;
  rep.kind = kind;
  InitialData st = generate_initial(cfg, eps, ws);
  if (with_nsk) rep.wellprep = wellprep_check(st.nsk.rho, st.nsk.velocity(), st.qg.phi, p, ws, cfg.rho_min);

  CsvWriter csv(out.csv);
  if (kind == ExperimentKind::limit) csv.header(kLimitColumns);
  else if (kind == ExperimentKind::nsk) csv.header(kNskColumns);
  else csv.header(kQgColumns);

  double visc_accum = 0.0, dissipated = 0.0;
  double mismatch_prev = 0.0, diss_prev = 0.0;
  double mass0 = 0.0;

  auto measure = [&](const InitialData& s) {
    DiagnosticsRow row;
    row.t = with_nsk ? s.nsk.t : s.qg.t;
    if (kind == ExperimentKind::limit) {
      row = diagnostics_row(s.nsk, s.qg, visc_accum, p, ws, cfg.rho_min);
    } else if (kind == ExperimentKind::nsk) {
      row.mass = integrate(s.nsk.rho, ws);
      const EnergyPair e = energy_nsk(s.nsk, p, ws, cfg.rho_min);
      row.E_eps = e.energy;
      row.D_eps = e.dissipation;
    } else {
      const EnergyPair e = energy_qg(s.qg, p, ws);
      row.E_0 = e.energy;
      row.D_0 = e.dissipation;
    }
    return row;
  };
  auto emit = [&](const DiagnosticsRow& row) {
    rep.rows.push_back(row);
    rep.dissipated.push_back(dissipated);
    rep.sup_H = std::max(rep.sup_H, row.H_eps);
    if (with_nsk) {
      rep.max_mass_drift = std::max(rep.max_mass_drift, std::abs(row.mass - mass0) / std::abs(mass0));
    }
    if (kind == ExperimentKind::limit) {
      csv.row(row_values(row));
    } else if (kind == ExperimentKind::nsk) {
      const std::array<double, 5> v{row.t, row.mass, row.E_eps, row.D_eps, dissipated};
      csv.row(v);
    } else {
      const std::array<double, 4> v{row.t, row.E_0, row.D_0, dissipated};
      csv.row(v);
    }
  };
  auto snapshot = [&](const InitialData& s, long step) {
    if (out.snapshot_dir.empty() || cfg.snapshot_every <= 0 || step % cfg.snapshot_every != 0) return;
    std::vector<NamedField> fields;
    if (with_nsk) {
      fields.emplace_back("rho", &s.nsk.rho);
      fields.emplace_back("mom_x", &s.nsk.mom.x);
      fields.emplace_back("mom_y", &s.nsk.mom.y);
    }
    if (with_qg) fields.emplace_back("phi", &s.qg.phi);
    write_snapshot(out.snapshot_dir / detail::snapshot_name(out.snapshot_prefix, step), fields);
  };

  if (with_nsk) mass0 = integrate(st.nsk.rho, ws);
  {
    const DiagnosticsRow r0 = measure(st);
    if (kind == ExperimentKind::limit) mismatch_prev = viscous_mismatch(st.nsk, st.qg, p, ws);
    diss_prev = with_nsk ? r0.D_eps : r0.D_0;
    emit(r0);
    snapshot(st, 0);
  }

  NskStepper stepper(p, ws, {cfg.scheme, cfg.rho_min});
  std::optional<FixedSchedule> sched;
  if (pol.kind == DtPolicy::Kind::fixed) sched.emplace(0.0, cfg.T, pol.dt);
  double t = 0.0;
  long n = 0;
  while (sched ? n < sched->steps() : t < cfg.T) {
    double t_next;
    if (sched) {
      t_next = sched->time(n + 1);
    } else {
      const double h = with_nsk ? stepper.suggest_dt(st.nsk, pol) : detail::qg_suggest_dt(st.qg, pol, ws);
      t_next = t + h >= cfg.T * (1.0 - 1e-14) ? cfg.T : t + h;
    }
    const double dt = t_next - t;
    try {
      InitialData next = detail::annotate_step(n, [&] {
        InitialData s;
        if (with_nsk) {
          s.nsk = stepper.step(st.nsk, dt);
          s.nsk.t = t_next;
        }
        if (with_qg) {
          s.qg = qg_step(st.qg, dt, p, ws);
          s.qg.t = t_next;
        }
        return s;
      });
      if (kind == ExperimentKind::limit) {
        const double mm = viscous_mismatch(next.nsk, next.qg, p, ws);
        visc_accum += 0.5 * dt * (mismatch_prev + mm);
        mismatch_prev = mm;
      }
      const DiagnosticsRow row = measure(next);
      const double d = with_nsk ? row.D_eps : row.D_0;
      dissipated += 0.5 * dt * (diss_prev + d);
      diss_prev = d;
      st = std::move(next);
      t = t_next;
      ++n;
      emit(row);
      snapshot(st, n);
    } catch (const SolverError& e) {
      rep.completed = false;
      rep.failure = e.what();
      csv.comment("aborted: " + rep.failure + "; last_good_t=" + format_real(t));
      break;
    }
  }
  rep.steps = n;
  rep.last_good_t = t;
  rep.csv = csv.text();
  csv.flush();
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return rep;
}

inline RunReport run_experiment(const ExperimentConfig& cfg, const SpectralWorkspace& ws,
                                const RunOutput& out = {}) {
  return run_experiment(cfg, cfg.eps, ws, out);
}

/// Co-stepped NSK + QG run at cfg.eps.
inline RunReport run_limit_experiment(const ExperimentConfig& cfg, const SpectralWorkspace& ws,
                                      const RunOutput& out = {}) {
  if (cfg.experiment != ExperimentKind::limit) throw UsageError("run_limit_experiment: experiment must be limit");
  return run_experiment(cfg, cfg.eps, ws, out);
}

/// Standard output locations under cfg.output_dir.
inline RunOutput default_output(const ExperimentConfig& cfg, const std::string& stem) {
  const std::filesystem::path dir(cfg.output_dir);
  return {dir / (stem + ".csv"), dir, stem};
}

inline std::string eps_tag(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "eps%g", eps);
  return buf;
}

struct SweepResult {
  std::vector<RunReport> runs;  // in eps_list order
  std::optional<RateFit> fit_rho_gamma;
  std::optional<RateFit> fit_mom;
  std::optional<RateFit> fit_sup_H;
  std::optional<RateFit> fit_d4;
  std::uint64_t config_hash = 0;
  double wall_seconds = 0.0;

  std::size_t succeeded() const {
    return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const RunReport& r) { return r.completed; }));
  }
};

inline constexpr std::array<const char*, 20> kSweepColumns = {
    "eps",    "completed", "last_good_t", "t",          "mass",           "E_eps",    "D_eps",
    "E_0",    "D_0",       "H_eps",       "visc_accum", "norm_rho_gamma", "norm_mom", "norm_kinetic",
    "norm_G", "norm_cap",  "sup_H_eps",   "d1",         "d2",             "d4"};

/// Independent limit runs, one per eps, on up to `jobs` threads. Each thread
/// owns its workspace and state; results do not depend on `jobs`.
inline SweepResult run_sweep(const ExperimentConfig& cfg, unsigned jobs = 1, bool write_files = true) {
  if (cfg.experiment != ExperimentKind::sweep) throw UsageError("run_sweep: experiment must be sweep");
  const auto wall0 = std::chrono::steady_clock::now();
  const std::size_t count = cfg.eps_list.size();
  SweepResult res;
  res.config_hash = config_hash(cfg);
  res.runs.resize(count);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    const SpectralWorkspace ws(cfg.N);
    for (std::size_t i = next++; i < count; i = next++) {
      const double eps = cfg.eps_list[i];
      RunOutput out;
      if (write_files) out = default_output(cfg, "sweep_" + eps_tag(eps));
      try {
        res.runs[i] = run_experiment(cfg, eps, ws, out);
      } catch (const SolverError& e) {  // e.g. vacuum in the initial data
        RunReport r;
        r.eps = eps;
        r.completed = false;
        r.failure = e.what();
        res.runs[i] = std::move(r);
      }
    }
  };
  jobs = std::clamp<unsigned>(jobs, 1u, static_cast<unsigned>(count));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<RatePoint> rg, mom, sh, d4;
  for (const RunReport& r : res.runs) {
    if (!r.completed) continue;
    const DiagnosticsRow& f = r.final_row();
    if (f.norm_rho_gamma > 0.0) rg.push_back({r.eps, f.norm_rho_gamma});
    if (f.norm_mom > 0.0) mom.push_back({r.eps, f.norm_mom});
    if (r.sup_H > 0.0) sh.push_back({r.eps, r.sup_H});
    if (r.wellprep.d4 > 0.0) d4.push_back({r.eps, r.wellprep.d4});
  }
  auto fit = [](const std::vector<RatePoint>& pts) -> std::optional<RateFit> {
    if (pts.size() < 3) return std::nullopt;
    return fit_rate(pts);
  };
  res.fit_rho_gamma = fit(rg);
  res.fit_mom = fit(mom);
  res.fit_sup_H = fit(sh);
  res.fit_d4 = fit(d4);
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();

  if (write_files) {
    const std::filesystem::path dir(cfg.output_dir);
    CsvWriter summary(dir / "sweep_summary.csv");
    char meta[96];
    std::snprintf(meta, sizeof meta, "config_hash=%016llx wall_seconds=%.3f",
                  static_cast<unsigned long long>(res.config_hash), res.wall_seconds);
    summary.comment(meta);
    summary.header(kSweepColumns);
    for (const RunReport& r : res.runs) {
      std::array<double, 20> v{};
      v[0] = r.eps;
      v[1] = r.completed ? 1.0 : 0.0;
      v[2] = r.last_good_t;
      if (!r.rows.empty()) {
        const auto rv = row_values(r.final_row());
        std::copy(rv.begin(), rv.end(), v.begin() + 3);
      }
      v[16] = r.sup_H;
      v[17] = r.wellprep.d1;
      v[18] = r.wellprep.d2;
      v[19] = r.wellprep.d4;
      summary.row(v);
    }
    summary.flush();

    CsvWriter fits(dir / "sweep_fits.csv");
    fits.header(std::array<const char*, 5>{"quantity", "slope", "intercept", "max_residual", "points"});
    auto fit_line = [&](const char* name, const std::optional<RateFit>& f, std::size_t pts) {
      std::string line = name;
      if (f) {
        line += "," + format_real(f->slope) + "," + format_real(f->intercept) + "," + format_real(f->max_residual);
      } else {
        line += ",nan,nan,nan";
      }
      line += "," + std::to_string(pts);
      fits.line(line);
    };
    fit_line("norm_rho_gamma", res.fit_rho_gamma, rg.size());
    fit_line("norm_mom", res.fit_mom, mom.size());
    fit_line("sup_H_eps", res.fit_sup_H, sh.size());
    fit_line("d4", res.fit_d4, d4.size());
    fits.flush();
  }

  if (res.succeeded() < 3) {
    std::string msg = "sweep: only " + std::to_string(res.succeeded()) + " of " + std::to_string(count) +
                      " runs succeeded (need 3)";
    for (const RunReport& r : res.runs) {
      if (!r.completed) msg += "\n  " + eps_tag(r.eps) + ": " + r.failure;
    }
    throw SweepError(msg);
  }
  return res;
}

}  // namespace nskqg

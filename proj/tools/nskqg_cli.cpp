// nskqg: run NSK / QG / limit experiments and eps sweeps from a JSON config.
//
//   nskqg run CONFIG [-o DIR]
//   nskqg sweep CONFIG [-o DIR] [-j JOBS]
//   nskqg check
//   nskqg info CONFIG
//
// Exit status: 0 ok, 1 a check failed, 2 bad config or usage, 3 a run was
// aborted by the solver, 4 a sweep had too few successful runs.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "nskqg/config.hpp"
#include "nskqg/experiment.hpp"
#include "nskqg/self_check.hpp"

namespace {

using namespace nskqg;

ExperimentConfig load(const std::string& path, const std::string& output_dir) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path + ": cannot open");
  std::stringstream text;
  text << f.rdbuf();
  ExperimentConfig cfg = parse_config(text.str());
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  return cfg;
}

void print_row(const DiagnosticsRow& r, ExperimentKind kind) {
  std::printf("  t              %s\n", format_real(r.t).c_str());
  if (kind != ExperimentKind::qg) {
    std::printf("  mass           %s\n", format_real(r.mass).c_str());
    std::printf("  E_eps, D_eps   %s  %s\n", format_real(r.E_eps).c_str(), format_real(r.D_eps).c_str());
  }
  if (kind != ExperimentKind::nsk) {
    std::printf("  E_0, D_0       %s  %s\n", format_real(r.E_0).c_str(), format_real(r.D_0).c_str());
  }
  if (kind == ExperimentKind::limit) {
    std::printf("  H_eps          %s\n", format_real(r.H_eps).c_str());
    std::printf("  norm_rho_gamma %s\n", format_real(r.norm_rho_gamma).c_str());
    std::printf("  norm_mom       %s\n", format_real(r.norm_mom).c_str());
  }
}

int cmd_run(const std::string& path, const std::string& output_dir) {
  const ExperimentConfig cfg = load(path, output_dir);
  if (cfg.experiment == ExperimentKind::sweep) {
    throw UsageError("config describes a sweep; use `nskqg sweep`");
  }
  const SpectralWorkspace ws(cfg.N);
  const std::string stem = to_string(cfg.experiment);
  const RunOutput out = default_output(cfg, stem);
  const RunReport rep = run_experiment(cfg, ws, out);
  std::printf("%s run, eps = %g, %ld steps, %.2f s\n", stem.c_str(), rep.eps, rep.steps, rep.wall_seconds);
  print_row(rep.final_row(), rep.kind);
  if (rep.kind != ExperimentKind::qg) std::printf("  max mass drift %.3e\n", rep.max_mass_drift);
  std::printf("wrote %s\n", out.csv.string().c_str());
  if (!rep.completed) {
    std::fprintf(stderr, "aborted: %s (last good t = %s)\n", rep.failure.c_str(),
                 format_real(rep.last_good_t).c_str());
    return 3;
  }
  return 0;
}

int cmd_sweep(const std::string& path, const std::string& output_dir, unsigned jobs) {
  const ExperimentConfig cfg = load(path, output_dir);
  if (cfg.experiment != ExperimentKind::sweep) throw UsageError("config is not a sweep; use `nskqg run`");
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  const SweepResult res = run_sweep(cfg, jobs);
  std::printf("%-8s %-9s %-24s %-24s %-24s\n", "eps", "status", "norm_rho_gamma(T)", "norm_mom(T)", "sup H_eps");
  for (const RunReport& r : res.runs) {
    if (r.completed) {
      const DiagnosticsRow& f = r.final_row();
      std::printf("%-8g %-9s %-24s %-24s %-24s\n", r.eps, "ok", format_real(f.norm_rho_gamma).c_str(),
                  format_real(f.norm_mom).c_str(), format_real(r.sup_H).c_str());
    } else {
      std::printf("%-8g %-9s %s\n", r.eps, "failed", r.failure.c_str());
    }
  }
  auto show = [](const char* name, const std::optional<RateFit>& f) {
    if (f) std::printf("slope %-16s %.4f (max residual %.3g)\n", name, f->slope, f->max_residual);
    else std::printf("slope %-16s n/a\n", name);
  };
  show("norm_rho_gamma", res.fit_rho_gamma);
  show("norm_mom", res.fit_mom);
  show("sup_H_eps", res.fit_sup_H);
  show("d4", res.fit_d4);
  std::printf("config hash %016llx, %.1f s, wrote %s/sweep_summary.csv\n",
              static_cast<unsigned long long>(res.config_hash), res.wall_seconds, cfg.output_dir.c_str());
  return res.succeeded() == res.runs.size() ? 0 : 3;
}

int cmd_check() {
  int failed = 0;
  for (const CheckResult& c : self_check()) {
    std::printf("%s  %-48s %.3e (limit %.1e)%s%s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.value,
                c.threshold, c.note.empty() ? "" : "  ", c.note.c_str());
    failed += c.passed ? 0 : 1;
  }
  std::printf("%s\n", failed ? "some checks FAILED" : "all checks passed");
  return failed ? 1 : 0;
}

int cmd_info(const std::string& path) {
  const ExperimentConfig cfg = load(path, "");
  std::printf("%s\n", config_to_json(cfg).dump(2).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Navier-Stokes-Korteweg / quasi-geostrophic limit experiments"};
  app.require_subcommand(1);

  std::string config_path, output_dir;
  unsigned jobs = 0;

  auto* run = app.add_subcommand("run", "run a single nsk, qg or limit experiment");
  run->add_option("config", config_path, "JSON config file")->required();
  run->add_option("-o,--output-dir", output_dir, "override output_dir from the config");

  auto* sweep = app.add_subcommand("sweep", "run a limit experiment for every eps in eps_list");
  sweep->add_option("config", config_path, "JSON config file")->required();
  sweep->add_option("-o,--output-dir", output_dir, "override output_dir from the config");
  sweep->add_option("-j,--jobs", jobs, "parallel runs (0 = one per hardware thread)");

  auto* check = app.add_subcommand("check", "run the identity / property self-check");

  auto* info = app.add_subcommand("info", "print the config with defaults filled in");
  info->add_option("config", config_path, "JSON config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, output_dir);
    if (*sweep) return cmd_sweep(config_path, output_dir, jobs);
    if (*check) return cmd_check();
    if (*info) return cmd_info(config_path);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 3;
  } catch (const SweepError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

#pragma once

// Experiment configuration: a flat JSON object. Unknown keys are rejected,
// every violation names its key path.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nskqg/constitutive.hpp"
#include "nskqg/errors.hpp"
#include "nskqg/stepping.hpp"

namespace nskqg {

enum class ExperimentKind { nsk, qg, limit, sweep };

struct PhiMode {
  int k1 = 0;
  int k2 = 0;
  double amplitude = 0.0;
  double phase = 0.0;
  bool operator==(const PhiMode&) const = default;
};

inline std::vector<PhiMode> default_phi0_modes() { return {{1, 0, 1.0, 0.0}, {1, 1, 0.5, 0.3}}; }

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::limit;
  int N = 64;
  double gamma = 2.0;
  double s = 0.5;
  double alpha = 0.5;
  double eps = 0.2;
  std::vector<double> eps_list;  // sweep only
  double T = 0.5;
  std::optional<double> dt;      // absent: CFL-adaptive
  double c_adv = 0.4;
  double c_wave = 0.5;
  double c_disp = 0.25;
  Scheme scheme = Scheme::imex;
  std::vector<PhiMode> phi0_modes = default_phi0_modes();
  double rho_min = 1e-4;
  std::string output_dir = ".";
  long snapshot_every = 0;
  std::uint64_t seed = 0;

  Params params() const { return validate_params(gamma, s, alpha, eps); }
  Params params(double e) const { return validate_params(gamma, s, alpha, e); }
  DtPolicy dt_policy() const {
    return dt ? DtPolicy::fixed(*dt) : DtPolicy::adaptive(c_adv, c_wave, c_disp);
  }
};

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::nsk: return "nsk";
    case ExperimentKind::qg: return "qg";
    case ExperimentKind::limit: return "limit";
    case ExperimentKind::sweep: return "sweep";
  }
  return "?";
}

inline const char* to_string(Scheme s) { return s == Scheme::imex ? "imex" : "rk4"; }

namespace detail {

using Json = nlohmann::json;

[[noreturn]] inline void config_fail(const std::string& path, const std::string& why) {
  throw ConfigError(path + ": " + why);
}

inline double json_real(const Json& v, const std::string& path) {
  if (!v.is_number()) config_fail(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) config_fail(path, "must be finite");
  return x;
}

inline long long json_integer(const Json& v, const std::string& path) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (std::isfinite(x) && x == std::floor(x) && std::abs(x) < 9e15) return static_cast<long long>(x);
  }
  config_fail(path, "expected an integer");
}

inline std::string json_string(const Json& v, const std::string& path) {
  if (!v.is_string()) config_fail(path, "expected a string");
  return v.get<std::string>();
}

// eps_{i+1}/eps_i within 10% of the common (geometric-mean) ratio.
inline bool roughly_geometric(const std::vector<double>& e) {
  const double mean_log = std::log(e.back() / e.front()) / static_cast<double>(e.size() - 1);
  const double r = std::exp(mean_log);
  for (std::size_t i = 0; i + 1 < e.size(); ++i) {
    if (std::abs(e[i + 1] / e[i] / r - 1.0) > 0.1) return false;
  }
  return true;
}

}  // namespace detail

/// Parses and validates a configuration document. Absent keys take the
/// defaults of ExperimentConfig; `experiment` is required.
inline ExperimentConfig parse_config(std::string_view text) {
  using detail::config_fail;
  using detail::Json;
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON (") + e.what() + ")");
  }
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");

  ExperimentConfig c;
  bool have_experiment = false, have_eps = false;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string& key = it.key();
    const Json& v = it.value();
    if (key == "experiment") {
      const std::string e = detail::json_string(v, key);
      if (e == "nsk") c.experiment = ExperimentKind::nsk;
      else if (e == "qg") c.experiment = ExperimentKind::qg;
      else if (e == "limit") c.experiment = ExperimentKind::limit;
      else if (e == "sweep") c.experiment = ExperimentKind::sweep;
      else config_fail(key, "must be one of nsk, qg, limit, sweep (got \"" + e + "\")");
      have_experiment = true;
    } else if (key == "N") {
      const long long n = detail::json_integer(v, key);
      if (n < 8 || n % 2 != 0 || n > 4096) config_fail(key, "must be even and in [8, 4096]");
      c.N = static_cast<int>(n);
    } else if (key == "gamma") {
      c.gamma = detail::json_real(v, key);
    } else if (key == "s") {
      c.s = detail::json_real(v, key);
    } else if (key == "alpha") {
      c.alpha = detail::json_real(v, key);
    } else if (key == "eps") {
      c.eps = detail::json_real(v, key);
      have_eps = true;
    } else if (key == "eps_list") {
      if (!v.is_array()) config_fail(key, "expected an array of numbers");
      c.eps_list.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        c.eps_list.push_back(detail::json_real(v[i], key + "[" + std::to_string(i) + "]"));
      }
    } else if (key == "T") {
      c.T = detail::json_real(v, key);
      if (!(c.T > 0.0)) config_fail(key, "must be > 0");
    } else if (key == "dt") {
      c.dt = detail::json_real(v, key);
      if (!(*c.dt > 0.0)) config_fail(key, "must be > 0");
    } else if (key == "c_adv" || key == "c_wave" || key == "c_disp") {
      const double x = detail::json_real(v, key);
      if (!(x > 0.0)) config_fail(key, "must be > 0");
      (key == "c_adv" ? c.c_adv : key == "c_wave" ? c.c_wave : c.c_disp) = x;
    } else if (key == "scheme") {
      const std::string sc = detail::json_string(v, key);
      if (sc == "imex") c.scheme = Scheme::imex;
      else if (sc == "rk4") c.scheme = Scheme::rk4;
      else config_fail(key, "must be imex or rk4 (got \"" + sc + "\")");
    } else if (key == "phi0_modes") {
      if (!v.is_array()) config_fail(key, "expected an array of [k1, k2, amplitude, phase]");
      c.phi0_modes.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string path = key + "[" + std::to_string(i) + "]";
        const Json& m = v[i];
        if (!m.is_array() || m.size() != 4) config_fail(path, "expected [k1, k2, amplitude, phase]");
        PhiMode pm;
        pm.k1 = static_cast<int>(detail::json_integer(m[0], path + "[0]"));
        pm.k2 = static_cast<int>(detail::json_integer(m[1], path + "[1]"));
        pm.amplitude = detail::json_real(m[2], path + "[2]");
        pm.phase = detail::json_real(m[3], path + "[3]");
        c.phi0_modes.push_back(pm);
      }
    } else if (key == "rho_min") {
      c.rho_min = detail::json_real(v, key);
      if (!(c.rho_min > 0.0 && c.rho_min < 1.0)) config_fail(key, "must lie in (0, 1)");
    } else if (key == "output_dir") {
      c.output_dir = detail::json_string(v, key);
      if (c.output_dir.empty()) config_fail(key, "must not be empty");
    } else if (key == "snapshot_every") {
      const long long n = detail::json_integer(v, key);
      if (n < 0) config_fail(key, "must be >= 0");
      c.snapshot_every = static_cast<long>(n);
    } else if (key == "seed") {
      const long long n = detail::json_integer(v, key);
      if (n < 0) config_fail(key, "must be >= 0");
      c.seed = static_cast<std::uint64_t>(n);
    } else {
      config_fail(key, "unknown key");
    }
  }
  if (!have_experiment) config_fail("experiment", "required key is missing");

  const int band = c.N / 3;
  for (std::size_t i = 0; i < c.phi0_modes.size(); ++i) {
    const PhiMode& m = c.phi0_modes[i];
    if (std::max(std::abs(m.k1), std::abs(m.k2)) > band) {
      config_fail("phi0_modes[" + std::to_string(i) + "]",
                  "wavenumber (" + std::to_string(m.k1) + ", " + std::to_string(m.k2) +
                      ") lies outside the dealiased band max(|k1|, |k2|) <= " +
                      std::to_string(band));
    }
  }

  if (c.experiment == ExperimentKind::sweep) {
    if (have_eps) config_fail("eps", "not used by a sweep; give eps_list");
    if (c.eps_list.size() < 4) config_fail("eps_list", "a sweep needs at least 4 values");
    for (std::size_t i = 0; i + 1 < c.eps_list.size(); ++i) {
      if (!(c.eps_list[i + 1] < c.eps_list[i])) config_fail("eps_list", "must be strictly decreasing");
    }
    for (double e : c.eps_list) {
      if (!(e > 0.0)) config_fail("eps_list", "values must be positive");
    }
    if (!detail::roughly_geometric(c.eps_list)) {
      config_fail("eps_list", "must be (approximately) geometric: successive ratios within 10%");
    }
    for (double e : c.eps_list) c.params(e);
    c.eps = c.eps_list.front();
  } else {
    if (!c.eps_list.empty()) config_fail("eps_list", "only valid for experiment = sweep");
    c.params();
  }
  return c;
}

/// The configuration with all defaults filled in, as a JSON document that
/// parse_config accepts.
inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["experiment"] = to_string(c.experiment);
  j["N"] = c.N;
  j["gamma"] = c.gamma;
  j["s"] = c.s;
  j["alpha"] = c.alpha;
  if (c.experiment == ExperimentKind::sweep) j["eps_list"] = c.eps_list;
  else j["eps"] = c.eps;
  j["T"] = c.T;
  if (c.dt) j["dt"] = *c.dt;
  j["c_adv"] = c.c_adv;
  j["c_wave"] = c.c_wave;
  j["c_disp"] = c.c_disp;
  j["scheme"] = to_string(c.scheme);
  j["phi0_modes"] = nlohmann::json::array();
  for (const PhiMode& m : c.phi0_modes) j["phi0_modes"].push_back({m.k1, m.k2, m.amplitude, m.phase});
  j["rho_min"] = c.rho_min;
  j["output_dir"] = c.output_dir;
  j["snapshot_every"] = c.snapshot_every;
  j["seed"] = c.seed;
  return j;
}

/// 64-bit FNV-1a of the canonical (defaulted, key-sorted) document.
inline std::uint64_t config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config_to_json(c).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace nskqg

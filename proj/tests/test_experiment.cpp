#include <catch2/catch_amalgamated.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nskqg/config.hpp"
#include "nskqg/experiment.hpp"
#include "nskqg/io.hpp"
#include "test_helpers.hpp"

using namespace nskqg;
namespace fs = std::filesystem;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("nskqg_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) out.push_back(line);
  return out;
}

ExperimentConfig small_limit(double eps = 0.2) {
  ExperimentConfig c = parse_config(R"({"experiment": "limit", "N": 16, "T": 0.02, "dt": 0.002})");
  c.eps = eps;
  return c;
}

}  // namespace

TEST_CASE("config defaults", "[config]") {
  const ExperimentConfig c = parse_config(R"({"experiment": "qg"})");
  CHECK(c.experiment == ExperimentKind::qg);
  CHECK(c.scheme == Scheme::imex);
  CHECK(c.rho_min == 1e-4);
  CHECK(c.snapshot_every == 0);
  CHECK(c.N == 64);
  CHECK(c.gamma == 2.0);
  CHECK(c.s == 0.5);
  CHECK(c.alpha == 0.5);
  CHECK(c.eps == 0.2);
  CHECK(c.T == 0.5);
  CHECK_FALSE(c.dt.has_value());
  CHECK(c.dt_policy().kind == DtPolicy::Kind::adaptive);
  CHECK(c.phi0_modes == default_phi0_modes());
  CHECK(c.output_dir == ".");

  // defaulted document round-trips
  const ExperimentConfig again = parse_config(config_to_json(c).dump());
  CHECK(config_to_json(again) == config_to_json(c));
  CHECK(config_hash(again) == config_hash(c));
  ExperimentConfig other = c;
  other.T = 0.6;
  CHECK(config_hash(other) != config_hash(c));
}

TEST_CASE("config errors name the offending key", "[config]") {
  CHECK(config_error(R"({"experiment": "limit", "s": 0})").find("s: must satisfy 0 < s <= 1") != std::string::npos);
  CHECK(config_error(R"({"experiment": "limit", "N": 32, "phi0_modes": [[1, 0, 1, 0], [16, 0, 1, 0]]})")
            .find("phi0_modes[1]") != std::string::npos);
  CHECK(config_error(R"({"experiment": "limit", "N": 32, "phi0_modes": [[10, -10, 1, 0]]})").empty());
  CHECK(config_error(R"({"experiment": "limit", "N": 32, "phi0_modes": [[11, 0, 1, 0]]})").find("outside") !=
        std::string::npos);
  CHECK(config_error(R"({"experiment": "limit", "viscosity": 2})").find("viscosity: unknown key") !=
        std::string::npos);
  CHECK(config_error(R"({"N": 64})").find("experiment: required") != std::string::npos);
  CHECK(config_error(R"({"experiment": "wave"})").find("experiment:") == 0);
  CHECK(config_error(R"({"experiment": "limit", "N": 62.5})").find("N: expected an integer") == 0);
  CHECK(config_error(R"({"experiment": "limit", "N": 30})").empty());
  CHECK(config_error(R"({"experiment": "limit", "N": 31})").find("N:") == 0);
  CHECK(config_error(R"({"experiment": "limit", "T": 0})").find("T:") == 0);
  CHECK(config_error(R"({"experiment": "limit", "dt": -1})").find("dt:") == 0);
  CHECK(config_error(R"({"experiment": "limit", "scheme": "euler"})").find("scheme:") == 0);
  CHECK(config_error(R"({"experiment": "limit", "gamma": 1.5, "s": 1})").find("m: viscosity exponent") !=
        std::string::npos);
  CHECK(config_error(R"({"experiment": "limit", "eps": 1.0})").find("eps:") != std::string::npos);
  CHECK(config_error(R"({"experiment": "limit", "phi0_modes": [[1, 0, 1]]})").find("phi0_modes[0]") == 0);
  CHECK(config_error(R"({"experiment": "limit", "phi0_modes": [[1, 0, "a", 0]]})").find("phi0_modes[0][2]") == 0);
  CHECK(config_error("{experiment: limit}").find("not valid JSON") != std::string::npos);
  CHECK(config_error("[1, 2]").find("top level") != std::string::npos);

  CHECK(config_error(R"({"experiment": "sweep", "eps_list": [0.4, 0.2]})").find("eps_list: a sweep needs at least 4") == 0);
  CHECK(config_error(R"({"experiment": "sweep", "eps_list": [0.4, 0.28, 0.3, 0.1]})").find("strictly decreasing") !=
        std::string::npos);
  CHECK(config_error(R"({"experiment": "sweep", "eps_list": [0.8, 0.4, 0.2, 0.02]})").find("geometric") !=
        std::string::npos);
  CHECK(config_error(R"({"experiment": "sweep", "eps_list": [0.4, 0.28, 0.2, 0.14, 0.1]})").empty());
  CHECK(config_error(R"({"experiment": "sweep", "eps": 0.2, "eps_list": [0.4, 0.28, 0.2, 0.14, 0.1]})").find("eps:") == 0);
  CHECK(config_error(R"({"experiment": "limit", "eps_list": [0.4, 0.28, 0.2, 0.14]})").find("eps_list:") == 0);
  CHECK(config_error(R"({"experiment": "sweep", "eps_list": [1.6, 0.8, 0.4, 0.2]})").find("eps:") != std::string::npos);
}

TEST_CASE("initial data", "[experiment]") {
  const SpectralWorkspace ws(32);
  ExperimentConfig c = parse_config(R"({"experiment": "limit", "N": 32, "phi0_modes": []})");
  const InitialData z = generate_initial(c, ws);
  CHECK(z.nsk.rho == ScalarField(32, 1.0));
  CHECK(z.nsk.mom == VectorField(32));
  CHECK(z.qg.phi == ScalarField(32));

  c = parse_config(R"({"experiment": "limit", "N": 32, "phi0_modes": [[2, -1, 0.8, 0.4]]})");
  const InitialData d = generate_initial(c, ws);
  CHECK(test::max_diff(d.qg.phi, sample(ws, [](double x, double y) { return 0.8 * std::cos(2 * x - y + 0.4); })) < 1e-15);
  CHECK(test::max_diff(d.nsk.velocity(), perp_grad(d.qg.phi, ws)) < 1e-14);
  const WellPrep w = wellprep_check(d.nsk.rho, d.nsk.velocity(), d.qg.phi, c.params(), ws);
  CHECK(w.d1 == 0.0);
  CHECK(w.d2 == 0.0);
  CHECK(w.d3 < c.eps * lp_norm(perp_grad(d.qg.phi, ws), 2.0, ws));

  c = parse_config(R"({"experiment": "limit", "N": 32, "eps": 0.1, "phi0_modes": [[1, 0, 20, 0]]})");
  CHECK_THROWS_AS(generate_initial(c, ws), VacuumError);
  CHECK_THROWS_AS(generate_initial(c, SpectralWorkspace(16)), UsageError);
}

TEST_CASE("limit run output", "[experiment]") {
  const SpectralWorkspace ws(16);

  SECTION("zero data stays at rest") {
    ExperimentConfig c = small_limit();
    c.phi0_modes.clear();
    const RunReport r = run_experiment(c, ws);
    REQUIRE(r.completed);
    for (const DiagnosticsRow& row : r.rows) {
      CHECK(row.H_eps == 0.0);
      CHECK(row.norm_rho_gamma == 0.0);
      CHECK(row.norm_mom == 0.0);
      CHECK(row.norm_kinetic == 0.0);
      CHECK(row.norm_G == 0.0);
      CHECK(row.norm_cap == 0.0);
      CHECK(row.visc_accum == 0.0);
    }
  }

  SECTION("rows, CSV and snapshots") {
    const fs::path dir = scratch_dir("limit");
    ExperimentConfig c = small_limit();
    c.output_dir = dir.string();
    c.snapshot_every = 4;
    const RunReport r = run_experiment(c, ws, default_output(c, "limit"));
    REQUIRE(r.completed);
    REQUIRE(r.rows.size() == 11);
    for (std::size_t n = 0; n < r.rows.size(); ++n) {
      CHECK(r.rows[n].t == Catch::Approx(0.002 * n).margin(1e-15));
      if (n) CHECK(r.rows[n].t > r.rows[n - 1].t);
      CHECK(r.rows[n].H_eps >= 0.0);
    }
    CHECK(r.rows.back().t == 0.02);
    CHECK(r.max_mass_drift <= 1e-12);

    std::ifstream f(dir / "limit.csv");
    std::stringstream text;
    text << f.rdbuf();
    CHECK(text.str() == r.csv);
    const auto lines = split_lines(r.csv);
    REQUIRE(lines.size() == 12);
    CHECK(lines[0] == "t,mass,E_eps,D_eps,E_0,D_0,H_eps,visc_accum,norm_rho_gamma,norm_mom,norm_kinetic,norm_G,norm_cap");
    const auto vals = test::split_csv(lines[5]);
    REQUIRE(vals.size() == 13);
    for (const std::string& v : vals) {
      const auto mant = v.substr(0, v.find('e'));
      std::size_t digits = 0;
      for (char ch : mant) digits += std::isdigit(static_cast<unsigned char>(ch)) ? 1 : 0;
      CHECK(digits >= 15);
    }
    const DiagnosticsRow& r4 = r.rows[4];
    CHECK(std::stod(vals[6]) == r4.H_eps);
    CHECK(std::stod(vals[8]) == r4.norm_rho_gamma);

    // snapshots at steps 0, 4, 8
    CHECK(fs::exists(dir / "limit_000000.nskg"));
    CHECK(fs::exists(dir / "limit_000004.nskg"));
    CHECK(fs::exists(dir / "limit_000008.nskg"));
    CHECK_FALSE(fs::exists(dir / "limit_000010.nskg"));

    std::ifstream sf(dir / "limit_000000.nskg", std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(sf)), std::istreambuf_iterator<char>());
    const std::size_t field_bytes = 16 * 16 * 8;
    REQUIRE(bytes.size() == 16 + (4 + 3) + (4 + 5) * 2 + (4 + 3) + 4 * field_bytes);
    CHECK(bytes.substr(0, 4) == "NSKG");
    auto u32 = [&](std::size_t at) {
      return std::uint32_t(std::uint8_t(bytes[at])) | std::uint32_t(std::uint8_t(bytes[at + 1])) << 8 |
             std::uint32_t(std::uint8_t(bytes[at + 2])) << 16 | std::uint32_t(std::uint8_t(bytes[at + 3])) << 24;
    };
    CHECK(u32(4) == 1);
    CHECK(u32(8) == 16);
    CHECK(u32(12) == 4);
    CHECK(u32(16) == 3);
    CHECK(bytes.substr(20, 3) == "rho");
    const InitialData init = generate_initial(c, ws);
    // first value of rho, little-endian; row-major (i, j) -> i*N + j
    std::uint64_t raw = 0;
    for (int b = 0; b < 8; ++b) raw |= std::uint64_t(std::uint8_t(bytes[23 + b])) << (8 * b);
    CHECK(std::bit_cast<double>(raw) == init.nsk.rho(0, 0));
    raw = 0;
    for (int b = 0; b < 8; ++b) raw |= std::uint64_t(std::uint8_t(bytes[23 + 8 * 17 + b])) << (8 * b);
    CHECK(std::bit_cast<double>(raw) == init.nsk.rho(1, 1));

    const Snapshot s = read_snapshot(dir / "limit_000000.nskg");
    REQUIRE(s.fields.size() == 4);
    CHECK(s.fields[0].first == "rho");
    CHECK(s.fields[1].first == "mom_x");
    CHECK(s.fields[2].first == "mom_y");
    CHECK(s.fields[3].first == "phi");
    CHECK(s.fields[0].second == init.nsk.rho);
    CHECK(s.fields[2].second == init.nsk.mom.y);
    CHECK(s.fields[3].second == init.qg.phi);
    CHECK_THROWS(decode_snapshot(bytes.substr(0, bytes.size() - 1)));
    CHECK_THROWS(decode_snapshot("NSKX" + bytes.substr(4)));
  }

  SECTION("deterministic") {
    const ExperimentConfig c = small_limit(0.1);
    const RunReport a = run_experiment(c, ws);
    const RunReport b = run_experiment(c, SpectralWorkspace(16));
    CHECK(a.csv == b.csv);
  }

  SECTION("solver failure keeps the last good time") {
    ExperimentConfig c = parse_config(
        R"({"experiment": "limit", "N": 32, "T": 0.3, "dt": 0.02, "scheme": "rk4"})");
    const RunReport r = run_experiment(c, SpectralWorkspace(32));
    CHECK_FALSE(r.completed);
    CHECK(r.steps == r.rows.size() - 1);
    CHECK(r.last_good_t == r.rows.back().t);
    CHECK(r.last_good_t < 0.3);
    const auto lines = split_lines(r.csv);
    CHECK(lines.back().rfind("# aborted: step " + std::to_string(r.steps), 0) == 0);
    CHECK(lines.back().find("last_good_t=" + format_real(r.last_good_t)) != std::string::npos);
  }
}

TEST_CASE("single-model runs", "[experiment]") {
  const SpectralWorkspace ws(16);
  ExperimentConfig c = parse_config(R"({"experiment": "nsk", "N": 16, "T": 0.05, "dt": 0.001})");
  const RunReport n = run_experiment(c, ws);
  REQUIRE(n.completed);
  CHECK(split_lines(n.csv)[0] == "t,mass,E_eps,D_eps,dissipated");
  CHECK(n.max_mass_drift < 1e-12);
  const double e0 = n.rows.front().E_eps;
  CHECK(std::abs(n.rows.back().E_eps + n.dissipated.back() - e0) / e0 < 1e-5);

  c = parse_config(R"({"experiment": "qg", "N": 16, "T": 0.2})");
  const RunReport q = run_experiment(c, ws);
  REQUIRE(q.completed);
  CHECK(split_lines(q.csv)[0] == "t,E_0,D_0,dissipated");
  CHECK(q.rows.back().t == 0.2);
  const double q0 = q.rows.front().E_0;
  CHECK(std::abs(q.rows.back().E_0 + q.dissipated.back() - q0) / q0 < 1e-3);
}

TEST_CASE("H_eps follows a Gronwall-type envelope", "[experiment][slow]") {
  // gamma = 2, s = alpha = 1/2, eps = 0.2, N = 64, T = 0.5
  ExperimentConfig c = parse_config(R"({"experiment": "limit", "dt": 0.001})");
  const RunReport r = run_experiment(c, SpectralWorkspace(64));
  REQUIRE(r.completed);
  CHECK(r.max_mass_drift <= 1e-10);
  // least-squares C in log H(t) = log H(0) + C t
  const double h0 = r.rows.front().H_eps;
  REQUIRE(h0 > 0.0);
  double stt = 0.0, sty = 0.0;
  for (const DiagnosticsRow& row : r.rows) {
    stt += row.t * row.t;
    sty += row.t * std::log(row.H_eps / h0);
  }
  const double rate = sty / stt;
  for (const DiagnosticsRow& row : r.rows) {
    const double env = h0 * std::exp(rate * row.t);
    CHECK(row.H_eps <= 10.0 * env);
    CHECK(row.H_eps >= 0.1 * env);
  }
}

TEST_CASE("sweeps", "[experiment][sweep]") {
  const fs::path dir = scratch_dir("sweep");
  ExperimentConfig c = parse_config(
      R"({"experiment": "sweep", "N": 16, "T": 0.02, "dt": 0.002, "eps_list": [0.4, 0.28, 0.2, 0.14, 0.1]})");
  c.output_dir = dir.string();

  const SweepResult serial = run_sweep(c, 1);
  const SweepResult parallel = run_sweep(c, 3, false);
  REQUIRE(serial.runs.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(serial.runs[i].eps == c.eps_list[i]);
    CHECK(serial.runs[i].csv == parallel.runs[i].csv);
    CHECK(serial.runs[i].sup_H == parallel.runs[i].sup_H);
  }
  REQUIRE(serial.fit_rho_gamma);
  CHECK(serial.fit_rho_gamma->slope == parallel.fit_rho_gamma->slope);
  CHECK(serial.config_hash == config_hash(c));
  CHECK(fs::exists(dir / "sweep_eps0.14.csv"));
  const auto summary = split_lines([&] {
    std::ifstream f(dir / "sweep_summary.csv");
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
  }());
  REQUIRE(summary.size() == 7);
  CHECK(summary[0].rfind("# config_hash=", 0) == 0);
  CHECK(summary[1].rfind("eps,completed,last_good_t,t,mass", 0) == 0);
  CHECK(fs::exists(dir / "sweep_fits.csv"));

  // vacuum in the initial data at large eps marks those runs failed
  c.output_dir = (dir / "partial").string();
  c.phi0_modes = {{1, 0, 1.5, 0.0}};
  c.eps_list = {0.8, 0.56, 0.4, 0.28};
  const SweepResult partial = run_sweep(c, 2);
  CHECK_FALSE(partial.runs[0].completed);
  CHECK(partial.runs[0].failure.find("initial density") != std::string::npos);
  CHECK(partial.succeeded() == 3);
  REQUIRE(partial.fit_rho_gamma);

  c.phi0_modes = {{1, 0, 2.2, 0.0}};
  CHECK_THROWS_AS(run_sweep(c, 2), SweepError);
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <thread>

#include "nskqg/random_fields.hpp"
#include "nskqg/spectral.hpp"
#include "test_helpers.hpp"

using namespace nskqg;
using nskqg::test::max_diff;
using nskqg::test::rel_diff;
using std::numbers::pi;

TEST_CASE("workspace construction and dealias band", "[spectral]") {
  CHECK(create_workspace(8).cutoff() == 2);
  CHECK(create_workspace(64).cutoff() == 21);
  CHECK_THROWS_AS(create_workspace(7), ConfigError);
  CHECK_THROWS_AS(create_workspace(6), ConfigError);
  CHECK_THROWS_AS(create_workspace(0), ConfigError);

  const auto ws = create_workspace(16);
  std::size_t kept = 0;
  for (std::size_t q = 0; q < ws.spectral_size(); ++q) {
    const bool in_band = std::max(std::abs(ws.k1(q)), std::abs(ws.k2(q))) <= 5;
    CHECK(ws.kept(q) == in_band);
    kept += ws.kept(q);
  }
  // k1 in [-5, 5], k2 in [0, 5]
  CHECK(kept == 11u * 6u);
}

TEST_CASE("forward/backward round trip", "[spectral][property]") {
  const auto ws = create_workspace(32);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    ScalarField f(ws.n());
    for (double& x : f.values()) x = u(rng);
    const ScalarField g = ws.backward(ws.forward(f));
    CHECK(max_diff(f, g) <= 1e-12 * f.max_abs());
  }
}

TEST_CASE("operators on single modes", "[spectral]") {
  const auto ws = create_workspace(32);
  const auto s1 = sample(ws, [](double x, double) { return std::sin(x); });
  const auto c1 = sample(ws, [](double x, double) { return std::cos(x); });
  const auto zero = ScalarField(ws.n());

  const VectorField g = grad(s1, ws);
  CHECK(max_diff(g.x, c1) < 1e-13);
  CHECK(max_diff(g.y, zero) < 1e-13);

  const auto phi = sample(ws, [](double x, double y) { return std::cos(x) * std::cos(y); });
  const VectorField v = perp_grad(phi, ws);
  CHECK(rel_diff(div_perp(v, ws), laplacian(phi, ws)) < 1e-13);
  CHECK(div(v, ws).max_abs() < 1e-13);

  // roundoff in the empty high modes is amplified by |k|^4
  CHECK(max_diff(bilaplacian(c1, ws), c1) < 1e-10);
}

TEST_CASE("every retained mode matches its analytic symbol", "[spectral][property]") {
  const auto ws = create_workspace(16);
  const int kc = ws.cutoff();
  for (int k1 = -kc; k1 <= kc; ++k1) {
    for (int k2 = -kc; k2 <= kc; ++k2) {
      const auto c = sample(ws, [&](double x, double y) { return std::cos(k1 * x + k2 * y); });
      const auto s = sample(ws, [&](double x, double y) { return std::sin(k1 * x + k2 * y); });
      const double kk = k1 * k1 + k2 * k2;
      const double tol = 1e-12 * std::max(1.0, kk * kk);
      const VectorField g = grad(c, ws);
      CHECK(max_diff(g.x, -k1 * s) <= tol);
      CHECK(max_diff(g.y, -k2 * s) <= tol);
      const VectorField pg = perp_grad(c, ws);
      CHECK(max_diff(pg.x, k2 * s) <= tol);
      CHECK(max_diff(pg.y, -k1 * s) <= tol);
      CHECK(max_diff(laplacian(c, ws), -kk * c) <= tol);
      CHECK(max_diff(bilaplacian(c, ws), (kk * kk) * c) <= tol);
      CHECK(max_diff(div(VectorField(c, s), ws), -k1 * s + k2 * c) <= tol);
      CHECK(max_diff(div_perp(VectorField(c, s), ws), k2 * s + k1 * c) <= tol);
    }
  }
}

TEST_CASE("differentiate dispatch checks rank", "[spectral]") {
  const auto ws = create_workspace(8);
  const ScalarField f(ws.n(), 1.0);
  const VectorField v(ws.n(), 1.0, 2.0);
  CHECK_THROWS_AS(differentiate(f, DiffOp::div, ws), UsageError);
  CHECK_THROWS_AS(differentiate(f, DiffOp::div_perp, ws), UsageError);
  CHECK_THROWS_AS(differentiate(v, DiffOp::grad, ws), UsageError);
  CHECK_THROWS_AS(differentiate(v, DiffOp::laplacian, ws), UsageError);
  CHECK(std::holds_alternative<VectorField>(differentiate(f, DiffOp::perp_grad, ws)));
  CHECK(std::holds_alternative<ScalarField>(differentiate(v, DiffOp::div, ws)));
}

TEST_CASE("symmetric gradient and tensor divergence", "[spectral]") {
  const auto ws = create_workspace(32);
  const SymTensorField d0 = sym_gradient(VectorField(ws.n(), 0.3, -1.2), ws);
  CHECK(d0.xx.max_abs() < 1e-14);
  CHECK(d0.xy.max_abs() < 1e-14);
  CHECK(d0.yy.max_abs() < 1e-14);

  // phi = cos x1: grad_perp phi = (0, -sin x1), so D11 = D22 = 0 and
  // D12 = (d2 v1 + d1 v2)/2 = -cos(x1)/2.
  const auto phi = sample(ws, [](double x, double) { return std::cos(x); });
  const SymTensorField d = sym_gradient(perp_grad(phi, ws), ws);
  CHECK(d.xx.max_abs() < 1e-13);
  CHECK(d.yy.max_abs() < 1e-13);
  CHECK(max_diff(d.xy, sample(ws, [](double x, double) { return -0.5 * std::cos(x); })) < 1e-13);

  const auto phi2 = sample(ws, [](double x, double y) { return std::cos(x) * std::cos(y); });
  ScalarField lhs = div_perp(div_tensor(sym_gradient(perp_grad(phi2, ws), ws), ws), ws);
  lhs *= 2.0;
  CHECK(rel_diff(lhs, bilaplacian(phi2, ws)) < 1e-12);
}

TEST_CASE("grad-perp identities on random band-limited fields", "[spectral][property]") {
  const auto ws = create_workspace(64);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ScalarField phi = band_limited_random(ws, ws.n() / 6, seed);
    const VectorField v = perp_grad(phi, ws);
    // div_perp div(v x v) = (v . grad) lap phi
    const SymTensorField vv{v.x * v.x, v.x * v.y, v.y * v.y};
    const ScalarField lhs = div_perp(div_tensor(vv, ws), ws);
    const VectorField gl = grad(laplacian(phi, ws), ws);
    const ScalarField rhs = v.x * gl.x + v.y * gl.y;
    CHECK(rel_diff(lhs, rhs) <= 1e-8);

    ScalarField lhs2 = div_perp(div_tensor(sym_gradient(v, ws), ws), ws);
    lhs2 *= 2.0;
    CHECK(rel_diff(lhs2, bilaplacian(phi, ws)) <= 1e-10);
  }
}

TEST_CASE("dealiasing", "[spectral]") {
  const auto ws = create_workspace(16);
  const auto low = sample(ws, [](double x, double y) { return std::cos(2 * x - 3 * y) + 0.5; });
  CHECK(max_diff(dealias(low, ws), low) < 1e-14);

  const auto high = sample(ws, [](double x, double) { return std::cos(7 * x); });
  CHECK(dealias(high, ws).max_abs() < 1e-14);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  ScalarField f(ws.n());
  for (double& x : f.values()) x = n(rng);
  const ScalarField once = dealias(f, ws);
  CHECK(max_diff(dealias(once, ws), once) < 1e-14);
}

TEST_CASE("L^p quadrature", "[spectral]") {
  const auto ws = create_workspace(32);
  const ScalarField c(ws.n(), -1.5);
  CHECK(lp_norm(c, 2.0, ws) == Catch::Approx(1.5 * 2.0 * pi).epsilon(1e-14));
  CHECK(lp_norm(c, kInf, ws) == 1.5);
  CHECK(lp_norm(c, 1.0, ws) == Catch::Approx(1.5 * 4.0 * pi * pi).epsilon(1e-14));
  const auto s1 = sample(ws, [](double x, double) { return std::sin(x); });
  CHECK(lp_norm(s1, 2.0, ws) == Catch::Approx(std::sqrt(2.0) * pi).epsilon(1e-14));
  CHECK_THROWS_AS(lp_norm(c, 0.5, ws), UsageError);
  CHECK(lp_norm(VectorField(ws.n(), 3.0, 4.0), 2.0, ws) ==
        Catch::Approx(5.0 * 2.0 * pi).epsilon(1e-14));
}

TEST_CASE("L^2 quadrature equals the Parseval sum", "[spectral][property]") {
  const auto ws = create_workspace(16);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 10; ++trial) {
    ScalarField f(ws.n());
    for (double& x : f.values()) x = n(rng);
    const Spectrum s = ws.forward(f);
    double sum = 0.0;
    for (std::size_t q = 0; q < s.size(); ++q) {
      const int b = ws.k2(q);
      const double w = (b == 0 || b == ws.n() / 2) ? 1.0 : 2.0;
      sum += w * std::norm(s[q]);
    }
    const double n4 = std::pow(static_cast<double>(ws.n()), 4);
    const double parseval = 4.0 * pi * pi * sum / n4;
    const double l2 = lp_norm(f, 2.0, ws);
    CHECK(std::abs(l2 * l2 - parseval) <= 1e-12 * parseval);
  }
}

TEST_CASE("workspace is usable from several threads", "[spectral]") {
  const auto ws = create_workspace(64);
  const ScalarField phi = band_limited_random(ws, 10, 5);
  const ScalarField ref = laplacian(phi, ws);
  ScalarField a, b;
  std::thread t1([&] { a = laplacian(phi, ws); });
  std::thread t2([&] { b = laplacian(phi, ws); });
  t1.join();
  t2.join();
  CHECK(a == ref);
  CHECK(b == ref);
}

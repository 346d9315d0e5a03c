#pragma once

// Fourier calculus on the uniform N x N grid over [0, 2pi)^2.
//
// Fields are stored row-major with the first index along x1:
//   values[i * N + j] = f(2 pi i / N, 2 pi j / N).
// Spectra use FFTW's real-to-complex half layout: index a * (N/2 + 1) + b,
// with k1 = a (a <= N/2) or a - N, and k2 = b in [0, N/2].

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nskqg/errors.hpp"

namespace nskqg {

using Complex = std::complex<double>;
using Spectrum = std::vector<Complex>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(int n, double value = 0.0)
      : n_(n), v_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), value) {}

  int n() const noexcept { return n_; }
  std::size_t size() const noexcept { return v_.size(); }

  double& operator()(int i, int j) { return v_[static_cast<std::size_t>(i) * n_ + j]; }
  double operator()(int i, int j) const { return v_[static_cast<std::size_t>(i) * n_ + j]; }
  double& operator[](std::size_t idx) { return v_[idx]; }
  double operator[](std::size_t idx) const { return v_[idx]; }

  std::span<double> values() noexcept { return v_; }
  std::span<const double> values() const noexcept { return v_; }
  double* data() noexcept { return v_.data(); }
  const double* data() const noexcept { return v_.data(); }

  ScalarField& operator+=(const ScalarField& o) {
    for (std::size_t q = 0; q < v_.size(); ++q) v_[q] += o.v_[q];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    for (std::size_t q = 0; q < v_.size(); ++q) v_[q] -= o.v_[q];
    return *this;
  }
  ScalarField& operator*=(const ScalarField& o) {
    for (std::size_t q = 0; q < v_.size(); ++q) v_[q] *= o.v_[q];
    return *this;
  }
  ScalarField& operator*=(double a) {
    for (double& x : v_) x *= a;
    return *this;
  }
  ScalarField& operator+=(double a) {
    for (double& x : v_) x += a;
    return *this;
  }

  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(ScalarField a, const ScalarField& b) { return a *= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
  friend ScalarField operator*(ScalarField a, double s) { return a *= s; }
  friend ScalarField operator+(ScalarField a, double s) { return a += s; }
  friend ScalarField operator-(ScalarField a) { return a *= -1.0; }

  bool all_finite() const {
    return std::all_of(v_.begin(), v_.end(), [](double x) { return std::isfinite(x); });
  }
  double min() const { return *std::min_element(v_.begin(), v_.end()); }
  double max() const { return *std::max_element(v_.begin(), v_.end()); }
  double max_abs() const {
    double m = 0.0;
    for (double x : v_) m = std::max(m, std::abs(x));
    return m;
  }

  friend bool operator==(const ScalarField&, const ScalarField&) = default;

 private:
  int n_ = 0;
  std::vector<double> v_;
};

/// Pointwise image of a field under fn.
template <class Fn>
ScalarField map(const ScalarField& f, Fn&& fn) {
  ScalarField out(f.n());
  for (std::size_t q = 0; q < f.size(); ++q) out[q] = fn(f[q]);
  return out;
}

struct VectorField {
  ScalarField x;
  ScalarField y;

  VectorField() = default;
  explicit VectorField(int n, double vx = 0.0, double vy = 0.0) : x(n, vx), y(n, vy) {}
  VectorField(ScalarField a, ScalarField b) : x(std::move(a)), y(std::move(b)) {}

  int n() const noexcept { return x.n(); }

  VectorField& operator+=(const VectorField& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  VectorField& operator-=(const VectorField& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  VectorField& operator*=(double a) {
    x *= a;
    y *= a;
    return *this;
  }
  /// Componentwise scaling by a scalar field.
  VectorField& operator*=(const ScalarField& s) {
    x *= s;
    y *= s;
    return *this;
  }
  friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
  friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
  friend VectorField operator*(double s, VectorField a) { return a *= s; }
  friend VectorField operator*(const ScalarField& s, VectorField a) { return a *= s; }

  bool all_finite() const { return x.all_finite() && y.all_finite(); }
  friend bool operator==(const VectorField&, const VectorField&) = default;
};

/// Pointwise Euclidean magnitude.
inline ScalarField magnitude(const VectorField& v) {
  ScalarField out(v.n());
  for (std::size_t q = 0; q < out.size(); ++q) out[q] = std::hypot(v.x[q], v.y[q]);
  return out;
}

inline ScalarField dot(const VectorField& a, const VectorField& b) {
  return a.x * b.x + a.y * b.y;
}

/// Symmetric 2x2 tensor field; the off-diagonal entry is stored once.
struct SymTensorField {
  ScalarField xx;
  ScalarField xy;
  ScalarField yy;

  int n() const noexcept { return xx.n(); }
  SymTensorField& operator-=(const SymTensorField& o) {
    xx -= o.xx;
    xy -= o.xy;
    yy -= o.yy;
    return *this;
  }
  SymTensorField& operator*=(const ScalarField& s) {
    xx *= s;
    xy *= s;
    yy *= s;
    return *this;
  }
  friend SymTensorField operator-(SymTensorField a, const SymTensorField& b) { return a -= b; }
};

/// Frobenius norm squared, T:T = T11^2 + 2 T12^2 + T22^2.
inline ScalarField frobenius_squared(const SymTensorField& t) {
  ScalarField out(t.n());
  for (std::size_t q = 0; q < out.size(); ++q) {
    out[q] = t.xx[q] * t.xx[q] + 2.0 * t.xy[q] * t.xy[q] + t.yy[q] * t.yy[q];
  }
  return out;
}

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwPlans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  explicit FftwPlans(int n) {
    const std::size_t real_size = static_cast<std::size_t>(n) * n;
    const std::size_t half_size = static_cast<std::size_t>(n) * (n / 2 + 1);
    std::lock_guard lock(fftw_planner_mutex());
    double* in = fftw_alloc_real(real_size);
    fftw_complex* out = fftw_alloc_complex(half_size);
    // ESTIMATE keeps plan selection deterministic; UNALIGNED lets us execute
    // on std::vector storage.
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward = fftw_plan_dft_r2c_2d(n, n, in, out, flags);
    backward = fftw_plan_dft_c2r_2d(n, n, out, in, flags);
    fftw_free(in);
    fftw_free(out);
  }
  FftwPlans(const FftwPlans&) = delete;
  FftwPlans& operator=(const FftwPlans&) = delete;
  ~FftwPlans() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }
};

}  // namespace detail

/// Grid, wavenumbers, dealiasing mask and transform plans for one resolution.
/// Immutable after construction; copies share the plans and are safe to use
/// concurrently (each transform call uses its own scratch).
class SpectralWorkspace {
 public:
  explicit SpectralWorkspace(int n) : n_(n), nh_(n / 2 + 1) {
    if (n < 8 || n % 2 != 0) {
      throw ConfigError("grid size N must be even and >= 8 (got " + std::to_string(n) + ")");
    }
    cutoff_ = n / 3;
    const std::size_t ns = spectral_size();
    k1_.resize(ns);
    k2_.resize(ns);
    kept_.resize(ns);
    for (int a = 0; a < n_; ++a) {
      for (int b = 0; b < nh_; ++b) {
        const std::size_t idx = static_cast<std::size_t>(a) * nh_ + b;
        k1_[idx] = a <= n_ / 2 - 1 ? a : a - n_;  // a = N/2 maps to -N/2
        k2_[idx] = b;
        kept_[idx] = std::max(std::abs(k1_[idx]), std::abs(k2_[idx])) <= cutoff_;
      }
    }
    plans_ = std::make_shared<const detail::FftwPlans>(n);
  }

  int n() const noexcept { return n_; }
  int half_n() const noexcept { return nh_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(n_) * n_; }
  std::size_t spectral_size() const noexcept { return static_cast<std::size_t>(n_) * nh_; }
  double length() const noexcept { return kTwoPi; }
  double dx() const noexcept { return kTwoPi / n_; }
  double cell_area() const noexcept { return dx() * dx(); }
  double x(int i) const noexcept { return kTwoPi * i / n_; }
  /// Largest retained |k| component under the 2/3 rule, floor(N/3).
  int cutoff() const noexcept { return cutoff_; }

  int k1(std::size_t idx) const { return k1_[idx]; }
  int k2(std::size_t idx) const { return k2_[idx]; }
  bool kept(std::size_t idx) const { return kept_[idx]; }

  /// Wavenumbers entering derivative symbols: Nyquist components set to 0.
  double dk1(std::size_t idx) const { return std::abs(k1_[idx]) == n_ / 2 ? 0.0 : k1_[idx]; }
  double dk2(std::size_t idx) const { return std::abs(k2_[idx]) == n_ / 2 ? 0.0 : k2_[idx]; }
  double k_squared(std::size_t idx) const {
    const double a = dk1(idx), b = dk2(idx);
    return a * a + b * b;
  }

  /// Unnormalized forward transform.
  Spectrum forward(const ScalarField& f) const {
    check_size(f);
    Spectrum out(spectral_size());
    // r2c does not modify its input for out-of-place plans.
    fftw_execute_dft_r2c(plans_->forward, const_cast<double*>(f.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
    return out;
  }

  /// Inverse transform including the 1/N^2 normalization.
  ScalarField backward(const Spectrum& s) const {
    Spectrum scratch(s);  // c2r destroys its input
    ScalarField out(n_);
    fftw_execute_dft_c2r(plans_->backward, reinterpret_cast<fftw_complex*>(scratch.data()),
                         out.data());
    out *= 1.0 / static_cast<double>(size());
    return out;
  }

 private:
  void check_size(const ScalarField& f) const {
    if (f.n() != n_) {
      throw UsageError("field resolution " + std::to_string(f.n()) +
                       " does not match workspace N=" + std::to_string(n_));
    }
  }

  int n_;
  int nh_;
  int cutoff_ = 0;
  std::vector<int> k1_;
  std::vector<int> k2_;
  std::vector<bool> kept_;
  std::shared_ptr<const detail::FftwPlans> plans_;
};

inline SpectralWorkspace create_workspace(int n) { return SpectralWorkspace(n); }

/// Sample fn(x1, x2) on the grid.
template <class Fn>
ScalarField sample(const SpectralWorkspace& ws, Fn&& fn) {
  ScalarField f(ws.n());
  for (int i = 0; i < ws.n(); ++i) {
    for (int j = 0; j < ws.n(); ++j) f(i, j) = fn(ws.x(i), ws.x(j));
  }
  return f;
}

// ---------------------------------------------------------------------------
// Differential operators. Each is the exact derivative of the trigonometric
// interpolant.

namespace detail {

constexpr Complex kI{0.0, 1.0};

template <class Symbol>
ScalarField apply_symbol(const SpectralWorkspace& ws, const Spectrum& fh, Symbol&& sym) {
  Spectrum out(fh.size());
  for (std::size_t q = 0; q < fh.size(); ++q) out[q] = sym(q) * fh[q];
  return ws.backward(out);
}

}  // namespace detail

inline VectorField grad(const ScalarField& f, const SpectralWorkspace& ws) {
  const Spectrum fh = ws.forward(f);
  return {detail::apply_symbol(ws, fh, [&](std::size_t q) { return detail::kI * ws.dk1(q); }),
          detail::apply_symbol(ws, fh, [&](std::size_t q) { return detail::kI * ws.dk2(q); })};
}

/// grad-perp f = (-d2 f, d1 f).
inline VectorField perp_grad(const ScalarField& f, const SpectralWorkspace& ws) {
  const Spectrum fh = ws.forward(f);
  return {detail::apply_symbol(ws, fh, [&](std::size_t q) { return -detail::kI * ws.dk2(q); }),
          detail::apply_symbol(ws, fh, [&](std::size_t q) { return detail::kI * ws.dk1(q); })};
}

inline ScalarField div(const VectorField& v, const SpectralWorkspace& ws) {
  const Spectrum a = ws.forward(v.x);
  const Spectrum b = ws.forward(v.y);
  Spectrum out(a.size());
  for (std::size_t q = 0; q < a.size(); ++q) {
    out[q] = detail::kI * (ws.dk1(q) * a[q] + ws.dk2(q) * b[q]);
  }
  return ws.backward(out);
}

/// div-perp (v1, v2) = -d2 v1 + d1 v2.
inline ScalarField div_perp(const VectorField& v, const SpectralWorkspace& ws) {
  const Spectrum a = ws.forward(v.x);
  const Spectrum b = ws.forward(v.y);
  Spectrum out(a.size());
  for (std::size_t q = 0; q < a.size(); ++q) {
    out[q] = detail::kI * (-ws.dk2(q) * a[q] + ws.dk1(q) * b[q]);
  }
  return ws.backward(out);
}

inline ScalarField laplacian(const ScalarField& f, const SpectralWorkspace& ws) {
  return detail::apply_symbol(ws, ws.forward(f),
                              [&](std::size_t q) { return Complex(-ws.k_squared(q)); });
}

inline ScalarField bilaplacian(const ScalarField& f, const SpectralWorkspace& ws) {
  return detail::apply_symbol(ws, ws.forward(f), [&](std::size_t q) {
    const double k2 = ws.k_squared(q);
    return Complex(k2 * k2);
  });
}

/// D(v) = (grad v + grad v^T) / 2.
inline SymTensorField sym_gradient(const VectorField& v, const SpectralWorkspace& ws) {
  const Spectrum a = ws.forward(v.x);
  const Spectrum b = ws.forward(v.y);
  Spectrum xx(a.size()), xy(a.size()), yy(a.size());
  for (std::size_t q = 0; q < a.size(); ++q) {
    const Complex d1 = detail::kI * ws.dk1(q);
    const Complex d2 = detail::kI * ws.dk2(q);
    xx[q] = d1 * a[q];
    yy[q] = d2 * b[q];
    xy[q] = 0.5 * (d2 * a[q] + d1 * b[q]);
  }
  return {ws.backward(xx), ws.backward(xy), ws.backward(yy)};
}

/// Row-wise divergence: (d1 T11 + d2 T12, d1 T12 + d2 T22).
inline VectorField div_tensor(const SymTensorField& t, const SpectralWorkspace& ws) {
  const Spectrum a = ws.forward(t.xx);
  const Spectrum c = ws.forward(t.xy);
  const Spectrum b = ws.forward(t.yy);
  Spectrum ox(a.size()), oy(a.size());
  for (std::size_t q = 0; q < a.size(); ++q) {
    const Complex d1 = detail::kI * ws.dk1(q);
    const Complex d2 = detail::kI * ws.dk2(q);
    ox[q] = d1 * a[q] + d2 * c[q];
    oy[q] = d1 * c[q] + d2 * b[q];
  }
  return {ws.backward(ox), ws.backward(oy)};
}

enum class DiffOp { grad, div, laplacian, bilaplacian, perp_grad, div_perp };

using AnyField = std::variant<ScalarField, VectorField>;

/// Rank-checked dispatch over the differential operators.
inline AnyField differentiate(const AnyField& f, DiffOp op, const SpectralWorkspace& ws) {
  const bool scalar = std::holds_alternative<ScalarField>(f);
  const bool wants_scalar = op != DiffOp::div && op != DiffOp::div_perp;
  if (scalar != wants_scalar) {
    throw UsageError(wants_scalar ? "operator requires a scalar field"
                                  : "operator requires a vector field");
  }
  switch (op) {
    case DiffOp::grad:
      return grad(std::get<ScalarField>(f), ws);
    case DiffOp::perp_grad:
      return perp_grad(std::get<ScalarField>(f), ws);
    case DiffOp::laplacian:
      return laplacian(std::get<ScalarField>(f), ws);
    case DiffOp::bilaplacian:
      return bilaplacian(std::get<ScalarField>(f), ws);
    case DiffOp::div:
      return div(std::get<VectorField>(f), ws);
    case DiffOp::div_perp:
      return div_perp(std::get<VectorField>(f), ws);
  }
  throw UsageError("unknown differential operator");
}

// ---------------------------------------------------------------------------
// 2/3-rule dealiasing.

inline void dealias_in_place(Spectrum& s, const SpectralWorkspace& ws) {
  for (std::size_t q = 0; q < s.size(); ++q) {
    if (!ws.kept(q)) s[q] = 0.0;
  }
}

inline ScalarField dealias(const ScalarField& f, const SpectralWorkspace& ws) {
  Spectrum s = ws.forward(f);
  dealias_in_place(s, ws);
  return ws.backward(s);
}

inline VectorField dealias(const VectorField& v, const SpectralWorkspace& ws) {
  return {dealias(v.x, ws), dealias(v.y, ws)};
}

// ---------------------------------------------------------------------------
// Quadrature.

/// Integral over the torus by the uniform rule (exact for trig polynomials
/// of degree < N).
inline double integrate(const ScalarField& f, const SpectralWorkspace& ws) {
  double sum = 0.0;
  for (double x : f.values()) sum += x;
  return sum * ws.cell_area();
}

inline double mean(const ScalarField& f) {
  double sum = 0.0;
  for (double x : f.values()) sum += x;
  return sum / static_cast<double>(f.size());
}

namespace detail {

inline double lp_of_abs(const ScalarField& absf, double p, const SpectralWorkspace& ws) {
  if (std::isnan(p) || p < 1.0) throw UsageError("L^p norm requires p >= 1");
  if (std::isinf(p)) return absf.max_abs();
  double sum = 0.0;
  if (p == 2.0) {
    for (double x : absf.values()) sum += x * x;
    return std::sqrt(sum * ws.cell_area());
  }
  for (double x : absf.values()) sum += std::pow(std::abs(x), p);
  return std::pow(sum * ws.cell_area(), 1.0 / p);
}

}  // namespace detail

/// (sum |f|^p dx^2)^(1/p); p = infinity gives the max norm.
inline double lp_norm(const ScalarField& f, double p, const SpectralWorkspace& ws) {
  return detail::lp_of_abs(f, p, ws);
}

/// L^p norm of the pointwise Euclidean magnitude.
inline double lp_norm(const VectorField& v, double p, const SpectralWorkspace& ws) {
  return detail::lp_of_abs(magnitude(v), p, ws);
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace nskqg

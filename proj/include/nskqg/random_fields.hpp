#pragma once

#include <cstdint>
#include <random>

#include "nskqg/spectral.hpp"

namespace nskqg {

/// Smooth random field with modes max(|k1|, |k2|) <= kmax, coefficients
/// decaying like 1/(1 + |k|^2), zero mean, scaled to unit max norm.
inline ScalarField band_limited_random(const SpectralWorkspace& ws, int kmax, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  ScalarField noise(ws.n());
  for (double& x : noise.values()) x = normal(rng);
  Spectrum s = ws.forward(noise);
  for (std::size_t q = 0; q < s.size(); ++q) {
    const int a = std::abs(ws.k1(q)), b = std::abs(ws.k2(q));
    if (std::max(a, b) > kmax || (a == 0 && b == 0)) {
      s[q] = 0.0;
    } else {
      s[q] /= 1.0 + a * a + b * b;
    }
  }
  ScalarField f = ws.backward(s);
  const double m = f.max_abs();
  if (m > 0.0) f *= 1.0 / m;
  return f;
}

}  // namespace nskqg

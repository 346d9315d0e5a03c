#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "nskqg/errors.hpp"

namespace nskqg {

enum class Scheme { imex, rk4 };

/// Fixed step, or an advective CFL rule. For rk4 the CFL rule additionally
/// caps dt by the acoustic (c_wave eps dx) and capillary-dispersive
/// (c_disp eps^(1-alpha) dx^2) limits.
struct DtPolicy {
  enum class Kind { fixed, adaptive };
  Kind kind = Kind::fixed;
  double dt = 1e-3;
  double c_adv = 0.4;
  double c_wave = 0.5;
  double c_disp = 0.25;

  static DtPolicy fixed(double dt) {
    DtPolicy p;
    p.kind = Kind::fixed;
    p.dt = dt;
    return p;
  }
  static DtPolicy adaptive(double c_adv = 0.4, double c_wave = 0.5, double c_disp = 0.25) {
    DtPolicy p;
    p.kind = Kind::adaptive;
    p.c_adv = c_adv;
    p.c_wave = c_wave;
    p.c_disp = c_disp;
    return p;
  }
};

/// Time grid of a fixed-step run from t0 to t_end. Step times are computed as
/// t0 + n dt (no accumulation); the last step is shortened to land on t_end.
class FixedSchedule {
 public:
  FixedSchedule(double t0, double t_end, double dt) : t0_(t0), t_end_(t_end), dt_(dt) {
    if (!(dt > 0.0)) throw UsageError("time step must be positive");
    const double span = t_end - t0;
    steps_ = span <= 0.0 ? 0 : static_cast<long>(std::ceil(span / dt - 1e-9));
  }
  long steps() const noexcept { return steps_; }
  double time(long n) const noexcept { return n >= steps_ ? t_end_ : t0_ + n * dt_; }

 private:
  double t0_;
  double t_end_;
  double dt_;
  long steps_ = 0;
};

namespace detail {

/// Re-throws a solver failure with the step index attached, keeping its type.
template <class Body>
decltype(auto) annotate_step(long step, Body&& body) {
  try {
    return body();
  } catch (const VacuumError& e) {
    throw VacuumError("step " + std::to_string(step) + ": " + e.what(), e.t(), step);
  } catch (const BlowUpError& e) {
    throw BlowUpError("step " + std::to_string(step) + ": " + e.what(), e.t(), step);
  }
}

}  // namespace detail

}  // namespace nskqg

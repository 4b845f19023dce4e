#pragma once

#include "chaosesn/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

namespace chaosesn {

struct Tolerances {
  double rel = 1e-9;
  double abs = 1e-11;
};

/// Adaptive embedded Runge-Kutta 5(4) pair of Dormand and Prince (FSAL).
///
/// `advance` integrates exactly to a requested time; steps are clamped so they never
/// overshoot it, so a caller sampling on a uniform grid gets sub-step output without
/// interpolation. The accepted-step local error estimate is kept below one in the
/// scaled norm  sqrt(mean((e_i / (abs + rel * max|y_i|))^2)).
template <typename Rhs, typename Vector = Eigen::Vector3d>
class DormandPrince {
public:
  DormandPrince(Rhs rhs, Tolerances tol = {}) : rhs_(std::move(rhs)), tol_(tol) {}

  /// Integrates `y` from `t` to `t_end` in place. `t` is updated to `t_end`.
  void advance(Vector& y, double& t, double t_end) {
    if (t_end <= t) return;
    if (h_ <= 0.0) h_ = initial_step(y, t, t_end - t);
    Vector k1 = rhs_(y);
    while (t < t_end) {
      const double remaining = t_end - t;
      bool last = false;
      double h = h_;
      if (h >= remaining) {
        h = remaining;
        last = true;
      }
      if (h < 1e-14 * std::max(1.0, std::abs(t)))
        throw IntegrationError("step size underflow at t=" + std::to_string(t), t);

      const Vector k2 = rhs_(y + h * (a21 * k1));
      const Vector k3 = rhs_(y + h * (a31 * k1 + a32 * k2));
      const Vector k4 = rhs_(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
      const Vector k5 = rhs_(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const Vector k6 = rhs_(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      const Vector y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const Vector k7 = rhs_(y_new);
      const Vector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      const Vector scale = (tol_.abs + tol_.rel * y.cwiseAbs().cwiseMax(y_new.cwiseAbs()).array()).matrix();
      const double err_norm =
          std::sqrt((err.array() / scale.array()).square().mean());
      if (!std::isfinite(err_norm)) throw IntegrationError("non-finite state during integration", t);

      const double factor =
          err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
      if (err_norm <= 1.0) {
        t = last ? t_end : t + h;
        y = y_new;
        k1 = k7;
        // keep the unclamped proposal so grid clamping does not shrink the step forever
        h_ = last ? std::max(h_, h * factor) : h * factor;
        ++accepted_;
      } else {
        h_ = h * std::min(1.0, factor);
        ++rejected_;
      }
    }
  }

  long accepted_steps() const { return accepted_; }
  long rejected_steps() const { return rejected_; }

private:
  double initial_step(const Vector& y, double t, double span) {
    (void)t;
    const Vector f0 = rhs_(y);
    const Vector sc = (tol_.abs + tol_.rel * y.cwiseAbs().array()).matrix();
    const double d0 = std::sqrt((y.array() / sc.array()).square().mean());
    const double d1 = std::sqrt((f0.array() / sc.array()).square().mean());
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    return std::min(h, span);
  }

  static constexpr double a21 = 1.0 / 5.0;
  static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                          a54 = -212.0 / 729.0;
  static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                          a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
  static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                          b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
  static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                          e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

  Rhs rhs_;
  Tolerances tol_;
  double h_ = 0.0;
  long accepted_ = 0;
  long rejected_ = 0;
};

}  // namespace chaosesn

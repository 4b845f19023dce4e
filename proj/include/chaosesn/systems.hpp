#pragma once

#include "chaosesn/dormand_prince.hpp"
#include "chaosesn/errors.hpp"
#include "chaosesn/time_series.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

namespace chaosesn {

template <typename Scalar>
using State3 = Eigen::Matrix<Scalar, 3, 1>;

enum class SystemKind { Lorenz63, ChuaODE };

std::string to_string(SystemKind kind);
SystemKind system_kind_from_string(const std::string& name);

struct LorenzParams {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
};

/// Dimensionless Chua oscillator. `m0` is the inner-segment slope of the
/// piecewise-linear characteristic, `m1` the outer one.
struct ChuaParams {
  double alpha = 10.0;
  double beta = 9.77;
  double gamma = 0.58;
  double m0 = -1.301;
  double m1 = -0.735;
};

struct SystemSpec {
  SystemKind kind = SystemKind::Lorenz63;
  LorenzParams lorenz{};
  ChuaParams chua{};
  double dt = 0.01;
  std::size_t n_steps = 1;
  Tolerances tolerances{};

  /// Throws ArgumentError unless dt > 0 and n_steps >= 1.
  void validate() const;
};

SystemSpec default_lorenz_spec(std::size_t n_steps = 100000);
SystemSpec default_chua_spec(std::size_t n_steps = 75000);

/// Default initial condition used for dataset generation: (1,1,1) / (0.1,0,0).
Eigen::Vector3d default_initial_condition(SystemKind kind);

template <typename Scalar>
void require_finite(const State3<Scalar>& s, const char* who) {
  using std::isfinite;
  if (!(isfinite(s[0]) && isfinite(s[1]) && isfinite(s[2])))
    throw DomainError(std::string(who) + ": non-finite state");
}

template <typename Scalar>
State3<Scalar> lorenz_rhs(const State3<Scalar>& s, const LorenzParams& p) {
  require_finite(s, "lorenz_rhs");
  return {Scalar(p.sigma) * (s[1] - s[0]), s[0] * (Scalar(p.rho) - s[2]) - s[1],
          s[0] * s[1] - Scalar(p.beta) * s[2]};
}

/// Piecewise-linear Chua characteristic m1*x + (m0-m1)/2 * (|x+1| - |x-1|).
template <typename Scalar>
Scalar chua_phi(Scalar x, double m0, double m1) {
  using std::abs;
  using std::isfinite;
  if (!isfinite(x)) throw DomainError("chua_phi: non-finite input");
  return Scalar(m1) * x + Scalar(0.5 * (m0 - m1)) * (abs(x + Scalar(1)) - abs(x - Scalar(1)));
}

template <typename Scalar>
State3<Scalar> chua_rhs(const State3<Scalar>& s, const ChuaParams& p) {
  require_finite(s, "chua_rhs");
  return {Scalar(p.alpha) * (s[1] - s[0] - chua_phi(s[0], p.m0, p.m1)), s[0] - s[1] + s[2],
          -Scalar(p.beta) * s[1] - Scalar(p.gamma) * s[2]};
}

/// Vector field of `spec` evaluated at `s`.
Eigen::Vector3d system_rhs(const SystemSpec& spec, const Eigen::Vector3d& s);

/// Reference MLE (per unit time) used for Lyapunov-unit conversions: 0.974 / 0.105.
double reference_mle(SystemKind kind);

/// n_steps samples spaced dt apart starting at the initial condition.
TimeSeries integrate(const SystemSpec& spec, const Eigen::Vector3d& ic);

/// State after integrating for `duration` time units (used to discard transients).
Eigen::Vector3d advance_state(const SystemSpec& spec, const Eigen::Vector3d& ic, double duration);

/// Integrates from a settled point: the first `transient` time units are discarded.
TimeSeries attractor_trajectory(const SystemSpec& spec, const Eigen::Vector3d& ic, double transient);

/// Adds per-channel Gaussian noise with std sigma_rel * std(channel).
TimeSeries add_noise(const TimeSeries& series, double sigma_rel, std::uint64_t seed);

/// Reference trajectory from `ic` and a companion started at ic + delta0 * v,
/// v uniform on the unit sphere.
std::pair<TimeSeries, TimeSeries> perturbed_pair(const SystemSpec& spec, const Eigen::Vector3d& ic,
                                                 double delta0, std::uint64_t seed);

/// Uniformly distributed unit 3-vector drawn from `seed`.
Eigen::Vector3d random_unit_vector(std::uint64_t seed);

}  // namespace chaosesn

#include "chaosesn/systems.hpp"

#include <random>

namespace chaosesn {

std::string to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::Lorenz63: return "lorenz63";
    case SystemKind::ChuaODE: return "chua";
  }
  return "unknown";
}

SystemKind system_kind_from_string(const std::string& name) {
  if (name == "lorenz63" || name == "lorenz") return SystemKind::Lorenz63;
  if (name == "chua") return SystemKind::ChuaODE;
  throw ArgumentError("unknown system kind '" + name + "'");
}

void SystemSpec::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ArgumentError("SystemSpec: dt must be > 0");
  if (n_steps < 1) throw ArgumentError("SystemSpec: n_steps must be >= 1");
  if (!(tolerances.rel > 0.0) || !(tolerances.abs > 0.0))
    throw ArgumentError("SystemSpec: tolerances must be > 0");
}

SystemSpec default_lorenz_spec(std::size_t n_steps) {
  SystemSpec s;
  s.kind = SystemKind::Lorenz63;
  s.dt = 0.01;
  s.n_steps = n_steps;
  return s;
}

SystemSpec default_chua_spec(std::size_t n_steps) {
  SystemSpec s;
  s.kind = SystemKind::ChuaODE;
  s.dt = 0.05;
  s.n_steps = n_steps;
  return s;
}

Eigen::Vector3d default_initial_condition(SystemKind kind) {
  return kind == SystemKind::Lorenz63 ? Eigen::Vector3d(1.0, 1.0, 1.0) : Eigen::Vector3d(0.1, 0.0, 0.0);
}

double reference_mle(SystemKind kind) { return kind == SystemKind::Lorenz63 ? 0.974 : 0.105; }

Eigen::Vector3d system_rhs(const SystemSpec& spec, const Eigen::Vector3d& s) {
  return spec.kind == SystemKind::Lorenz63 ? lorenz_rhs<double>(s, spec.lorenz) : chua_rhs<double>(s, spec.chua);
}

namespace {

auto make_stepper(const SystemSpec& spec) {
  auto rhs = [spec](const Eigen::Vector3d& s) { return system_rhs(spec, s); };
  return DormandPrince<decltype(rhs)>(rhs, spec.tolerances);
}

std::vector<std::string> state_labels() { return {"x", "y", "z"}; }

}  // namespace

TimeSeries integrate(const SystemSpec& spec, const Eigen::Vector3d& ic) {
  spec.validate();
  require_finite<double>(ic, "integrate");
  auto stepper = make_stepper(spec);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(spec.n_steps), 3);
  Eigen::Vector3d y = ic;
  double t = 0.0;
  out.row(0) = y.transpose();
  for (std::size_t i = 1; i < spec.n_steps; ++i) {
    // grid times are recomputed from the index to avoid accumulating dt round-off
    stepper.advance(y, t, static_cast<double>(i) * spec.dt);
    out.row(static_cast<Eigen::Index>(i)) = y.transpose();
  }
  return {std::move(out), spec.dt, state_labels(), 0.0};
}

Eigen::Vector3d advance_state(const SystemSpec& spec, const Eigen::Vector3d& ic, double duration) {
  spec.validate();
  require_finite<double>(ic, "advance_state");
  if (duration < 0.0) throw ArgumentError("advance_state: negative duration");
  auto stepper = make_stepper(spec);
  Eigen::Vector3d y = ic;
  double t = 0.0;
  stepper.advance(y, t, duration);
  return y;
}

TimeSeries attractor_trajectory(const SystemSpec& spec, const Eigen::Vector3d& ic, double transient) {
  return integrate(spec, advance_state(spec, ic, transient));
}

TimeSeries add_noise(const TimeSeries& series, double sigma_rel, std::uint64_t seed) {
  if (!(sigma_rel >= 0.0)) throw ArgumentError("add_noise: sigma_rel must be >= 0");
  if (sigma_rel == 0.0) return series;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd values = series.values();
  const auto n = values.rows();
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    const auto col = series.values().col(c);
    const double mean = col.mean();
    const double sd = n > 1 ? std::sqrt((col.array() - mean).square().sum() / static_cast<double>(n - 1)) : 0.0;
    for (Eigen::Index i = 0; i < n; ++i) values(i, c) += sigma_rel * sd * normal(rng);
  }
  return {std::move(values), series.dt(), series.channels(), series.t0()};
}

Eigen::Vector3d random_unit_vector(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Vector3d v;
  do {
    v = Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
  } while (v.norm() < 1e-12);
  return v.normalized();
}

std::pair<TimeSeries, TimeSeries> perturbed_pair(const SystemSpec& spec, const Eigen::Vector3d& ic,
                                                 double delta0, std::uint64_t seed) {
  if (!(delta0 >= 0.0) || !std::isfinite(delta0)) throw ArgumentError("perturbed_pair: delta0 must be >= 0");
  const Eigen::Vector3d other = ic + delta0 * random_unit_vector(seed);
  return {integrate(spec, ic), integrate(spec, other)};
}

}  // namespace chaosesn

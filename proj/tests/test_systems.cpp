#include "chaosesn/systems.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace chaosesn;

namespace {

// Classical fixed-step RK4, used as an independent reference integrator.
Eigen::Vector3d rk4_lorenz(Eigen::Vector3d y, double t_end, double h, const LorenzParams& p) {
  const auto f = [&](const Eigen::Vector3d& s) { return lorenz_rhs<double>(s, p); };
  const auto steps = static_cast<long>(std::llround(t_end / h));
  for (long i = 0; i < steps; ++i) {
    const Eigen::Vector3d k1 = f(y);
    const Eigen::Vector3d k2 = f(y + 0.5 * h * k1);
    const Eigen::Vector3d k3 = f(y + 0.5 * h * k2);
    const Eigen::Vector3d k4 = f(y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

}  // namespace

TEST(Systems, LorenzRhsByHand) {
  const Eigen::Vector3d d = lorenz_rhs<double>(Eigen::Vector3d(1, 1, 1), LorenzParams{});
  EXPECT_DOUBLE_EQ(d(0), 0.0);
  EXPECT_DOUBLE_EQ(d(1), 26.0);
  EXPECT_NEAR(d(2), 1.0 - 8.0 / 3.0, 1e-15);
}

TEST(Systems, ChuaPhiSegments) {
  const double m0 = -1.301, m1 = -0.735;
  EXPECT_DOUBLE_EQ(chua_phi(0.5, m0, m1), m0 * 0.5);
  EXPECT_DOUBLE_EQ(chua_phi(-0.25, m0, m1), m0 * -0.25);
  EXPECT_NEAR(chua_phi(3.0, m0, m1), m1 * 3.0 + (m0 - m1), 1e-15);
  EXPECT_NEAR(chua_phi(-2.0, m0, m1), m1 * -2.0 - (m0 - m1), 1e-15);
  // continuity at the breakpoints
  EXPECT_NEAR(chua_phi(1.0 + 1e-12, m0, m1), chua_phi(1.0 - 1e-12, m0, m1), 1e-11);
}

TEST(Systems, ChuaRhsLiteralParameters) {
  ChuaParams p{10.0, 9.77, 0.58, -0.735, -1.301};
  const Eigen::Vector3d d = chua_rhs<double>(Eigen::Vector3d(1, 0, 0), p);
  EXPECT_NEAR(d(0), -2.65, 1e-12);
  EXPECT_NEAR(d(1), 1.0, 1e-15);
  EXPECT_NEAR(d(2), 0.0, 1e-15);
}

TEST(Systems, ChuaOddSymmetry) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  const ChuaParams p{};
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d s(u(rng), u(rng), u(rng));
    EXPECT_LT((chua_rhs<double>(-s, p) + chua_rhs<double>(s, p)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Systems, RhsRejectsNonFinite) {
  const Eigen::Vector3d bad(std::nan(""), 0, 0);
  EXPECT_THROW(lorenz_rhs<double>(bad, LorenzParams{}), DomainError);
  EXPECT_THROW(chua_rhs<double>(bad, ChuaParams{}), DomainError);
}

TEST(Systems, IntegrateMatchesFineRk4) {
  SystemSpec spec = default_lorenz_spec(1000);
  const TimeSeries s = integrate(spec, Eigen::Vector3d(1, 1, 1));
  ASSERT_EQ(s.length(), 1000u);
  EXPECT_EQ(s.sample(0), Eigen::Vector3d(1, 1, 1));
  EXPECT_DOUBLE_EQ(s.time(100), 1.0);
  const Eigen::Vector3d ref = rk4_lorenz(Eigen::Vector3d(1, 1, 1), 1.0, 1e-5, spec.lorenz);
  EXPECT_LT((s.sample(100) - ref).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Systems, ChuaDoubleScrollIsBounded) {
  const TimeSeries s = integrate(default_chua_spec(75000), default_initial_condition(SystemKind::ChuaODE));
  const Eigen::VectorXd x = s.column(0);
  EXPECT_LT(x.cwiseAbs().maxCoeff(), 5.0);
  // both scrolls are visited
  EXPECT_GT(x.maxCoeff(), 1.0);
  EXPECT_LT(x.minCoeff(), -1.0);
}

TEST(Systems, LorenzAttractorIsBounded) {
  const TimeSeries s = attractor_trajectory(default_lorenz_spec(20000), Eigen::Vector3d(1, 1, 1), 10.0);
  EXPECT_LT(s.values().cwiseAbs().maxCoeff(), 60.0);
  EXPECT_GT(s.column(2).minCoeff(), 0.0);
}

TEST(Systems, SpecValidation) {
  SystemSpec spec = default_lorenz_spec(10);
  spec.dt = 0.0;
  EXPECT_THROW(integrate(spec, Eigen::Vector3d(1, 1, 1)), ArgumentError);
  spec = default_lorenz_spec(0);
  EXPECT_THROW(spec.validate(), ArgumentError);
  EXPECT_EQ(system_kind_from_string("chua"), SystemKind::ChuaODE);
  EXPECT_THROW(system_kind_from_string("rossler"), ArgumentError);
}

TEST(Systems, NoiseLevels) {
  const TimeSeries s = integrate(default_lorenz_spec(5000), Eigen::Vector3d(1, 1, 1));
  EXPECT_EQ(add_noise(s, 0.0, 1).values(), s.values());
  EXPECT_THROW(add_noise(s, -0.1, 1), ArgumentError);
  const TimeSeries a = add_noise(s, 0.1, 9), b = add_noise(s, 0.1, 9);
  EXPECT_EQ(a.values(), b.values());
  const Eigen::MatrixXd diff = a.values() - s.values();
  for (Eigen::Index c = 0; c < 3; ++c) {
    const Eigen::VectorXd col = s.values().col(c);
    const double sd = std::sqrt((col.array() - col.mean()).square().sum() / (col.size() - 1));
    const double noise_sd = std::sqrt(diff.col(c).squaredNorm() / diff.rows());
    EXPECT_NEAR(noise_sd / sd, 0.1, 0.005);
  }
}

TEST(Systems, PerturbedPairStartsDelta0Apart) {
  SystemSpec spec = default_lorenz_spec(50);
  const auto [a, b] = perturbed_pair(spec, Eigen::Vector3d(1, 2, 20), 2.22e-3, 4);
  EXPECT_NEAR((a.sample(0) - b.sample(0)).norm(), 2.22e-3, 1e-15);
  EXPECT_NEAR(random_unit_vector(11).norm(), 1.0, 1e-15);
  EXPECT_THROW(perturbed_pair(spec, Eigen::Vector3d(1, 2, 20), -1.0, 4), ArgumentError);
}

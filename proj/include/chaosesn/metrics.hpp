#pragma once

#include "chaosesn/errors.hpp"
#include "chaosesn/time_series.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace chaosesn {

// ---------------------------------------------------------------------------
// Short-term skill

/// One prediction-horizon measurement in Lyapunov units. A never-crossed sample
/// (threshold not exceeded within the compared window) stores +infinity.
struct PhSample {
  double value = std::numeric_limits<double>::infinity();
  double r = 0.0;
  std::size_t ic_index = 0;

  bool crossed() const { return std::isfinite(value); }
};

/// Cumulative MSE: curve[T'] = 1/(T' m) * sum_{t<=T'} |target(t) - pred(t)|^2.
TimeSeries mse_curve(const TimeSeries& target, const TimeSeries& pred);

/// First 1-based step count T with mse_curve[T] > r, times dt * mle.
PhSample prediction_horizon(const TimeSeries& target, const TimeSeries& pred, double r, double mle,
                            std::size_t ic_index = 0);

/// Same functional applied to two trajectories of the true system.
PhSample divergence_time(const TimeSeries& a, const TimeSeries& b, double r, double mle,
                         std::size_t ic_index = 0);

struct MedianPh {
  double median = 0.0;
  std::size_t never_crossed = 0;
  std::size_t count = 0;
};

/// Sample median with never-crossed samples ranked as +infinity.
MedianPh median_ph(std::span<const PhSample> samples);

// ---------------------------------------------------------------------------
// Maximal Lyapunov exponent (Rosenstein et al. nearest-neighbour divergence)

struct RosensteinParams {
  std::size_t embed_dim = 3;
  /// Embedding delay in samples; 0 selects the first 1/e autocorrelation crossing.
  std::size_t delay = 0;
  /// Minimum temporal separation of neighbours, in samples; 0 selects the mean period.
  double mean_period = 0.0;
  /// Least-squares fit range of the divergence curve, in time units.
  double fit_begin = 0.0;
  double fit_end = 1.0;
  /// Length of the divergence curve in time units (>= fit_end).
  double horizon = 2.0;
};

struct RosensteinResult {
  double mle = 0.0;
  std::vector<double> log_divergence;  // <ln d_j(k)>, k = 0..horizon/dt
  std::size_t delay = 0;
  double mean_period = 0.0;
  std::size_t n_pairs = 0;
};

RosensteinResult mle_rosenstein(const TimeSeries& series, const RosensteinParams& params);

/// First lag at which the autocorrelation drops below 1/e.
std::size_t autocorrelation_delay(const Eigen::VectorXd& x);

/// Reciprocal of the power-weighted mean frequency, in samples.
double mean_period(const Eigen::VectorXd& x);

// ---------------------------------------------------------------------------
// 0-1 test for chaos (Gottwald and Melbourne)

enum class ZeroOneVariant { Regression, Correlation };

struct ZeroOneParams {
  std::size_t n_c = 100;
  std::uint64_t seed = 0;
  ZeroOneVariant variant = ZeroOneVariant::Regression;
};

/// Median over random c in (pi/5, 4pi/5) of the growth rate of the mean square
/// displacement of the translation variables (p_c, q_c), n up to T/10.
/// The series is mean-centred first.
double zero_one_test(const TimeSeries& series, const ZeroOneParams& params = {});

/// Growth rate K(c) for a single frequency.
double zero_one_growth_rate(const Eigen::VectorXd& centred, double c, ZeroOneVariant variant);

// ---------------------------------------------------------------------------
// Sample entropy

/// -ln(A/B): B and A count template pairs of length m_len and m_len+1 within
/// r_tol * std (Chebyshev distance), self-matches excluded.
double sample_entropy(const TimeSeries& series, std::size_t m_len = 2, double r_tol = 0.2);

// ---------------------------------------------------------------------------
// Kernel density estimation

struct KdeCurve {
  Eigen::VectorXd grid;
  Eigen::VectorXd density;
  double bandwidth = 0.0;
};

/// 0.9 * min(std, IQR / 1.34) * n^(-1/5).
double silverman_bandwidth(const Eigen::VectorXd& x);

/// Gaussian-kernel density on `grid`; bandwidth defaults to Silverman's rule.
KdeCurve kde(const TimeSeries& series, const Eigen::VectorXd& grid,
             std::optional<double> bandwidth = std::nullopt);

Eigen::VectorXd linear_grid(double lo, double hi, std::size_t n);

/// Grid covering [min - pad*h, max + pad*h] of every series (single channel each).
Eigen::VectorXd kde_grid(std::span<const TimeSeries> series, std::size_t n_points = 512, double pad = 5.0);

double trapezoid(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// Integral of |f - g| over a shared grid.
double kde_l1_distance(const KdeCurve& a, const KdeCurve& b);

// ---------------------------------------------------------------------------
// Long-term statistics bundle

struct MetricSettings {
  RosensteinParams rosenstein{};
  std::size_t rosenstein_max_length = 50000;
  std::size_t sampen_m = 2;
  double sampen_r = 0.3;
  std::size_t sampen_max_length = 20000;
  ZeroOneParams zero_one{};
  std::size_t zero_one_stride = 0;  // 0: a quarter of the mean period, in samples
  std::size_t zero_one_max_length = 2500;
  std::size_t zero_one_phases = 8;  // K_c is the median over this many downsampling offsets

  /// Fit window 0.5..1.5 and curve horizon 3 Lyapunov times of `reference_mle`.
  static MetricSettings for_reference_mle(double reference_mle);
};

struct ChannelMetrics {
  double mle = 0.0;
  double sample_entropy = 0.0;
  double k_c = 0.0;
};

ChannelMetrics compute_channel_metrics(const TimeSeries& channel, const MetricSettings& settings);

struct MetricsReport {
  std::string channel;  // channel the scalar statistics were computed on
  ChannelMetrics stats;
  std::vector<std::string> kde_channels;
  std::vector<KdeCurve> kde;
  std::vector<PhSample> ph_samples;
};

}  // namespace chaosesn

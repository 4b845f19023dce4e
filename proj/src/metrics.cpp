#include "chaosesn/metrics.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <numbers>
#include <numeric>
#include <random>

namespace chaosesn {

namespace {

Eigen::VectorXd single_channel(const TimeSeries& s, const char* who) {
  if (s.dim() != 1) throw ArgumentError(std::string(who) + ": expected a single-channel series");
  return s.column(0);
}

double population_std(const Eigen::VectorXd& x) {
  return std::sqrt((x.array() - x.mean()).square().mean());
}

// Cumulative mean squared distance between two equally shaped series.
Eigen::VectorXd cumulative_mse(const TimeSeries& a, const TimeSeries& b, const char* who) {
  if (a.length() != b.length() || a.dim() != b.dim())
    throw ArgumentError(std::string(who) + ": series differ in length or channel count");
  const Eigen::VectorXd sq = (a.values() - b.values()).rowwise().squaredNorm();
  Eigen::VectorXd curve(sq.size());
  double running = 0.0;
  const double m = static_cast<double>(a.dim());
  for (Eigen::Index t = 0; t < sq.size(); ++t) {
    running += sq(t);
    curve(t) = running / (static_cast<double>(t + 1) * m);
  }
  return curve;
}

PhSample first_crossing(const Eigen::VectorXd& curve, double dt, double r, double mle, std::size_t ic) {
  if (!(r > 0.0)) throw ArgumentError("prediction horizon: threshold r must be > 0");
  if (!(mle > 0.0)) throw ArgumentError("prediction horizon: mle must be > 0");
  PhSample s;
  s.r = r;
  s.ic_index = ic;
  for (Eigen::Index t = 0; t < curve.size(); ++t) {
    if (curve(t) > r) {
      s.value = static_cast<double>(t + 1) * dt * mle;
      break;
    }
  }
  return s;
}

}  // namespace

TimeSeries mse_curve(const TimeSeries& target, const TimeSeries& pred) {
  return {cumulative_mse(target, pred, "mse_curve"), target.dt(), {"mse"}, target.t0()};
}

PhSample prediction_horizon(const TimeSeries& target, const TimeSeries& pred, double r, double mle,
                            std::size_t ic_index) {
  return first_crossing(cumulative_mse(target, pred, "prediction_horizon"), target.dt(), r, mle, ic_index);
}

PhSample divergence_time(const TimeSeries& a, const TimeSeries& b, double r, double mle, std::size_t ic_index) {
  return first_crossing(cumulative_mse(a, b, "divergence_time"), a.dt(), r, mle, ic_index);
}

MedianPh median_ph(std::span<const PhSample> samples) {
  if (samples.empty()) throw ArgumentError("median_ph: no samples");
  std::vector<double> v;
  v.reserve(samples.size());
  MedianPh out;
  for (const auto& s : samples) {
    v.push_back(s.value);
    if (!s.crossed()) ++out.never_crossed;
  }
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  out.count = n;
  out.median = n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  return out;
}

// ---------------------------------------------------------------------------

std::size_t autocorrelation_delay(const Eigen::VectorXd& x) {
  const Eigen::VectorXd c = x.array() - x.mean();
  const double c0 = c.squaredNorm();
  if (c0 == 0.0) throw ArgumentError("autocorrelation_delay: constant series");
  const Eigen::Index n = c.size();
  for (Eigen::Index lag = 1; lag < n; ++lag) {
    const double acf = c.head(n - lag).dot(c.tail(n - lag)) / c0;
    if (acf < 1.0 / std::numbers::e) return static_cast<std::size_t>(lag);
  }
  throw ArgumentError("autocorrelation_delay: autocorrelation never drops below 1/e");
}

double mean_period(const Eigen::VectorXd& x) {
  std::vector<double> c(static_cast<std::size_t>(x.size()));
  const double mu = x.mean();
  for (Eigen::Index i = 0; i < x.size(); ++i) c[static_cast<std::size_t>(i)] = x(i) - mu;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, c);
  const std::size_t n = c.size();
  double weighted = 0.0, total = 0.0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    const double p = std::norm(spec[k]);
    weighted += p * static_cast<double>(k) / static_cast<double>(n);
    total += p;
  }
  if (total == 0.0) throw ArgumentError("mean_period: constant series");
  return total / weighted;
}

RosensteinResult mle_rosenstein(const TimeSeries& series, const RosensteinParams& params) {
  const Eigen::VectorXd x = single_channel(series, "mle_rosenstein");
  const double dt = series.dt();
  if (params.embed_dim < 1) throw ArgumentError("mle_rosenstein: embed_dim must be >= 1");
  if (!(params.fit_end > params.fit_begin) || params.fit_begin < 0.0 || params.horizon < params.fit_end)
    throw ArgumentError("mle_rosenstein: need 0 <= fit_begin < fit_end <= horizon");

  RosensteinResult res;
  res.delay = params.delay ? params.delay : autocorrelation_delay(x);
  res.mean_period = params.mean_period > 0.0 ? params.mean_period : mean_period(x);

  const auto horizon = static_cast<std::size_t>(std::ceil(params.horizon / dt));
  const std::size_t span = (params.embed_dim - 1) * res.delay;
  if (x.size() <= static_cast<Eigen::Index>(span + horizon + 2))
    throw ArgumentError("mle_rosenstein: series too short for embedding and fit window");
  const std::size_t n_embed = static_cast<std::size_t>(x.size()) - span;
  const std::size_t n_ref = n_embed - horizon;  // points whose future stays inside the series
  const std::size_t dim = params.embed_dim;
  auto coord = [&](std::size_t i, std::size_t d) { return x(static_cast<Eigen::Index>(i + d * res.delay)); };
  auto dist2 = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = coord(i, d) - coord(j, d);
      s += diff * diff;
    }
    return s;
  };

  // Nearest neighbour search over points sorted by their first coordinate: the
  // scan away from a point stops once the first-coordinate gap alone exceeds the
  // best distance found.
  std::vector<std::size_t> order(n_ref);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return coord(a, 0) < coord(b, 0); });
  std::vector<std::size_t> rank(n_ref);
  for (std::size_t r = 0; r < n_ref; ++r) rank[order[r]] = r;

  const double min_sep = res.mean_period;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n_ref);
  for (std::size_t i = 0; i < n_ref; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = n_ref;
    const double xi = coord(i, 0);
    auto visit = [&](std::size_t j) {
      const double sep = std::abs(static_cast<double>(i) - static_cast<double>(j));
      if (sep <= min_sep) return;
      const double d = dist2(i, j);
      if (d > 0.0 && d < best) {
        best = d;
        best_j = j;
      }
    };
    for (std::size_t r = rank[i] + 1; r < n_ref; ++r) {
      const double gap = coord(order[r], 0) - xi;
      if (gap * gap >= best) break;
      visit(order[r]);
    }
    for (std::size_t r = rank[i]; r-- > 0;) {
      const double gap = xi - coord(order[r], 0);
      if (gap * gap >= best) break;
      visit(order[r]);
    }
    if (best_j < n_ref) pairs.emplace_back(i, best_j);
  }
  if (pairs.empty()) throw ArgumentError("mle_rosenstein: no valid nearest neighbours");
  res.n_pairs = pairs.size();

  res.log_divergence.assign(horizon + 1, 0.0);
  for (std::size_t k = 0; k <= horizon; ++k) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& [i, j] : pairs) {
      const double d = dist2(i + k, j + k);
      if (d > 0.0) {
        sum += 0.5 * std::log(d);
        ++count;
      }
    }
    res.log_divergence[k] = count ? sum / static_cast<double>(count) : -std::numeric_limits<double>::infinity();
  }

  // least-squares slope over the fit window
  double st = 0, sy = 0, stt = 0, sty = 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k <= horizon; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (t < params.fit_begin - 1e-12 || t > params.fit_end + 1e-12) continue;
    const double y = res.log_divergence[k];
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++n;
  }
  if (n < 2) throw ArgumentError("mle_rosenstein: fit window holds fewer than two samples");
  const double nn = static_cast<double>(n);
  res.mle = (nn * sty - st * sy) / (nn * stt - st * st);
  return res;
}

// ---------------------------------------------------------------------------

double zero_one_growth_rate(const Eigen::VectorXd& phi, double c, ZeroOneVariant variant) {
  const Eigen::Index n_total = phi.size();
  const Eigen::Index n_cut = n_total / 10;
  Eigen::VectorXd p(n_total), q(n_total);
  double ps = 0.0, qs = 0.0;
  for (Eigen::Index j = 0; j < n_total; ++j) {
    const double arg = static_cast<double>(j + 1) * c;
    ps += phi(j) * std::cos(arg);
    qs += phi(j) * std::sin(arg);
    p(j) = ps;
    q(j) = qs;
  }
  const double mean = phi.mean();
  Eigen::VectorXd msd(n_cut), steps(n_cut);
  for (Eigen::Index k = 1; k <= n_cut; ++k) {
    const Eigen::Index len = n_total - k;
    const double m = ((p.tail(len) - p.head(len)).squaredNorm() + (q.tail(len) - q.head(len)).squaredNorm()) /
                     static_cast<double>(len);
    const double v_osc = mean * mean * (1.0 - std::cos(static_cast<double>(k) * c)) / (1.0 - std::cos(c));
    msd(k - 1) = variant == ZeroOneVariant::Correlation ? m - v_osc : m;
    steps(k - 1) = static_cast<double>(k);
  }
  if (variant == ZeroOneVariant::Correlation) {
    const Eigen::VectorXd a = steps.array() - steps.mean();
    const Eigen::VectorXd b = msd.array() - msd.mean();
    const double denom = a.norm() * b.norm();
    return denom > 0.0 ? a.dot(b) / denom : 0.0;
  }
  const Eigen::VectorXd lx = steps.array().log();
  const Eigen::VectorXd ly = msd.array().max(1e-300).log();
  const Eigen::VectorXd a = lx.array() - lx.mean();
  return a.dot(ly.array().matrix() - Eigen::VectorXd::Constant(ly.size(), ly.mean())) / a.squaredNorm();
}

double zero_one_test(const TimeSeries& series, const ZeroOneParams& params) {
  const Eigen::VectorXd x = single_channel(series, "zero_one_test");
  if (params.n_c < 1) throw ArgumentError("zero_one_test: n_c must be >= 1");
  if (x.size() < 20) throw ArgumentError("zero_one_test: series too short");
  const Eigen::VectorXd phi = x.array() - x.mean();
  if (phi.cwiseAbs().maxCoeff() == 0.0) throw ArgumentError("zero_one_test: constant series");

  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> pick(std::numbers::pi / 5.0, 4.0 * std::numbers::pi / 5.0);
  std::vector<double> k(params.n_c);
  for (auto& kc : k) kc = zero_one_growth_rate(phi, pick(rng), params.variant);
  std::sort(k.begin(), k.end());
  const std::size_t n = k.size();
  return n % 2 ? k[n / 2] : 0.5 * (k[n / 2 - 1] + k[n / 2]);
}

// ---------------------------------------------------------------------------

double sample_entropy(const TimeSeries& series, std::size_t m_len, double r_tol) {
  const Eigen::VectorXd x = single_channel(series, "sample_entropy");
  if (m_len < 1) throw ArgumentError("sample_entropy: template length must be >= 1");
  if (!(r_tol > 0.0)) throw ArgumentError("sample_entropy: r_tol must be > 0");
  if (static_cast<std::size_t>(x.size()) <= m_len + 1) throw ArgumentError("sample_entropy: series too short");
  const double r = r_tol * population_std(x);
  const std::size_t n_templates = static_cast<std::size_t>(x.size()) - m_len;
  const double* d = x.data();

  std::uint64_t b = 0, a = 0;
  for (std::size_t i = 0; i + 1 < n_templates; ++i) {
    for (std::size_t j = i + 1; j < n_templates; ++j) {
      std::size_t k = 0;
      while (k < m_len && std::abs(d[i + k] - d[j + k]) <= r) ++k;
      if (k < m_len) continue;
      ++b;
      if (std::abs(d[i + m_len] - d[j + m_len]) <= r) ++a;
    }
  }
  if (a == 0 || b == 0) throw NumericError("sample_entropy: no template matches; entropy undefined");
  return -std::log(static_cast<double>(a) / static_cast<double>(b));
}

// ---------------------------------------------------------------------------

double silverman_bandwidth(const Eigen::VectorXd& x) {
  const auto n = x.size();
  if (n < 2) throw ArgumentError("silverman_bandwidth: need at least two samples");
  const double sd = std::sqrt((x.array() - x.mean()).square().sum() / static_cast<double>(n - 1));
  std::vector<double> v(x.data(), x.data() + n);
  auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    std::nth_element(v.begin(), v.begin() + static_cast<long>(lo), v.end());
    const double vlo = v[lo];
    if (lo + 1 >= v.size()) return vlo;
    const double vhi = *std::min_element(v.begin() + static_cast<long>(lo) + 1, v.end());
    return vlo + (pos - static_cast<double>(lo)) * (vhi - vlo);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) throw ArgumentError("silverman_bandwidth: zero variance");
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

KdeCurve kde(const TimeSeries& series, const Eigen::VectorXd& grid, std::optional<double> bandwidth) {
  const Eigen::VectorXd x = single_channel(series, "kde");
  if (x.size() < 2) throw ArgumentError("kde: need at least two samples");
  KdeCurve out;
  out.bandwidth = bandwidth ? *bandwidth : silverman_bandwidth(x);
  if (!(out.bandwidth > 0.0)) throw ArgumentError("kde: bandwidth must be > 0");
  out.grid = grid;
  out.density.resize(grid.size());
  const double h = out.bandwidth;
  const double norm = 1.0 / (static_cast<double>(x.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  for (Eigen::Index g = 0; g < grid.size(); ++g)
    out.density(g) = norm * ((x.array() - grid(g)) / h).square().unaryExpr([](double z) { return std::exp(-0.5 * z); }).sum();
  return out;
}

Eigen::VectorXd linear_grid(double lo, double hi, std::size_t n) {
  if (n < 2 || !(hi > lo)) throw ArgumentError("linear_grid: need n >= 2 and hi > lo");
  return Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(n), lo, hi);
}

Eigen::VectorXd kde_grid(std::span<const TimeSeries> series, std::size_t n_points, double pad) {
  if (series.empty()) throw ArgumentError("kde_grid: no series");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : series) {
    const Eigen::VectorXd x = single_channel(s, "kde_grid");
    const double h = silverman_bandwidth(x);
    lo = std::min(lo, x.minCoeff() - pad * h);
    hi = std::max(hi, x.maxCoeff() + pad * h);
  }
  return linear_grid(lo, hi, n_points);
}

double trapezoid(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size()) throw ArgumentError("trapezoid: size mismatch");
  double s = 0.0;
  for (Eigen::Index i = 1; i < x.size(); ++i) s += 0.5 * (x(i) - x(i - 1)) * (y(i) + y(i - 1));
  return s;
}

double kde_l1_distance(const KdeCurve& a, const KdeCurve& b) {
  if (a.grid.size() != b.grid.size() || (a.grid - b.grid).cwiseAbs().maxCoeff() > 0.0)
    throw ArgumentError("kde_l1_distance: curves must share a grid");
  return trapezoid(a.grid, (a.density - b.density).cwiseAbs());
}

// ---------------------------------------------------------------------------

MetricSettings MetricSettings::for_reference_mle(double reference_mle) {
  if (!(reference_mle > 0.0)) throw ArgumentError("MetricSettings: reference MLE must be > 0");
  MetricSettings s;
  const double lyapunov_time = 1.0 / reference_mle;
  s.rosenstein.fit_begin = 0.5 * lyapunov_time;
  s.rosenstein.fit_end = 1.5 * lyapunov_time;
  s.rosenstein.horizon = 3.0 * lyapunov_time;
  return s;
}

ChannelMetrics compute_channel_metrics(const TimeSeries& channel, const MetricSettings& settings) {
  auto head = [&](const TimeSeries& s, std::size_t max_len) {
    return s.length() > max_len ? s.slice(0, max_len) : s;
  };
  ChannelMetrics m;
  m.mle = mle_rosenstein(head(channel, settings.rosenstein_max_length), settings.rosenstein).mle;
  m.sample_entropy = sample_entropy(head(channel, settings.sampen_max_length), settings.sampen_m, settings.sampen_r);
  std::size_t stride = settings.zero_one_stride;
  if (stride == 0)
    stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(mean_period(channel.column(0)) / 4.0)));
  const std::size_t phases = std::clamp<std::size_t>(settings.zero_one_phases, 1, stride);
  std::vector<double> k;
  for (std::size_t i = 0; i < phases; ++i) {
    const std::size_t offset = i * stride / phases;
    const TimeSeries shifted = channel.slice(offset, channel.length() - offset);
    k.push_back(zero_one_test(head(shifted.downsample(stride), settings.zero_one_max_length), settings.zero_one));
  }
  std::sort(k.begin(), k.end());
  m.k_c = k.size() % 2 ? k[k.size() / 2] : 0.5 * (k[k.size() / 2 - 1] + k[k.size() / 2]);
  return m;
}

}  // namespace chaosesn

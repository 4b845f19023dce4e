#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace chaosesn {

/// Uniformly sampled multivariate series. Rows are samples, columns are channels.
///
/// Construction validates the invariants (finite samples, dt > 0, at least one
/// channel, unique labels); after that the object is treated as a value.
class TimeSeries {
public:
  TimeSeries() = default;
  TimeSeries(Eigen::MatrixXd values, double dt, std::vector<std::string> channels,
             double t0 = 0.0);

  /// Channels labelled "x0", "x1", ...
  static TimeSeries with_default_labels(Eigen::MatrixXd values, double dt, double t0 = 0.0);

  std::size_t length() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(values_.cols()); }
  bool empty() const { return values_.rows() == 0; }

  const Eigen::MatrixXd& values() const { return values_; }
  double dt() const { return dt_; }
  double t0() const { return t0_; }
  const std::vector<std::string>& channels() const { return channels_; }

  double time(std::size_t i) const { return t0_ + static_cast<double>(i) * dt_; }
  Eigen::VectorXd sample(std::size_t i) const { return values_.row(static_cast<Eigen::Index>(i)).transpose(); }
  Eigen::VectorXd column(std::size_t c) const { return values_.col(static_cast<Eigen::Index>(c)); }

  /// Single-channel view copy.
  TimeSeries channel(std::size_t c) const;
  /// First `count` channels.
  TimeSeries leading_channels(std::size_t count) const;
  /// Rows [begin, begin + count).
  TimeSeries slice(std::size_t begin, std::size_t count) const;
  /// Every `stride`-th sample starting at 0; dt is scaled accordingly.
  TimeSeries downsample(std::size_t stride) const;

private:
  Eigen::MatrixXd values_;
  double dt_ = 1.0;
  std::vector<std::string> channels_;
  double t0_ = 0.0;
};

/// Rows of `b` appended to `a`; shapes and dt must agree.
TimeSeries concatenate(const TimeSeries& a, const TimeSeries& b);

}  // namespace chaosesn

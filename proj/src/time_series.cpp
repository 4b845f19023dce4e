#include "chaosesn/time_series.hpp"

#include "chaosesn/errors.hpp"

#include <cmath>
#include <set>

namespace chaosesn {

TimeSeries::TimeSeries(Eigen::MatrixXd values, double dt, std::vector<std::string> channels,
                       double t0)
    : values_(std::move(values)), dt_(dt), channels_(std::move(channels)), t0_(t0) {
  if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw ArgumentError("TimeSeries: dt must be finite and > 0");
  if (!std::isfinite(t0_)) throw ArgumentError("TimeSeries: t0 must be finite");
  if (channels_.empty()) throw ArgumentError("TimeSeries: at least one channel required");
  if (static_cast<Eigen::Index>(channels_.size()) != values_.cols())
    throw ArgumentError("TimeSeries: channel label count does not match column count");
  if (std::set<std::string>(channels_.begin(), channels_.end()).size() != channels_.size())
    throw ArgumentError("TimeSeries: channel labels must be unique");
  if (!values_.allFinite()) throw DomainError("TimeSeries: samples must be finite");
}

TimeSeries TimeSeries::with_default_labels(Eigen::MatrixXd values, double dt, double t0) {
  std::vector<std::string> labels;
  for (Eigen::Index c = 0; c < values.cols(); ++c) labels.push_back("x" + std::to_string(c));
  return {std::move(values), dt, std::move(labels), t0};
}

TimeSeries TimeSeries::channel(std::size_t c) const {
  if (c >= dim()) throw ArgumentError("TimeSeries::channel: index out of range");
  return {values_.col(static_cast<Eigen::Index>(c)), dt_, {channels_[c]}, t0_};
}

TimeSeries TimeSeries::leading_channels(std::size_t count) const {
  if (count == 0 || count > dim()) throw ArgumentError("TimeSeries::leading_channels: bad count");
  return {values_.leftCols(static_cast<Eigen::Index>(count)), dt_,
          std::vector<std::string>(channels_.begin(), channels_.begin() + static_cast<long>(count)), t0_};
}

TimeSeries TimeSeries::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > length()) throw ArgumentError("TimeSeries::slice: range exceeds series length");
  return {values_.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count)), dt_,
          channels_, time(begin)};
}

TimeSeries TimeSeries::downsample(std::size_t stride) const {
  if (stride == 0) throw ArgumentError("TimeSeries::downsample: stride must be >= 1");
  const auto n = static_cast<Eigen::Index>((length() + stride - 1) / stride);
  Eigen::MatrixXd out(n, values_.cols());
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) = values_.row(i * static_cast<Eigen::Index>(stride));
  return {std::move(out), dt_ * static_cast<double>(stride), channels_, t0_};
}

TimeSeries concatenate(const TimeSeries& a, const TimeSeries& b) {
  if (a.dim() != b.dim() || a.dt() != b.dt())
    throw ArgumentError("concatenate: channel count and dt must agree");
  Eigen::MatrixXd out(a.values().rows() + b.values().rows(), a.values().cols());
  out << a.values(), b.values();
  return {std::move(out), a.dt(), a.channels(), a.t0()};
}

}  // namespace chaosesn

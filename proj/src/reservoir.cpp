#include "chaosesn/reservoir.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

namespace chaosesn {

void EsnHyperParams::validate() const {
  if (n_nodes < 1) throw ArgumentError("EsnHyperParams: n_nodes must be >= 1");
  if (!(spectral_radius > 0.0)) throw ArgumentError("EsnHyperParams: spectral_radius must be > 0");
  if (!(leak > 0.0 && leak <= 1.0)) throw ArgumentError("EsnHyperParams: leak must be in (0, 1]");
  if (!(density > 0.0 && density <= 1.0)) throw ArgumentError("EsnHyperParams: density must be in (0, 1]");
  if (!(ridge >= 0.0)) throw ArgumentError("EsnHyperParams: ridge must be >= 0");
  if (input_dim < 1) throw ArgumentError("EsnHyperParams: input_dim must be >= 1");
  if (input_dim > output_dim) throw ArgumentError("EsnHyperParams: input_dim must not exceed output_dim");
  if (!(input_scaling > 0.0)) throw ArgumentError("EsnHyperParams: input_scaling must be > 0");
}

std::size_t default_washout(double mle, double dt) {
  if (!(mle > 0.0) || !(dt > 0.0)) throw ArgumentError("default_washout: mle and dt must be > 0");
  return static_cast<std::size_t>(std::ceil(2.0 / (mle * dt)));
}

namespace {

// Block power iteration. Each sweep multiplies an orthonormal N x k block by W and
// re-orthonormalizes; the Ritz values of Q^T W Q approach the k dominant eigenvalues.
template <typename Matrix>
double block_power_radius(const Matrix& w, const SpectralRadiusOptions& opts) {
  if (w.rows() != w.cols()) throw ArgumentError("spectral_radius: matrix must be square");
  const Eigen::Index n = w.rows();
  if (n == 0) return 0.0;
  const Eigen::Index k = std::min<Eigen::Index>(std::max(1, opts.block_size), n);

  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd q(n, k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < n; ++i) q(i, j) = normal(rng);
  q = Eigen::HouseholderQR<Eigen::MatrixXd>(q).householderQ() * Eigen::MatrixXd::Identity(n, k);

  double estimate = 0.0;
  double previous = -1.0;
  int stable_checks = 0;
  constexpr int check_every = 5;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    Eigen::MatrixXd z = w * q;
    if (z.norm() == 0.0) return 0.0;
    if (it % check_every == 0 || k == n) {
      const Eigen::MatrixXd h = q.transpose() * z;
      Eigen::EigenSolver<Eigen::MatrixXd> es(h, false);
      estimate = es.eigenvalues().cwiseAbs().maxCoeff();
      if (k == n) return estimate;
      if (std::abs(estimate - previous) <= opts.tolerance * std::max(estimate, 1e-300)) {
        if (++stable_checks >= 2) return estimate;
      } else {
        stable_checks = 0;
      }
      previous = estimate;
    }
    q = Eigen::HouseholderQR<Eigen::MatrixXd>(z).householderQ() * Eigen::MatrixXd::Identity(n, k);
  }
  throw ConvergenceError("spectral_radius: power iteration did not converge", estimate);
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t attempt) {
  return seed + attempt * 0x9E3779B97F4A7C15ULL;
}

}  // namespace

double spectral_radius(const SparseMatrixR& w, const SpectralRadiusOptions& opts) {
  return block_power_radius(w, opts);
}

double spectral_radius(const Eigen::MatrixXd& w, const SpectralRadiusOptions& opts) {
  return block_power_radius(w, opts);
}

double largest_singular_value(const SparseMatrixR& w) {
  const Eigen::MatrixXd dense = w;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(dense);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

EsnWeights init_weights(const EsnHyperParams& hp) {
  hp.validate();
  const auto n = static_cast<Eigen::Index>(hp.n_nodes);
  const auto cells = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  const auto nnz = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(hp.density * static_cast<double>(cells))));

  constexpr int max_attempts = 8;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::mt19937_64 rng(sub_seed(hp.seed, static_cast<std::uint64_t>(attempt)));
    std::uniform_real_distribution<double> uniform(-0.5, 0.5);

    EsnWeights w;
    w.w_in.resize(n, static_cast<Eigen::Index>(hp.input_dim) + 1);
    for (Eigen::Index j = 0; j < w.w_in.cols(); ++j)
      for (Eigen::Index i = 0; i < n; ++i) w.w_in(i, j) = uniform(rng);
    w.w_in *= hp.input_scaling;

    // nnz distinct cells by partial Fisher-Yates
    std::vector<std::size_t> cell(cells);
    std::iota(cell.begin(), cell.end(), std::size_t{0});
    for (std::size_t i = 0; i < nnz; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, cells - 1);
      std::swap(cell[i], cell[pick(rng)]);
    }
    std::sort(cell.begin(), cell.begin() + static_cast<long>(nnz));
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(nnz);
    for (std::size_t i = 0; i < nnz; ++i)
      triplets.emplace_back(static_cast<int>(cell[i] / hp.n_nodes), static_cast<int>(cell[i] % hp.n_nodes),
                            uniform(rng));
    w.w.resize(n, n);
    w.w.setFromTriplets(triplets.begin(), triplets.end());
    w.w.makeCompressed();

    const double radius = spectral_radius(w.w);
    if (radius > 1e-12) {
      w.w *= hp.spectral_radius / radius;
      return w;
    }
  }
  throw NumericError("init_weights: recurrent matrix has zero spectral radius after 8 draws");
}

namespace {

bool singular_free(const Eigen::VectorXd& d, double beta) {
  if (!d.allFinite()) return false;
  const double floor = beta > 0.0 ? 0.0
                                  : static_cast<double>(d.size()) * std::numeric_limits<double>::epsilon() *
                                        d.cwiseAbs().maxCoeff();
  return d.minCoeff() > floor;
}

}  // namespace

Eigen::MatrixXd ridge_solve(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets, double beta) {
  if (features.cols() != targets.cols()) throw ArgumentError("ridge_solve: sample count mismatch");
  if (!(beta >= 0.0)) throw ArgumentError("ridge_solve: beta must be >= 0");
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(features.rows(), features.rows());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(features);
  gram.diagonal().array() += beta;
  const Eigen::MatrixXd rhs = features * targets.transpose();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const auto d = ldlt.vectorD();
  if (ldlt.info() != Eigen::Success || !singular_free(d, beta))
    throw SolverError("ridge_solve: F F^T + beta I is singular; use beta > 0");
  return ldlt.solve(rhs).transpose();
}

Eigen::VectorXd feature_vector(const Eigen::Ref<const Eigen::VectorXd>& u, const ReservoirState& x) {
  Eigen::VectorXd f(1 + u.size() + x.size());
  f << 1.0, u, x;
  return f;
}

TrainResult train(const EsnWeights& w, const TimeSeries& inputs, const TimeSeries& targets,
                  const EsnHyperParams& hp) {
  hp.validate();
  if (inputs.length() != targets.length()) throw ArgumentError("train: inputs and targets differ in length");
  if (inputs.dim() != hp.input_dim) throw ArgumentError("train: input channel count != input_dim");
  if (targets.dim() != hp.output_dim) throw ArgumentError("train: target channel count != output_dim");
  if (w.w_in.cols() != static_cast<Eigen::Index>(hp.input_dim) + 1 ||
      w.w.rows() != static_cast<Eigen::Index>(hp.n_nodes))
    throw ArgumentError("train: weights do not match hyperparameters");
  if (hp.washout >= inputs.length()) throw ArgumentError("train: washout consumes all samples");

  const auto n = w.w.rows();
  const auto m = static_cast<Eigen::Index>(hp.input_dim);
  const auto l = static_cast<Eigen::Index>(hp.output_dim);
  const auto p = 1 + m + n;
  const auto total = static_cast<Eigen::Index>(inputs.length());

  // Gram matrix and cross term are accumulated in column blocks so the full
  // feature matrix is never materialized.
  constexpr Eigen::Index block = 512;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(p, l);
  Eigen::MatrixXd fblock(p, block);
  Eigen::MatrixXd yblock(l, block);
  Eigen::Index filled = 0;
  auto flush = [&] {
    if (filled == 0) return;
    gram.selfadjointView<Eigen::Lower>().rankUpdate(fblock.leftCols(filled));
    // one product per output so each readout row is computed the same way whatever l is
    for (Eigen::Index j = 0; j < l; ++j)
      cross.col(j).noalias() += fblock.leftCols(filled) * yblock.row(j).head(filled).transpose();
    filled = 0;
  };

  ReservoirState x = ReservoirState::Zero(n);
  for (Eigen::Index t = 0; t < total; ++t) {
    const Eigen::VectorXd u = inputs.values().row(t).transpose();
    x = update_state(x, u, w, hp.leak);
    if (t < static_cast<Eigen::Index>(hp.washout)) continue;
    fblock.col(filled) << 1.0, u, x;
    yblock.col(filled) = targets.values().row(t).transpose();
    if (++filled == block) flush();
  }
  flush();

  gram.diagonal().array() += hp.ridge;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const auto d = ldlt.vectorD();
  if (ldlt.info() != Eigen::Success || !singular_free(d, hp.ridge))
    throw SolverError("train: X X^T + beta I is singular; use beta > 0");

  TrainResult result;
  result.model.params = hp;
  result.model.weights = w;
  Eigen::MatrixXd w_out(l, p);
  for (Eigen::Index j = 0; j < l; ++j) w_out.row(j) = ldlt.solve(cross.col(j)).transpose();
  result.model.weights.w_out = std::move(w_out);

  // second pass for the residual; the reservoir trajectory is deterministic
  double sse = 0.0;
  x.setZero();
  for (Eigen::Index t = 0; t < total; ++t) {
    const Eigen::VectorXd u = inputs.values().row(t).transpose();
    x = update_state(x, u, w, hp.leak);
    if (t < static_cast<Eigen::Index>(hp.washout)) continue;
    sse += (targets.values().row(t).transpose() - readout(result.model, u, x)).squaredNorm();
  }
  result.training_mse = sse / (static_cast<double>(total - static_cast<Eigen::Index>(hp.washout)) * static_cast<double>(l));
  result.final_state = x;
  return result;
}

std::pair<TimeSeries, TimeSeries> teacher_pairs(const TimeSeries& series, std::size_t m, std::size_t l) {
  if (series.length() < 2) throw ArgumentError("teacher_pairs: need at least two samples");
  if (m < 1 || m > l || l > series.dim()) throw ArgumentError("teacher_pairs: require 1 <= m <= l <= d");
  const std::size_t t = series.length() - 1;
  return {series.slice(0, t).leading_channels(m), series.slice(1, t).leading_channels(l)};
}

Eigen::VectorXd readout(const EsnModel& model, const Eigen::Ref<const Eigen::VectorXd>& u,
                        const ReservoirState& x) {
  if (!model.trained()) throw StateError("readout: model has no trained W_out");
  const auto& w_out = *model.weights.w_out;
  if (w_out.cols() != 1 + u.size() + x.size()) throw ArgumentError("readout: dimension mismatch");
  const Eigen::VectorXd f = feature_vector(u, x);
  Eigen::VectorXd y(w_out.rows());
  Eigen::VectorXd row(w_out.cols());
  for (Eigen::Index i = 0; i < w_out.rows(); ++i) {
    row = w_out.row(i).transpose();
    y(i) = row.dot(f);
  }
  return y;
}

ReservoirState washout_init(const EsnModel& model, const TimeSeries& warmup) {
  if (warmup.empty()) throw ArgumentError("washout_init: warmup must contain at least one sample");
  const Eigen::MatrixXd states = drive(model, warmup, ReservoirState::Zero(static_cast<Eigen::Index>(model.n_nodes())));
  return states.col(states.cols() - 1);
}

TimeSeries predict_autonomous(const EsnModel& model, const Eigen::Ref<const Eigen::VectorXd>& u_start,
                              const ReservoirState& x_start, std::size_t n_steps, const PredictOptions& opts) {
  if (!model.trained()) throw StateError("predict_autonomous: model has no trained W_out");
  if (n_steps < 1) throw ArgumentError("predict_autonomous: n_steps must be >= 1");
  const auto m = static_cast<Eigen::Index>(model.input_dim());
  const auto l = static_cast<Eigen::Index>(model.output_dim());
  if (u_start.size() != m) throw ArgumentError("predict_autonomous: u_start has wrong size");

  Eigen::MatrixXd out(static_cast<Eigen::Index>(n_steps), l);
  Eigen::VectorXd u = u_start;
  ReservoirState x = x_start;
  for (std::size_t t = 0; t < n_steps; ++t) {
    x = update_state(x, u, model.weights, model.params.leak);
    const Eigen::VectorXd y = readout(model, u, x);
    if (!y.allFinite() || y.cwiseAbs().maxCoeff() > opts.bound)
      throw DivergenceError("predict_autonomous: output exceeded bound after " + std::to_string(t) + " steps", t);
    out.row(static_cast<Eigen::Index>(t)) = y.transpose();
    u = y.head(m);
  }
  std::vector<std::string> labels = opts.labels;
  if (labels.empty())
    for (Eigen::Index c = 0; c < l; ++c) labels.push_back("y" + std::to_string(c));
  return {std::move(out), opts.dt, std::move(labels), 0.0};
}

}  // namespace chaosesn

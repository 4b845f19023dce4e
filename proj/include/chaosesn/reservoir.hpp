#pragma once

#include "chaosesn/errors.hpp"
#include "chaosesn/time_series.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace chaosesn {

/// Activation vector of the N reservoir nodes at one instant.
using ReservoirState = Eigen::VectorXd;
using SparseMatrixR = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct EsnHyperParams {
  std::size_t n_nodes = 500;
  double spectral_radius = 0.9;
  double leak = 0.3;
  double density = 0.02;
  double ridge = 1e-7;
  std::size_t input_dim = 1;
  std::size_t output_dim = 3;
  /// Leading driven steps excluded from the readout regression.
  std::size_t washout = 0;
  std::uint64_t seed = 1;
  /// Multiplies W_in after the U(-0.5, 0.5) draw.
  double input_scaling = 1.0;

  void validate() const;
};

/// ceil(2 / (mle * dt)): about two Lyapunov times of steps.
std::size_t default_washout(double mle, double dt);

struct EsnWeights {
  Eigen::MatrixXd w_in;   // N x (1+m), bias in column 0
  SparseMatrixR w;        // N x N
  std::optional<Eigen::MatrixXd> w_out;  // l x (1+m+N)

  bool trained() const { return w_out.has_value(); }
};

/// Hyperparameters and weights; treated as immutable once trained.
struct EsnModel {
  EsnHyperParams params;
  EsnWeights weights;

  std::size_t n_nodes() const { return static_cast<std::size_t>(weights.w.rows()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(weights.w_in.cols() - 1); }
  std::size_t output_dim() const { return trained() ? static_cast<std::size_t>(weights.w_out->rows()) : params.output_dim; }
  bool trained() const { return weights.trained(); }
};

struct TanhActivation {
  template <typename Derived>
  auto operator()(const Eigen::ArrayBase<Derived>& a) const { return a.tanh(); }
};

/// sigma(x) = x; used to check the linear-reservoir autoregression identity.
struct IdentityActivation {
  template <typename Derived>
  auto operator()(const Eigen::ArrayBase<Derived>& a) const { return a.derived(); }
};

struct SpectralRadiusOptions {
  double tolerance = 1e-8;
  int max_iterations = 10000;
  int block_size = 8;
};

/// Modulus of the dominant eigenvalue by block power iteration with Rayleigh-Ritz
/// extraction. Throws ConvergenceError (carrying the best estimate) on failure.
double spectral_radius(const SparseMatrixR& w, const SpectralRadiusOptions& opts = {});
double spectral_radius(const Eigen::MatrixXd& w, const SpectralRadiusOptions& opts = {});

/// Largest singular value of W (sufficient echo-state condition is < 1).
double largest_singular_value(const SparseMatrixR& w);

/// Random input and recurrent weights, W rescaled to the target spectral radius.
EsnWeights init_weights(const EsnHyperParams& hp);

/// x' = (1 - leak) x + leak * act(W_in (1, u) + W x)
template <typename Activation = TanhActivation>
ReservoirState update_state(const ReservoirState& x, const Eigen::Ref<const Eigen::VectorXd>& u,
                            const EsnWeights& w, double leak, Activation act = {}) {
  if (x.size() != w.w.rows() || u.size() + 1 != w.w_in.cols())
    throw ArgumentError("update_state: dimension mismatch");
  const Eigen::VectorXd pre =
      w.w_in.col(0) + w.w_in.rightCols(w.w_in.cols() - 1) * u + w.w * x;
  return (1.0 - leak) * x + leak * act(pre.array()).matrix();
}

/// States after each input row (N x T, column t after consuming inputs row t).
template <typename Activation = TanhActivation>
Eigen::MatrixXd drive(const EsnModel& model, const TimeSeries& inputs, const ReservoirState& x0,
                      Activation act = {}) {
  if (inputs.empty()) throw ArgumentError("drive: empty input sequence");
  const auto& w = model.weights;
  Eigen::MatrixXd states(w.w.rows(), static_cast<Eigen::Index>(inputs.length()));
  ReservoirState x = x0;
  for (std::size_t t = 0; t < inputs.length(); ++t) {
    x = update_state(x, inputs.values().row(static_cast<Eigen::Index>(t)).transpose(), w,
                     model.params.leak, act);
    states.col(static_cast<Eigen::Index>(t)) = x;
  }
  return states;
}

/// W_out = Y F^T (F F^T + beta I)^{-1} via a factorized symmetric solve.
/// `features` is p x T, `targets` is l x T.
Eigen::MatrixXd ridge_solve(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets, double beta);

struct TrainResult {
  EsnModel model;
  double training_mse = 0.0;
  /// Reservoir state after the last training input (warm start at the train/test boundary).
  ReservoirState final_state;
};

/// Teacher-forced training: inputs row t drives the reservoir, targets row t is the
/// desired output for features (1, u(t), x(t)).
TrainResult train(const EsnWeights& w, const TimeSeries& inputs, const TimeSeries& targets,
                  const EsnHyperParams& hp);

/// (inputs, targets) pairs: u(t) = first m channels of p(t-1), y(t) = first l of p(t).
std::pair<TimeSeries, TimeSeries> teacher_pairs(const TimeSeries& series, std::size_t m, std::size_t l);

/// Feature vector (1, u, x).
Eigen::VectorXd feature_vector(const Eigen::Ref<const Eigen::VectorXd>& u, const ReservoirState& x);

Eigen::VectorXd readout(const EsnModel& model, const Eigen::Ref<const Eigen::VectorXd>& u,
                        const ReservoirState& x);

/// Drives from the zero state through `warmup` and returns the final state.
ReservoirState washout_init(const EsnModel& model, const TimeSeries& warmup);

struct PredictOptions {
  double dt = 1.0;
  double bound = 1e6;
  std::vector<std::string> labels;  // defaults to y0..y{l-1}
};

/// Closed loop: x <- update(x, u); y <- readout(u, x); u <- first m of y. Emits every y.
TimeSeries predict_autonomous(const EsnModel& model, const Eigen::Ref<const Eigen::VectorXd>& u_start,
                              const ReservoirState& x_start, std::size_t n_steps,
                              const PredictOptions& opts = {});

}  // namespace chaosesn

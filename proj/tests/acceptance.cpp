// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "chaosesn/harness.hpp"

#include <chrono>
#include <cstdio>
#include <random>
#include <string>

using namespace chaosesn;

namespace {

// Pinned targets and tolerances.
constexpr double kLorenzMle = 0.974, kLorenzMleTol = 0.05;
constexpr double kChuaMle = 0.105, kChuaMleTol = 0.03;
constexpr double kLorenzSampEn = 0.093, kChuaSampEn = 0.082, kSampEnTol = 0.01;
constexpr double kLorenzKc = 1.012, kChuaKc = 0.758, kKcTol = 0.1;
constexpr double kGroundTruthSeconds = 120.0;

constexpr double kLorenzPh = 4.1054, kChuaPh = 1.87, kPhTol = 1.5;
constexpr std::size_t kMinEnsemble = 200;
constexpr double kShortTermSeconds = 15.0 * 60.0;

constexpr double kLongRunTolFactor = 2.0;
constexpr double kKdeL1Max = 0.15;
constexpr double kRowTol = 1e-10;
constexpr int kRidgeInstances = 50;
constexpr double kRidgeRelTol = 1e-8;
constexpr std::size_t kVarSteps = 500;
constexpr double kVarTol = 1e-6;

constexpr double kDelta0 = 2.22e-3;
constexpr double kMedianGapMax = 1.0;
constexpr double kSupportMin = 15.0;
constexpr std::size_t kPerturbationSeeds = 3;
constexpr std::size_t kPerturbationEnsemble = 5000;
constexpr double kNoiseLevel = 0.2;
constexpr double kNoiseRatioMax = 0.5;

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentConfig preset(const char* name) {
  return load_config(std::filesystem::path(CHAOSESN_CONFIG_DIR) / name);
}

struct Targets {
  const char* label;
  const char* config;
  double mle, mle_tol, sampen, kc, ph;
};

const Targets kSystems[] = {
    {"lorenz", "lorenz.json", kLorenzMle, kLorenzMleTol, kLorenzSampEn, kLorenzKc, kLorenzPh},
    {"chua", "chua.json", kChuaMle, kChuaMleTol, kChuaSampEn, kChuaKc, kChuaPh},
};

void check_stats(const std::string& prefix, const ChannelMetrics& m, const Targets& t, double factor,
                 const std::string& suffix) {
  report(std::abs(m.mle - t.mle) <= factor * t.mle_tol, prefix + " MLE",
         fmt("%.4f (target %.3f +/- %.3f)%s", m.mle, t.mle, factor * t.mle_tol, suffix.c_str()));
  report(std::abs(m.sample_entropy - t.sampen) <= factor * kSampEnTol, prefix + " SampEn",
         fmt("%.4f (target %.3f +/- %.3f)%s", m.sample_entropy, t.sampen, factor * kSampEnTol, suffix.c_str()));
  report(std::abs(m.k_c - t.kc) <= factor * kKcTol, prefix + " K_c",
         fmt("%.4f (target %.3f +/- %.3f)%s", m.k_c, t.kc, factor * kKcTol, suffix.c_str()));
}

void system_criteria(const Targets& t) {
  const ExperimentConfig cfg = preset(t.config);
  const MetricSettings settings = MetricSettings::for_reference_mle(cfg.lyapunov_exponent());

  auto t0 = std::chrono::steady_clock::now();
  const Dataset data = make_dataset(cfg);
  const ChannelMetrics truth = compute_channel_metrics(data.series.channel(0), settings);
  const double gt_seconds = seconds_since(t0);
  check_stats(std::string("ground truth ") + t.label, truth, t, 1.0, fmt(", %.1f s", gt_seconds));
  report(gt_seconds < kGroundTruthSeconds, std::string("ground truth ") + t.label + " runtime",
         fmt("%.1f s (limit %.0f s)", gt_seconds, kGroundTruthSeconds));

  t0 = std::chrono::steady_clock::now();
  const auto [train, test] = split(data, cfg.split);
  const TrainResult trained = fit_esn(cfg, train.series);
  const double mle = cfg.lyapunov_exponent();
  const double dt = data.series.dt();
  const std::size_t washout = cfg.washout_steps(dt);
  const auto horizon = static_cast<std::size_t>(std::ceil(cfg.prediction_lyapunov_times / (mle * dt)));
  const auto samples = ph_distribution(trained.model, test.series, cfg.thresholds, cfg.ensemble_size, cfg.seed,
                                       {washout, horizon, mle, resolve_threads(cfg.threads)});
  const auto table = median_table(samples, cfg.thresholds);
  const double short_seconds = seconds_since(t0);
  std::vector<double> medians;
  for (const auto& row : table) medians.push_back(row["median"].is_number() ? row["median"].get<double>() : INFINITY);
  const std::string preset_note = fmt("preset %s, %zu ICs", cfg.name.c_str(), cfg.ensemble_size);
  report(cfg.ensemble_size >= kMinEnsemble && std::abs(medians[0] - t.ph) <= kPhTol,
         std::string("short-term ") + t.label + " median P(0.01)",
         fmt("%.3f LT (target %.4f +/- %.1f, %s)", medians[0], t.ph, kPhTol, preset_note.c_str()));
  bool increasing = true;
  std::string list;
  for (std::size_t i = 0; i < medians.size(); ++i) {
    if (i > 0 && !(medians[i] > medians[i - 1])) increasing = false;
    list += fmt("%sP(%g)=%.3f", i ? ", " : "", cfg.thresholds[i], medians[i]);
  }
  report(increasing, std::string("short-term ") + t.label + " medians increase with r", list);
  report(short_seconds < kShortTermSeconds, std::string("short-term ") + t.label + " runtime",
         fmt("%.1f s (limit %.0f s)", short_seconds, kShortTermSeconds));

  // long autonomous run continuing from the end of training
  const auto m = static_cast<Eigen::Index>(trained.model.input_dim());
  PredictOptions opts;
  opts.dt = dt;
  TimeSeries run;
  try {
    run = predict_autonomous(trained.model, train.series.sample(train.series.length() - 1).head(m),
                             trained.final_state, cfg.long_run_steps, opts);
  } catch (const DivergenceError& e) {
    report(false, std::string("long-run ") + t.label, std::string("prediction diverged: ") + e.what());
    return;
  }
  try {
    const ChannelMetrics pred = compute_channel_metrics(run.channel(0), settings);
    check_stats(std::string("long-run ") + t.label, pred, t, kLongRunTolFactor,
                fmt(", %zu predicted steps", cfg.long_run_steps));
  } catch (const Error& e) {
    report(false, std::string("long-run ") + t.label + " metrics", e.what());
  }
  for (std::size_t c = 0; c < run.dim(); ++c) {
    const std::vector<TimeSeries> both{data.series.channel(c), run.channel(c)};
    const Eigen::VectorXd grid = kde_grid(both);
    const double l1 = kde_l1_distance(kde(both[0], grid), kde(both[1], grid));
    report(l1 < kKdeL1Max, std::string("KDE ") + t.label + " channel " + data.series.channels()[c],
           fmt("L1 %.4f (limit %.2f)", l1, kKdeL1Max));
  }
}

void row_independence() {
  ExperimentConfig full = preset("lorenz.json");
  ExperimentConfig partial = full;
  partial.io_mode = IoMode::PartialInPartialOut;
  const auto [train, test] = split(make_dataset(full), full.split);
  const TrainResult a = fit_esn(full, train.series);
  const TrainResult b = fit_esn(partial, train.series);
  const double row_gap = (a.model.weights.w_out->row(0) - b.model.weights.w_out->row(0)).cwiseAbs().maxCoeff();
  report(row_gap <= kRowTol, "row independence first readout row", fmt("max |diff| %.3g (limit %.0e)", row_gap, kRowTol));

  const Eigen::VectorXd u = train.series.sample(train.series.length() - 1).head(1);
  const TimeSeries pa = predict_autonomous(a.model, u, a.final_state, 2000);
  const TimeSeries pb = predict_autonomous(b.model, u, b.final_state, 2000);
  const double pred_gap = (pa.values().col(0) - pb.values().col(0)).cwiseAbs().maxCoeff();
  report(pred_gap == 0.0, "row independence channel-1 predictions", fmt("max |diff| %.3g over 2000 steps", pred_gap));
}

void ridge_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> pick_n(5, 40), pick_t(60, 200);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int trial = 0; trial < kRidgeInstances; ++trial) {
    EsnHyperParams hp;
    hp.n_nodes = static_cast<std::size_t>(pick_n(rng));
    hp.density = 0.3;
    hp.input_dim = 1 + static_cast<std::size_t>(trial % 2);
    hp.output_dim = hp.input_dim + static_cast<std::size_t>(trial % 3);
    hp.ridge = std::pow(10.0, -2 - trial % 7);
    hp.washout = static_cast<std::size_t>(trial % 10);
    hp.seed = static_cast<std::uint64_t>(trial + 1);
    const auto t = static_cast<Eigen::Index>(pick_t(rng));
    Eigen::MatrixXd u(t, hp.input_dim), y(t, hp.output_dim);
    for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = normal(rng);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = normal(rng);
    const TimeSeries inputs = TimeSeries::with_default_labels(u, 1.0);
    const TimeSeries targets = TimeSeries::with_default_labels(y, 1.0);
    const EsnWeights w = init_weights(hp);
    const TrainResult r = train(w, inputs, targets, hp);

    const Eigen::MatrixXd states = drive(EsnModel{hp, w}, inputs, ReservoirState::Zero(hp.n_nodes));
    const Eigen::Index used = t - static_cast<Eigen::Index>(hp.washout);
    const auto p = static_cast<Eigen::Index>(1 + hp.input_dim + hp.n_nodes);
    Eigen::MatrixXd f(p, used);
    f.row(0).setOnes();
    f.middleRows(1, hp.input_dim) = u.bottomRows(used).transpose();
    f.bottomRows(hp.n_nodes) = states.rightCols(used);
    const Eigen::MatrixXd gram = f * f.transpose() + hp.ridge * Eigen::MatrixXd::Identity(p, p);
    const Eigen::MatrixXd oracle = (y.bottomRows(used).transpose() * f.transpose()) * gram.inverse();
    worst = std::max(worst, (*r.model.weights.w_out - oracle).norm() / oracle.norm());
  }
  report(worst <= kRidgeRelTol, "ridge solve vs normal equations",
         fmt("worst relative error %.3g over %d instances (limit %.0e)", worst, kRidgeInstances, kRidgeRelTol));
}

void var_equivalence() {
  EsnHyperParams hp;
  hp.n_nodes = 100;
  hp.density = 0.05;
  hp.spectral_radius = 0.9;
  hp.seed = 77;
  const EsnModel model{hp, init_weights(hp)};
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd u(kVarSteps, 1);
  for (auto& v : u.reshaped()) v = normal(rng);
  const Eigen::MatrixXd states =
      drive(model, TimeSeries::with_default_labels(u, 1.0), ReservoirState::Zero(100), IdentityActivation{});

  const double a = hp.leak;
  const Eigen::MatrixXd big_a =
      (1.0 - a) * Eigen::MatrixXd::Identity(100, 100) + a * Eigen::MatrixXd(model.weights.w);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(100);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(100, 100);
  for (std::size_t j = 0; j < kVarSteps; ++j) {
    sum += power * (a * (model.weights.w_in.col(0) +
                         model.weights.w_in.col(1) * u(static_cast<Eigen::Index>(kVarSteps - 1 - j), 0)));
    power = power * big_a;
  }
  const double gap = (states.col(kVarSteps - 1) - sum).cwiseAbs().maxCoeff();
  report(gap <= kVarTol, "linear VAR equivalence", fmt("max |diff| %.3g at k=%zu (limit %.0e)", gap, kVarSteps, kVarTol));
}

void perturbation_equivalence() {
  const ExperimentConfig base = preset("lorenz.json");
  const Dataset data = make_dataset(base);
  const auto [train, test] = split(data, base.split);
  const double mle = base.lyapunov_exponent();
  const double dt = data.series.dt();
  const std::size_t washout = base.washout_steps(dt);
  const auto horizon = static_cast<std::size_t>(std::ceil(base.prediction_lyapunov_times / (mle * dt)));
  const std::size_t threads = resolve_threads(base.threads);
  const double r = base.thresholds.front();

  double esn_sum = 0.0, div_sum = 0.0;
  double esn_max = 0.0, div_max = 0.0, esn_min = INFINITY, div_min = INFINITY;
  std::string detail;
  for (std::size_t s = 1; s <= kPerturbationSeeds; ++s) {
    ExperimentConfig cfg = base;
    cfg.seed = s;
    cfg.esn.seed = s;
    const TrainResult trained = fit_esn(cfg, train.series);
    const auto esn = ph_distribution(trained.model, test.series, {r}, kPerturbationEnsemble, s,
                                     {washout, horizon, mle, threads});
    const auto div = divergence_study(*cfg.system, kDelta0, r, kPerturbationEnsemble, s,
                                      cfg.prediction_lyapunov_times, threads);
    const double me = median_ph(esn).median, md = median_ph(div).median;
    esn_sum += me;
    div_sum += md;
    for (const auto& x : esn)
      if (x.crossed()) esn_max = std::max(esn_max, x.value), esn_min = std::min(esn_min, x.value);
    for (const auto& x : div)
      if (x.crossed()) div_max = std::max(div_max, x.value), div_min = std::min(div_min, x.value);
    detail += fmt("%sseed %zu: ESN %.3f / divergence %.3f", s > 1 ? "; " : "", s, me, md);
  }
  const double esn_mean = esn_sum / kPerturbationSeeds, div_mean = div_sum / kPerturbationSeeds;
  report(std::abs(esn_mean - div_mean) <= kMedianGapMax, "perturbation equivalence medians",
         fmt("seed-averaged ESN %.3f vs divergence %.3f LT (limit %.1f); ", esn_mean, div_mean, kMedianGapMax) + detail);
  const bool overlap = std::max(esn_min, div_min) < std::min(esn_max, div_max);
  report(overlap && esn_max >= kSupportMin && div_max >= kSupportMin, "perturbation equivalence supports",
         fmt("ESN [%.2f, %.2f], divergence [%.2f, %.2f] LT over %zu x %zu samples (need both >= %.0f)", esn_min,
             esn_max, div_min, div_max, kPerturbationSeeds, kPerturbationEnsemble, kSupportMin));
}

void noise_robustness() {
  ExperimentConfig cfg = preset("lorenz.json");
  const ExperimentReport rep = noise_sweep(cfg);
  if (rep.failed_stage) {
    report(false, "noise robustness", "stage " + *rep.failed_stage + " failed: " + rep.error.value_or(""));
    return;
  }
  double clean = NAN, noisy = NAN;
  std::string detail;
  for (const auto& level : rep.summary["noise_sweep"]) {
    const double sigma = level["sigma_rel"].get<double>();
    const auto& first = level["ph"][0];
    const double med = first["median"].is_number() ? first["median"].get<double>() : INFINITY;
    if (sigma == 0.0) clean = med;
    if (sigma == kNoiseLevel) noisy = med;
    detail += fmt("%s%.2f: %.3f", detail.empty() ? "" : ", ", sigma, med);
  }
  report(noisy <= kNoiseRatioMax * clean, "noise robustness",
         fmt("median P(0.01) at noise %.1f is %.3f vs noise-free %.3f (need <= %.1fx); levels ", kNoiseLevel, noisy,
             clean, kNoiseRatioMax) + detail);
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& t : kSystems) {
    try {
      system_criteria(t);
    } catch (const std::exception& e) {
      report(false, std::string("system criteria ") + t.label, e.what());
    }
  }
  for (auto* check : {&row_independence, &ridge_oracle, &var_equivalence, &perturbation_equivalence,
                      &noise_robustness}) {
    try {
      check();
    } catch (const std::exception& e) {
      report(false, "criterion raised", e.what());
    }
  }
  std::printf("acceptance: %d failing criteria, %.1f s total\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}

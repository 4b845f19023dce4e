#include "chaosesn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <random>
#include <set>
#include <thread>

namespace chaosesn {

using nlohmann::json;

std::string to_string(IoMode mode) {
  switch (mode) {
    case IoMode::PartialInFullOut: return "partial-in-full-out";
    case IoMode::FullInFullOut: return "full-in-full-out";
    case IoMode::PartialInPartialOut: return "partial-in-partial-out";
  }
  return "unknown";
}

IoMode io_mode_from_string(const std::string& name) {
  for (IoMode m : {IoMode::PartialInFullOut, IoMode::FullInFullOut, IoMode::PartialInPartialOut})
    if (to_string(m) == name) return m;
  throw ConfigError("unknown io_mode '" + name + "'");
}

void ExperimentConfig::validate() const {
  if (system.has_value() == dataset.has_value())
    throw ConfigError("exactly one of 'system' and 'dataset' must be given");
  if (system) {
    try {
      system->validate();
    } catch (const ArgumentError& e) {
      throw ConfigError(std::string("system: ") + e.what());
    }
  }
  if (dataset && !reference_mle) throw ConfigError("a dataset config needs 'reference_mle'");
  if (reference_mle && !(*reference_mle > 0.0)) throw ConfigError("reference_mle must be > 0");
  if (thresholds.empty()) throw ConfigError("thresholds must be non-empty");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0)) throw ConfigError("thresholds must be positive");
    if (i > 0 && !(thresholds[i] > thresholds[i - 1])) throw ConfigError("thresholds must be strictly ascending");
  }
  if (ensemble_size < 1) throw ConfigError("ensemble_size must be >= 1");
  for (double s : noise_levels)
    if (!(s >= 0.0)) throw ConfigError("noise levels must be >= 0");
  if (!(split.train_fraction > 0.0 && split.train_fraction < 1.0))
    throw ConfigError("split.train_fraction must lie in (0, 1)");
  if (!(transient_lyapunov_times >= 0.0)) throw ConfigError("transient_lyapunov_times must be >= 0");
  if (!(prediction_lyapunov_times > 0.0)) throw ConfigError("prediction_lyapunov_times must be > 0");
  if (long_run_steps < 1) throw ConfigError("long_run_steps must be >= 1");
  if (!(delta0 > 0.0)) throw ConfigError("divergence.delta0 must be > 0");
  if (divergence_pairs < 1) throw ConfigError("divergence.pairs must be >= 1");
  EsnHyperParams probe = esn;
  probe.input_dim = 1;
  probe.output_dim = 1;
  try {
    probe.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("esn: ") + e.what());
  }
}

double ExperimentConfig::lyapunov_exponent() const {
  if (reference_mle) return *reference_mle;
  if (system) return ::chaosesn::reference_mle(system->kind);
  throw ConfigError("no reference MLE available");
}

std::size_t ExperimentConfig::washout_steps(double dt) const {
  return esn.washout > 0 ? esn.washout : default_washout(lyapunov_exponent(), dt);
}

std::pair<std::size_t, std::size_t> ExperimentConfig::io_dims(std::size_t dim) const {
  switch (io_mode) {
    case IoMode::PartialInFullOut: return {1, dim};
    case IoMode::FullInFullOut: return {dim, dim};
    case IoMode::PartialInPartialOut: return {1, 1};
  }
  return {1, dim};
}

namespace {

const std::set<std::string> kConfigKeys = {
    "name",   "system",        "dataset",        "esn",        "split",
    "thresholds", "ensemble_size", "noise_levels", "io_mode",  "seed",
    "reference_mle", "transient_lyapunov_times", "prediction_lyapunov_times", "long_run_steps", "threads",
    "divergence", "preset", "description"};

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!kConfigKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
  ExperimentConfig cfg;
  try {
    cfg.name = j.value("name", cfg.name);
    if (j.contains("system")) cfg.system = j.at("system").get<SystemSpec>();
    if (j.contains("dataset")) cfg.dataset = std::filesystem::path(j.at("dataset").get<std::string>());
    if (j.contains("esn")) cfg.esn = j.at("esn").get<EsnHyperParams>();
    if (j.contains("split")) cfg.split.train_fraction = j.at("split").value("train_fraction", cfg.split.train_fraction);
    cfg.thresholds = j.value("thresholds", cfg.thresholds);
    cfg.ensemble_size = j.value("ensemble_size", cfg.ensemble_size);
    cfg.noise_levels = j.value("noise_levels", cfg.noise_levels);
    if (j.contains("io_mode")) cfg.io_mode = io_mode_from_string(j.at("io_mode").get<std::string>());
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("reference_mle")) cfg.reference_mle = j.at("reference_mle").get<double>();
    cfg.transient_lyapunov_times = j.value("transient_lyapunov_times", cfg.transient_lyapunov_times);
    cfg.prediction_lyapunov_times = j.value("prediction_lyapunov_times", cfg.prediction_lyapunov_times);
    cfg.long_run_steps = j.value("long_run_steps", cfg.long_run_steps);
    cfg.threads = j.value("threads", cfg.threads);
    if (j.contains("divergence")) {
      const auto& d = j.at("divergence");
      cfg.delta0 = d.value("delta0", cfg.delta0);
      cfg.divergence_pairs = d.value("pairs", cfg.divergence_pairs);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  cfg.validate();
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j = {{"name", cfg.name},
            {"esn", cfg.esn},
            {"split", {{"train_fraction", cfg.split.train_fraction}}},
            {"thresholds", cfg.thresholds},
            {"ensemble_size", cfg.ensemble_size},
            {"noise_levels", cfg.noise_levels},
            {"io_mode", to_string(cfg.io_mode)},
            {"seed", cfg.seed},
            {"transient_lyapunov_times", cfg.transient_lyapunov_times},
            {"prediction_lyapunov_times", cfg.prediction_lyapunov_times},
            {"long_run_steps", cfg.long_run_steps},
            {"threads", cfg.threads},
            {"divergence", {{"delta0", cfg.delta0}, {"pairs", cfg.divergence_pairs}}}};
  if (cfg.system) j["system"] = *cfg.system;
  if (cfg.dataset) j["dataset"] = cfg.dataset->string();
  if (cfg.reference_mle) j["reference_mle"] = *cfg.reference_mle;
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  auto cfg = config_from_json(j);
  if (cfg.dataset && cfg.dataset->is_relative()) cfg.dataset = path.parent_path() / *cfg.dataset;
  return cfg;
}

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

namespace {

// Runs body(i) for i in [0, n) on up to `threads` workers. Each index writes
// only its own output slot, so results do not depend on scheduling.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body) {
  threads = std::min(std::max<std::size_t>(threads, 1), std::max<std::size_t>(n, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

// Autonomous prediction that survives a blow-up: the part before the
// blow-up is returned together with the step at which it happened.
std::pair<TimeSeries, std::optional<std::size_t>> guarded_prediction(const EsnModel& model,
                                                                     const Eigen::VectorXd& u_start,
                                                                     const ReservoirState& x_start,
                                                                     std::size_t n_steps, double dt) {
  PredictOptions opts;
  opts.dt = dt;
  try {
    return {predict_autonomous(model, u_start, x_start, n_steps, opts), std::nullopt};
  } catch (const DivergenceError& e) {
    const std::size_t done = e.steps_completed();
    if (done == 0) return {TimeSeries(), 0};
    return {predict_autonomous(model, u_start, x_start, done, opts), done};
  }
}

}  // namespace

Dataset make_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset) return load_csv(*cfg.dataset);
  const auto& spec = *cfg.system;
  const double transient = cfg.transient_lyapunov_times / cfg.lyapunov_exponent();
  auto series = attractor_trajectory(spec, default_initial_condition(spec.kind), transient);
  return {std::move(series), DataSource::Simulated,
          "simulated " + to_string(spec.kind) + ", dt=" + std::to_string(spec.dt) + ", " +
              std::to_string(spec.n_steps) + " steps"};
}

TrainResult fit_esn(const ExperimentConfig& cfg, const TimeSeries& train_series) {
  EsnHyperParams hp = cfg.esn;
  const auto [m, l] = cfg.io_dims(train_series.dim());
  hp.input_dim = m;
  hp.output_dim = l;
  hp.washout = cfg.washout_steps(train_series.dt());
  const auto [inputs, targets] = teacher_pairs(train_series, m, l);
  return train(init_weights(hp), inputs, targets, hp);
}

std::vector<PhSample> ph_distribution(const EsnModel& model, const TimeSeries& test_data,
                                      const std::vector<double>& r_list, std::size_t ensemble_size,
                                      std::uint64_t seed, const EnsembleOptions& opts) {
  if (r_list.empty()) throw ArgumentError("ph_distribution: r_list is empty");
  if (ensemble_size < 1) throw ArgumentError("ph_distribution: ensemble_size must be >= 1");
  if (opts.washout < 1 || opts.horizon_steps < 1)
    throw ArgumentError("ph_distribution: washout and horizon must be >= 1");
  const std::size_t m = model.input_dim(), l = model.output_dim();
  if (test_data.dim() < l) throw ArgumentError("ph_distribution: test data has fewer channels than the readout");
  const std::size_t window = opts.washout + 1 + opts.horizon_steps;
  if (test_data.length() < window || test_data.length() - window + 1 < ensemble_size)
    throw ArgumentError("ph_distribution: test data too short for " + std::to_string(ensemble_size) +
                        " windows of " + std::to_string(window) + " samples");
  const std::size_t n_starts = test_data.length() - window + 1;
  const double stride = static_cast<double>(n_starts) / static_cast<double>(ensemble_size);
  std::mt19937_64 rng(seed);
  const double offset = std::uniform_real_distribution<double>(0.0, 1.0)(rng) * stride;

  const Eigen::MatrixXd& values = test_data.values();
  const auto& w = model.weights;
  const Eigen::MatrixXd& w_out = *w.w_out;
  const auto n = static_cast<Eigen::Index>(model.n_nodes());
  const auto mi = static_cast<Eigen::Index>(m), li = static_cast<Eigen::Index>(l);
  const double leak = model.params.leak;
  const double dt = test_data.dt();
  const double r_max = *std::max_element(r_list.begin(), r_list.end());
  constexpr std::size_t batch = 32;
  const std::size_t n_batches = (ensemble_size + batch - 1) / batch;
  std::vector<PhSample> out(ensemble_size * r_list.size());

  // ICs of one batch advance together as columns of a state matrix; a column
  // is retired once its cumulative error has crossed every threshold.
  parallel_for(n_batches, opts.threads, [&](std::size_t b) {
    const std::size_t first = b * batch;
    const auto cols = static_cast<Eigen::Index>(std::min(batch, ensemble_size - first));
    std::vector<std::size_t> starts(static_cast<std::size_t>(cols));
    for (Eigen::Index j = 0; j < cols; ++j)
      starts[static_cast<std::size_t>(j)] =
          static_cast<std::size_t>(std::floor(offset + static_cast<double>(first + static_cast<std::size_t>(j)) * stride));

    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, cols);
    Eigen::MatrixXd u(mi, cols);
    Eigen::MatrixXd pre(n, cols);
    auto step = [&] {
      pre.noalias() = w.w * x;
      pre.noalias() += w.w_in.rightCols(mi) * u;
      pre.colwise() += w.w_in.col(0);
      x = (1.0 - leak) * x + leak * pre.array().tanh().matrix();
    };
    for (std::size_t k = 0; k < opts.washout; ++k) {
      for (Eigen::Index j = 0; j < cols; ++j)
        u.col(j) = values.row(static_cast<Eigen::Index>(starts[static_cast<std::size_t>(j)] + k)).head(mi).transpose();
      step();
    }
    for (Eigen::Index j = 0; j < cols; ++j)
      u.col(j) = values.row(static_cast<Eigen::Index>(starts[static_cast<std::size_t>(j)] + opts.washout)).head(mi).transpose();

    for (Eigen::Index j = 0; j < cols; ++j)
      for (std::size_t k = 0; k < r_list.size(); ++k) {
        auto& s = out[(first + static_cast<std::size_t>(j)) * r_list.size() + k];
        s.r = r_list[k];
        s.ic_index = first + static_cast<std::size_t>(j);
      }
    Eigen::VectorXd running = Eigen::VectorXd::Zero(cols);
    std::vector<bool> live(static_cast<std::size_t>(cols), true);
    Eigen::Index n_live = cols;
    Eigen::MatrixXd y(li, cols);
    for (std::size_t t = 0; t < opts.horizon_steps && n_live > 0; ++t) {
      step();
      y.noalias() = w_out.middleCols(1, mi) * u;
      y.noalias() += w_out.rightCols(n) * x;
      y.colwise() += w_out.col(0);
      const double ph = static_cast<double>(t + 1) * dt * opts.mle;
      for (Eigen::Index j = 0; j < cols; ++j) {
        const auto js = static_cast<std::size_t>(j);
        if (!live[js]) continue;
        auto* samples = &out[(first + js) * r_list.size()];
        const bool blown = !y.col(j).allFinite() || y.col(j).cwiseAbs().maxCoeff() > 1e6;
        if (!blown) {
          const auto row = static_cast<Eigen::Index>(starts[js] + opts.washout + 1 + t);
          running(j) += (y.col(j) - values.row(row).head(li).transpose()).squaredNorm();
        }
        const double cum = running(j) / (static_cast<double>(t + 1) * static_cast<double>(l));
        for (std::size_t k = 0; k < r_list.size(); ++k)
          if (!samples[k].crossed() && (blown || cum > r_list[k])) samples[k].value = ph;
        if (blown || cum > r_max) {
          live[js] = false;
          --n_live;
          y.col(j).setZero();
          x.col(j).setZero();
        }
      }
      u = y.topRows(mi);
    }
  });
  return out;
}

std::vector<PhSample> divergence_study(const SystemSpec& spec, double delta0, double r, std::size_t n_pairs,
                                       std::uint64_t seed, double horizon_lyapunov_times, std::size_t threads) {
  if (!(delta0 > 0.0)) throw ArgumentError("divergence_study: delta0 must be > 0");
  if (n_pairs < 1) throw ArgumentError("divergence_study: n_pairs must be >= 1");
  spec.validate();
  const double mle = reference_mle(spec.kind);
  const double lyapunov_time = 1.0 / mle;

  // Starting points are taken one Lyapunov time apart along a settled orbit.
  SystemSpec base = spec;
  const auto spacing = static_cast<std::size_t>(std::ceil(lyapunov_time / spec.dt));
  base.n_steps = spacing * (n_pairs - 1) + 1;
  const TimeSeries orbit = attractor_trajectory(base, default_initial_condition(spec.kind), 20.0 * lyapunov_time);

  SystemSpec pair_spec = spec;
  pair_spec.n_steps = static_cast<std::size_t>(std::ceil(horizon_lyapunov_times * lyapunov_time / spec.dt)) + 1;
  std::vector<PhSample> out(n_pairs);
  parallel_for(n_pairs, threads, [&](std::size_t i) {
    const Eigen::Vector3d ic = orbit.sample(i * spacing);
    const auto [a, b] = perturbed_pair(pair_spec, ic, delta0, mix_seed(seed, i));
    // Row 0 holds the initial conditions themselves; the comparison starts one step later.
    out[i] = divergence_time(a.slice(1, a.length() - 1), b.slice(1, b.length() - 1), r, mle, i);
  });
  return out;
}

json median_table(std::span<const PhSample> samples, const std::vector<double>& r_list) {
  json rows = json::array();
  for (double r : r_list) {
    std::vector<PhSample> at_r;
    for (const auto& s : samples)
      if (s.r == r) at_r.push_back(s);
    if (at_r.empty()) continue;
    const auto med = median_ph(at_r);
    double max_finite = 0.0;
    for (const auto& s : at_r)
      if (s.crossed()) max_finite = std::max(max_finite, s.value);
    rows.push_back({{"r", r},
                    {"median", std::isfinite(med.median) ? json(med.median) : json("inf")},
                    {"max_crossed", max_finite},
                    {"never_crossed", med.never_crossed},
                    {"count", med.count}});
  }
  return rows;
}

namespace {

struct Prepared {
  Dataset data;
  Dataset train;
  Dataset test;
  double mle = 0.0;
  std::size_t washout = 0;
  std::size_t horizon = 0;
  std::size_t threads = 1;
};

Prepared prepare(const ExperimentConfig& cfg) {
  Prepared p;
  p.data = make_dataset(cfg);
  std::tie(p.train, p.test) = split(p.data, cfg.split);
  p.mle = cfg.lyapunov_exponent();
  p.washout = cfg.washout_steps(p.data.series.dt());
  p.horizon = static_cast<std::size_t>(std::ceil(cfg.prediction_lyapunov_times / (p.mle * p.data.series.dt())));
  p.threads = resolve_threads(cfg.threads);
  return p;
}

json metrics_json(const ChannelMetrics& m) {
  return {{"mle", m.mle}, {"sample_entropy", m.sample_entropy}, {"k_c", m.k_c}};
}

// Runs a stage; on failure the report records which stage broke and why.
bool stage(ExperimentReport& report, const std::string& name, const std::function<void()>& body) {
  try {
    body();
    return true;
  } catch (const NumericError& e) {
    report.failed_stage = name;
    report.error = e.what();
    report.numeric_failure = true;
  } catch (const Error& e) {
    report.failed_stage = name;
    report.error = e.what();
  }
  report.summary["failed_stage"] = name;
  report.summary["error"] = *report.error;
  return false;
}

std::string attractor_csv(const TimeSeries& s, std::size_t max_rows) {
  const std::size_t stride = std::max<std::size_t>(1, (s.length() + max_rows - 1) / max_rows);
  return to_csv(s.downsample(stride));
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport report;
  report.summary = {{"config", config_to_json(cfg)}};
  Prepared p;
  if (!stage(report, "data", [&] { p = prepare(cfg); })) return report;
  report.summary["data"] = {{"provenance", p.data.provenance},
                            {"source", to_string(p.data.source)},
                            {"samples", p.data.series.length()},
                            {"train_samples", p.train.series.length()},
                            {"test_samples", p.test.series.length()},
                            {"dt", p.data.series.dt()},
                            {"washout", p.washout},
                            {"horizon_steps", p.horizon}};

  TrainResult trained;
  if (!stage(report, "train", [&] { trained = fit_esn(cfg, p.train.series); })) return report;
  report.summary["train"] = {{"training_mse", trained.training_mse},
                             {"input_dim", trained.model.input_dim()},
                             {"output_dim", trained.model.output_dim()}};
  report.files["model.json"] = model_to_json(trained.model).dump() + "\n";

  std::vector<PhSample> samples;
  if (!stage(report, "ph_distribution", [&] {
        samples = ph_distribution(trained.model, p.test.series, cfg.thresholds, cfg.ensemble_size, cfg.seed,
                                  {p.washout, p.horizon, p.mle, p.threads});
      }))
    return report;
  report.summary["ph"] = median_table(samples, cfg.thresholds);
  report.files["ph_samples.csv"] = ph_samples_csv(samples);

  const std::size_t l = trained.model.output_dim();
  const std::size_t m = trained.model.input_dim();
  const double dt = p.data.series.dt();

  stage(report, "mse_curve", [&] {
    const TimeSeries inputs = p.test.series.leading_channels(m);
    const ReservoirState x = washout_init(trained.model, inputs.slice(0, p.washout));
    auto [pred, blown] = guarded_prediction(trained.model, inputs.sample(p.washout), x, p.horizon, dt);
    if (pred.empty()) throw DivergenceError("mse_curve: prediction diverged immediately", 0);
    const TimeSeries truth = p.test.series.leading_channels(l).slice(p.washout + 1, pred.length());
    const TimeSeries curve = mse_curve(truth, TimeSeries(pred.values(), dt, truth.channels(), truth.t0()));
    Eigen::MatrixXd lyap(curve.length(), 2);
    for (std::size_t i = 0; i < curve.length(); ++i)
      lyap.row(static_cast<Eigen::Index>(i)) << static_cast<double>(i + 1) * dt * p.mle, curve.values()(static_cast<Eigen::Index>(i), 0);
    report.files["mse_curve.csv"] = to_csv(TimeSeries(lyap, dt, {"lyapunov_time", "mse"}, dt));
  });

  TimeSeries long_run;
  if (!stage(report, "long_run", [&] {
        const Eigen::VectorXd u = p.train.series.sample(p.train.series.length() - 1).head(static_cast<Eigen::Index>(m));
        PredictOptions opts;
        opts.dt = dt;
        opts.labels.assign(p.data.series.channels().begin(), p.data.series.channels().begin() + static_cast<long>(l));
        long_run = predict_autonomous(trained.model, u, trained.final_state, cfg.long_run_steps, opts);
      }))
    return report;

  const MetricSettings settings = MetricSettings::for_reference_mle(p.mle);
  ChannelMetrics truth_stats, pred_stats;
  if (!stage(report, "metrics", [&] {
        truth_stats = compute_channel_metrics(p.data.series.channel(0), settings);
        pred_stats = compute_channel_metrics(long_run.channel(0), settings);
      }))
    return report;
  report.summary["long_term"] = {{"channel", p.data.series.channels()[0]},
                                 {"truth", metrics_json(truth_stats)},
                                 {"prediction", metrics_json(pred_stats)}};

  stage(report, "kde", [&] {
    json kde_rows = json::array();
    for (std::size_t c = 0; c < l; ++c) {
      const TimeSeries truth_c = p.data.series.channel(c);
      const TimeSeries pred_c = long_run.channel(c);
      const std::vector<TimeSeries> both{truth_c, pred_c};
      const Eigen::VectorXd grid = kde_grid(both);
      const KdeCurve kt = kde(truth_c, grid), kp = kde(pred_c, grid);
      const std::string label = p.data.series.channels()[c];
      report.files["kde_" + label + "_truth.csv"] = kde_csv(kt);
      report.files["kde_" + label + "_prediction.csv"] = kde_csv(kp);
      kde_rows.push_back({{"channel", label}, {"l1", kde_l1_distance(kt, kp)}});
    }
    report.summary["kde"] = kde_rows;
  });

  report.files["attractor_truth.csv"] = attractor_csv(p.data.series, 20000);
  report.files["attractor_prediction.csv"] = attractor_csv(long_run, 20000);
  return report;
}

ExperimentReport ph_report(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport report;
  report.summary = {{"config", config_to_json(cfg)}};
  Prepared p;
  if (!stage(report, "data", [&] { p = prepare(cfg); })) return report;
  TrainResult trained;
  if (!stage(report, "train", [&] { trained = fit_esn(cfg, p.train.series); })) return report;
  std::vector<PhSample> samples;
  if (!stage(report, "ph_distribution", [&] {
        samples = ph_distribution(trained.model, p.test.series, cfg.thresholds, cfg.ensemble_size, cfg.seed,
                                  {p.washout, p.horizon, p.mle, p.threads});
      }))
    return report;
  report.summary["ph"] = median_table(samples, cfg.thresholds);
  report.files["ph_samples.csv"] = ph_samples_csv(samples);
  return report;
}

ExperimentReport noise_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.noise_levels.empty()) throw ConfigError("noise_levels must be non-empty");
  ExperimentReport report;
  report.summary = {{"config", config_to_json(cfg)}};
  Prepared p;
  if (!stage(report, "data", [&] { p = prepare(cfg); })) return report;

  json levels = json::array();
  std::string csv = "sigma_rel,ic_index,r,ph_lyapunov\n";
  for (std::size_t i = 0; i < cfg.noise_levels.size(); ++i) {
    const double sigma = cfg.noise_levels[i];
    const std::string name = "noise_" + std::to_string(i);
    std::vector<PhSample> samples;
    const bool ok = stage(report, name, [&] {
      const TimeSeries noisy = add_noise(p.train.series, sigma, mix_seed(cfg.seed, 1000 + i));
      const TrainResult trained = fit_esn(cfg, noisy);
      samples = ph_distribution(trained.model, p.test.series, cfg.thresholds, cfg.ensemble_size, cfg.seed,
                                {p.washout, p.horizon, p.mle, p.threads});
    });
    if (!ok) break;
    levels.push_back({{"sigma_rel", sigma}, {"ph", median_table(samples, cfg.thresholds)}});
    const std::string rows = ph_samples_csv(samples);
    std::size_t pos = rows.find('\n') + 1;
    while (pos < rows.size()) {
      const std::size_t end = rows.find('\n', pos);
      csv += json(sigma).dump() + "," + rows.substr(pos, end - pos + 1);
      pos = end + 1;
    }
  }
  report.summary["noise_sweep"] = levels;
  report.files["noise_sweep.csv"] = csv;
  return report;
}

ExperimentReport divergence_report(const ExperimentConfig& cfg) {
  cfg.validate();
  if (!cfg.system) throw ConfigError("divergence study needs a simulated 'system'");
  ExperimentReport report;
  report.summary = {{"config", config_to_json(cfg)}};
  std::vector<PhSample> samples;
  const double r = cfg.thresholds.front();
  if (!stage(report, "divergence", [&] {
        samples = divergence_study(*cfg.system, cfg.delta0, r, cfg.divergence_pairs, cfg.seed,
                                   cfg.prediction_lyapunov_times, resolve_threads(cfg.threads));
      }))
    return report;
  report.summary["divergence"] = {{"delta0", cfg.delta0}, {"ph", median_table(samples, {r})}};
  report.files["divergence_samples.csv"] = ph_samples_csv(samples);
  return report;
}

void write_report(const ExperimentReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "report.json", report.summary.dump(2) + "\n");
  for (const auto& [name, text] : report.files) write_text(out_dir / name, text);
}

}  // namespace chaosesn

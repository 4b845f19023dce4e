// Command line front end for the ESN experiment harness.
#include "chaosesn/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace chaosesn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::optional<std::size_t> threads;
};

ExperimentConfig configured(const GlobalOptions& g) {
  if (g.config.empty()) throw ConfigError("--config is required for this subcommand");
  ExperimentConfig cfg = load_config(g.config);
  if (g.seed) {
    cfg.seed = *g.seed;
    cfg.esn.seed = *g.seed;
  }
  if (g.threads) cfg.threads = *g.threads;
  return cfg;
}

int finish(const ExperimentReport& report, const std::filesystem::path& out_dir) {
  write_report(report, out_dir);
  if (report.failed_stage) {
    std::cerr << "stage '" << *report.failed_stage << "' failed: " << report.error.value_or("") << "\n";
    return report.numeric_failure ? kExitNumeric : kExitError;
  }
  std::cout << report.summary.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Echo state network forecasting of chaotic systems"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--seed", g.seed, "Override the config seed (also reseeds the reservoir)");
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0: all cores)");

  auto* simulate = app.add_subcommand("simulate", "Integrate the configured system and write a CSV");

  std::string data_path;
  auto* train_cmd = app.add_subcommand("train", "Fit a readout and write model.json");
  train_cmd->add_option("--data", data_path, "Training CSV (default: the configured data's training split)");

  std::string model_path, warmup_path;
  std::size_t n_steps = 1000;
  auto* predict = app.add_subcommand("predict", "Autonomous prediction after a warmup series");
  predict->add_option("--model", model_path, "Model file")->required();
  predict->add_option("--warmup", warmup_path, "Warmup CSV; its last row is the first input")->required();
  predict->add_option("--steps", n_steps, "Prediction length")->capture_default_str();

  std::string test_path;
  auto* evaluate = app.add_subcommand("evaluate", "PH ensemble and long-run statistics for a stored model");
  evaluate->add_option("--model", model_path, "Model file")->required();
  evaluate->add_option("--test", test_path, "Test CSV")->required();

  auto* ph = app.add_subcommand("ph-dist", "Train and sample the prediction-horizon distribution");
  auto* sweep = app.add_subcommand("noise-sweep", "Retrain on noisy data for each noise level");
  auto* diverge = app.add_subcommand("diverge", "Divergence times of perturbed trajectory pairs");
  auto* report_cmd = app.add_subcommand("report", "Full experiment with the plot-ready CSV bundle");

  CLI11_PARSE(app, argc, argv);

  const std::filesystem::path out(g.out_dir);
  try {
    if (simulate->parsed()) {
      const ExperimentConfig cfg = configured(g);
      const Dataset ds = make_dataset(cfg);
      save_dataset(ds, out / "data.csv");
      std::cout << "wrote " << (out / "data.csv").string() << " (" << ds.series.length() << " rows)\n";
      return kExitOk;
    }
    if (train_cmd->parsed()) {
      const ExperimentConfig cfg = configured(g);
      TimeSeries series = data_path.empty() ? split(make_dataset(cfg), cfg.split).first.series
                                            : load_csv(data_path).series;
      const TrainResult r = fit_esn(cfg, series);
      save_model(r.model, out / "model.json");
      std::cout << "wrote " << (out / "model.json").string() << " (training mse " << r.training_mse << ")\n";
      return kExitOk;
    }
    if (predict->parsed()) {
      const EsnModel model = load_model(model_path);
      const TimeSeries warmup = load_csv(warmup_path).series;
      if (warmup.length() < 2) throw ArgumentError("warmup needs at least two rows");
      const auto m = model.input_dim();
      const ReservoirState x = washout_init(model, warmup.slice(0, warmup.length() - 1).leading_channels(m));
      PredictOptions opts;
      opts.dt = warmup.dt();
      TimeSeries pred = predict_autonomous(model, warmup.sample(warmup.length() - 1).head(static_cast<Eigen::Index>(m)),
                                           x, n_steps, opts);
      pred = TimeSeries(pred.values(), pred.dt(), pred.channels(), warmup.time(warmup.length() - 1) + warmup.dt());
      write_csv(pred, out / "prediction.csv");
      std::cout << "wrote " << (out / "prediction.csv").string() << "\n";
      return kExitOk;
    }
    if (evaluate->parsed()) {
      const ExperimentConfig cfg = configured(g);
      const EsnModel model = load_model(model_path);
      const TimeSeries test = load_csv(test_path).series;
      const double mle = cfg.lyapunov_exponent();
      const std::size_t washout = cfg.washout_steps(test.dt());
      const auto horizon = static_cast<std::size_t>(std::ceil(cfg.prediction_lyapunov_times / (mle * test.dt())));
      ExperimentReport report;
      const auto samples = ph_distribution(model, test, cfg.thresholds, cfg.ensemble_size, cfg.seed,
                                           {washout, horizon, mle, resolve_threads(cfg.threads)});
      report.summary["ph"] = median_table(samples, cfg.thresholds);
      report.files["ph_samples.csv"] = ph_samples_csv(samples);

      const auto m = model.input_dim();
      const ReservoirState x = washout_init(model, test.slice(0, washout).leading_channels(m));
      PredictOptions opts;
      opts.dt = test.dt();
      const TimeSeries run = predict_autonomous(model, test.sample(washout).head(static_cast<Eigen::Index>(m)), x,
                                                cfg.long_run_steps, opts);
      MetricsReport metrics;
      metrics.channel = test.channels()[0];
      metrics.stats = compute_channel_metrics(run.channel(0), MetricSettings::for_reference_mle(mle));
      for (std::size_t c = 0; c < run.dim(); ++c) {
        const std::vector<TimeSeries> both{test.channel(c), run.channel(c)};
        metrics.kde_channels.push_back(test.channels()[c]);
        metrics.kde.push_back(kde(run.channel(c), kde_grid(both)));
      }
      metrics.ph_samples = samples;
      report.files["metrics.json"] = metrics_report_to_json(metrics).dump(2) + "\n";
      report.summary["long_term"] = {{"mle", metrics.stats.mle},
                                     {"sample_entropy", metrics.stats.sample_entropy},
                                     {"k_c", metrics.stats.k_c}};
      return finish(report, out);
    }
    if (ph->parsed()) return finish(ph_report(configured(g)), out);
    if (sweep->parsed()) return finish(noise_sweep(configured(g)), out);
    if (diverge->parsed()) return finish(divergence_report(configured(g)), out);
    if (report_cmd->parsed()) return finish(run_experiment(configured(g)), out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

#pragma once

#include "chaosesn/data.hpp"
#include "chaosesn/metrics.hpp"
#include "chaosesn/reservoir.hpp"
#include "chaosesn/systems.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace chaosesn {

enum class IoMode { PartialInFullOut, FullInFullOut, PartialInPartialOut };

std::string to_string(IoMode mode);
IoMode io_mode_from_string(const std::string& name);

struct ExperimentConfig {
  std::string name = "experiment";
  std::optional<SystemSpec> system;
  std::optional<std::filesystem::path> dataset;
  EsnHyperParams esn{};
  SplitSpec split{};
  std::vector<double> thresholds{0.01, 0.1, 0.3};
  std::size_t ensemble_size = 1000;
  std::vector<double> noise_levels{0.0, 0.01, 0.05, 0.1, 0.2};
  IoMode io_mode = IoMode::PartialInFullOut;
  std::uint64_t seed = 1;

  std::optional<double> reference_mle;  // defaults to the system's value
  double transient_lyapunov_times = 10.0;
  double prediction_lyapunov_times = 25.0;
  std::size_t long_run_steps = 50000;
  std::size_t threads = 0;  // 0: hardware concurrency

  double delta0 = 2.22e-3;
  std::size_t divergence_pairs = 1000;

  /// Throws ConfigError describing the first violated invariant.
  void validate() const;

  double lyapunov_exponent() const;
  std::size_t washout_steps(double dt) const;
  /// Input and output channel counts for a series with `dim` channels.
  std::pair<std::size_t, std::size_t> io_dims(std::size_t dim) const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

std::size_t resolve_threads(std::size_t requested);

/// Simulated attractor data (transient discarded) or the configured CSV.
Dataset make_dataset(const ExperimentConfig& cfg);

/// Draws the reservoir, sets dims and washout from the config, and fits the readout.
TrainResult fit_esn(const ExperimentConfig& cfg, const TimeSeries& train_series);

struct EnsembleOptions {
  std::size_t washout = 0;
  std::size_t horizon_steps = 0;
  double mle = 1.0;
  std::size_t threads = 1;
};

/// One PhSample per (ic, r), ordered by ic_index then by r. ICs are evenly
/// strided through the test set; `seed` picks the offset of the first one.
std::vector<PhSample> ph_distribution(const EsnModel& model, const TimeSeries& test_data,
                                      const std::vector<double>& r_list, std::size_t ensemble_size,
                                      std::uint64_t seed, const EnsembleOptions& opts);

/// Divergence times (Lyapunov units) of `n_pairs` perturbed trajectories
/// started from points spread along the attractor.
std::vector<PhSample> divergence_study(const SystemSpec& spec, double delta0, double r, std::size_t n_pairs,
                                       std::uint64_t seed, double horizon_lyapunov_times,
                                       std::size_t threads = 1);

struct ExperimentReport {
  nlohmann::json summary;
  std::map<std::string, std::string> files;  // relative path -> contents
  std::optional<std::string> failed_stage;
  std::optional<std::string> error;
  bool numeric_failure = false;
};

ExperimentReport run_experiment(const ExperimentConfig& cfg);
/// Train once and report the PH ensemble only.
ExperimentReport ph_report(const ExperimentConfig& cfg);
ExperimentReport noise_sweep(const ExperimentConfig& cfg);
ExperimentReport divergence_report(const ExperimentConfig& cfg);

void write_report(const ExperimentReport& report, const std::filesystem::path& out_dir);

nlohmann::json median_table(std::span<const PhSample> samples, const std::vector<double>& r_list);

}  // namespace chaosesn

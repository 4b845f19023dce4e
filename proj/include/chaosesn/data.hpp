#pragma once

#include "chaosesn/metrics.hpp"
#include "chaosesn/reservoir.hpp"
#include "chaosesn/systems.hpp"
#include "chaosesn/time_series.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>

namespace chaosesn {

enum class DataSource { Simulated, ExperimentalCSV };

std::string to_string(DataSource source);

struct Dataset {
  TimeSeries series;
  DataSource source = DataSource::Simulated;
  std::string provenance;

  Dataset() = default;
  Dataset(TimeSeries s, DataSource src, std::string prov);
};

struct SplitSpec {
  double train_fraction = 0.8;
};

// ---------------------------------------------------------------------------
// TimeSeries CSV: header `t,<ch1>,...`, 17 significant digits, LF endings.

void write_csv(const TimeSeries& series, const std::filesystem::path& path);
std::string to_csv(const TimeSeries& series);

struct CsvOptions {
  /// 0 accepts any channel count.
  std::size_t expected_channels = 0;
  /// Overrides the step inferred from the t column (and any sidecar).
  std::optional<double> dt;
  double dt_tolerance = 1e-6;
};

/// Parses CSV text; `origin` names the source in error messages.
TimeSeries parse_csv(const std::string& text, const CsvOptions& opts = {}, const std::string& origin = "<csv>");

/// Loads a recorded series. A sidecar `<path>.meta.json` (if present) supplies dt.
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& opts = {});

/// Writes the CSV and its metadata sidecar.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

/// Contiguous split: train = first floor(fraction * T) samples, test = the rest.
std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

// ---------------------------------------------------------------------------
// Model document

inline constexpr int kModelFormatVersion = 1;

nlohmann::json model_to_json(const EsnModel& model);
EsnModel model_from_json(const nlohmann::json& doc);
void save_model(const EsnModel& model, const std::filesystem::path& path);
EsnModel load_model(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// JSON conversions shared with the experiment configuration.

void to_json(nlohmann::json& j, const EsnHyperParams& hp);
void from_json(const nlohmann::json& j, EsnHyperParams& hp);
void to_json(nlohmann::json& j, const SystemSpec& spec);
void from_json(const nlohmann::json& j, SystemSpec& spec);

nlohmann::json metrics_report_to_json(const MetricsReport& report);
std::string ph_samples_csv(std::span<const PhSample> samples);
std::string kde_csv(const KdeCurve& curve);

/// Writes `text` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

struct SurrogateOptions {
  std::size_t n_steps = 120000;
  double dt = 0.057;
  double noise_rel = 0.01;
  int adc_bits = 10;
  std::uint64_t seed = 7;
};

/// Stand-in for recorded circuit data: simulated Chua series with 1% noise and
/// 10-bit quantization over each channel's range, channels V1, V2, I_L.
/// Labelled as a surrogate in its provenance.
Dataset experimental_surrogate(const SurrogateOptions& opts = {});

}  // namespace chaosesn

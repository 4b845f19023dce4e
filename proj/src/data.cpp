#include "chaosesn/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace chaosesn {

using nlohmann::json;

std::string to_string(DataSource source) {
  return source == DataSource::Simulated ? "simulated" : "experimental_csv";
}

Dataset::Dataset(TimeSeries s, DataSource src, std::string prov)
    : series(std::move(s)), source(src), provenance(std::move(prov)) {
  if (series.empty()) throw ArgumentError("Dataset: series must be non-empty");
  if (provenance.empty()) throw ArgumentError("Dataset: provenance must be non-empty");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------

namespace {

void append_double(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string to_csv(const TimeSeries& series) {
  std::string out = "t";
  for (const auto& c : series.channels()) out += "," + c;
  out += "\n";
  for (std::size_t i = 0; i < series.length(); ++i) {
    append_double(out, series.time(i));
    for (std::size_t c = 0; c < series.dim(); ++c) {
      out += ',';
      append_double(out, series.values()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
    }
    out += '\n';
  }
  return out;
}

void write_csv(const TimeSeries& series, const std::filesystem::path& path) { write_text(path, to_csv(series)); }

TimeSeries parse_csv(const std::string& text, const CsvOptions& opts, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(origin + ": empty file");
  const auto header = split_fields(trim(line));
  if (header.size() < 2 || trim(header[0]) != "t")
    throw ParseError(origin + ": header must start with 't' followed by at least one channel");
  std::vector<std::string> channels;
  for (std::size_t i = 1; i < header.size(); ++i) channels.emplace_back(trim(header[i]));
  if (opts.expected_channels && channels.size() != opts.expected_channels)
    throw ParseError(origin + ": expected " + std::to_string(opts.expected_channels) + " channels, found " +
                     std::to_string(channels.size()));

  std::vector<double> times;
  std::vector<double> flat;
  std::size_t row = 0;  // 1-based data row number in messages
  while (std::getline(in, line)) {
    const auto view = trim(line);
    if (view.empty()) continue;
    ++row;
    const auto fields = split_fields(view);
    if (fields.size() != header.size())
      throw ParseError(origin + ": row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                       " fields, expected " + std::to_string(header.size()));
    for (std::size_t f = 0; f < fields.size(); ++f) {
      const auto cell = trim(fields[f]);
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw ParseError(origin + ": row " + std::to_string(row) + ": cannot parse '" + std::string(cell) + "'");
      if (!std::isfinite(v))
        throw ParseError(origin + ": row " + std::to_string(row) + ": non-finite value");
      if (f == 0) {
        if (!times.empty() && !(v > times.back()))
          throw ParseError(origin + ": row " + std::to_string(row) + ": time is not strictly increasing");
        times.push_back(v);
      } else {
        flat.push_back(v);
      }
    }
  }
  if (times.empty()) throw ParseError(origin + ": no data rows");

  double dt = 0.0;
  if (opts.dt) {
    dt = *opts.dt;
  } else if (times.size() >= 2) {
    dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    for (std::size_t i = 1; i < times.size(); ++i) {
      const double step = times[i] - times[i - 1];
      if (std::abs(step - dt) > opts.dt_tolerance * dt)
        throw ParseError(origin + ": row " + std::to_string(i + 1) + ": sampling is not uniform");
    }
  } else {
    throw ParseError(origin + ": cannot infer dt from a single row; supply it explicitly");
  }

  const auto n = static_cast<Eigen::Index>(times.size());
  const auto d = static_cast<Eigen::Index>(channels.size());
  Eigen::MatrixXd values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(flat.data(), n, d);
  return {std::move(values), dt, std::move(channels), times.front()};
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  return std::filesystem::path(csv_path.string() + ".meta.json");
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& opts) {
  CsvOptions effective = opts;
  DataSource source = DataSource::ExperimentalCSV;
  std::string provenance = path.string();
  const auto meta_path = sidecar_path(path);
  if (std::filesystem::exists(meta_path)) {
    json meta;
    try {
      meta = json::parse(read_text(meta_path));
    } catch (const json::exception& e) {
      throw ParseError(meta_path.string() + ": " + e.what());
    }
    if (!effective.dt && meta.contains("dt")) effective.dt = meta.at("dt").get<double>();
    if (meta.value("source", "") == "simulated") source = DataSource::Simulated;
    if (meta.contains("provenance")) provenance = meta.at("provenance").get<std::string>();
  }
  auto series = parse_csv(read_text(path), effective, path.string());
  return {std::move(series), source, provenance.empty() ? path.string() : provenance};
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  write_csv(ds.series, path);
  json meta = {{"dt", ds.series.dt()},
               {"channels", ds.series.channels()},
               {"source", ds.source == DataSource::Simulated ? "simulated" : "experimental_csv"},
               {"provenance", ds.provenance}};
  write_text(sidecar_path(path), meta.dump(2) + "\n");
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw ArgumentError("split: train_fraction must lie in (0, 1)");
  const std::size_t t = ds.series.length();
  const auto n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(t)));
  if (n_train == 0 || n_train == t) throw ArgumentError("split: one side of the split would be empty");
  return {Dataset(ds.series.slice(0, n_train), ds.source, ds.provenance + " [train]"),
          Dataset(ds.series.slice(n_train, t - n_train), ds.source, ds.provenance + " [test]")};
}

// ---------------------------------------------------------------------------

void to_json(json& j, const EsnHyperParams& hp) {
  j = json{{"n_nodes", hp.n_nodes},     {"spectral_radius", hp.spectral_radius},
           {"leak", hp.leak},           {"density", hp.density},
           {"ridge", hp.ridge},         {"input_dim", hp.input_dim},
           {"output_dim", hp.output_dim}, {"washout", hp.washout},
           {"seed", hp.seed},           {"input_scaling", hp.input_scaling}};
}

void from_json(const json& j, EsnHyperParams& hp) {
  EsnHyperParams d;
  hp.n_nodes = j.value("n_nodes", d.n_nodes);
  hp.spectral_radius = j.value("spectral_radius", d.spectral_radius);
  hp.leak = j.value("leak", d.leak);
  hp.density = j.value("density", d.density);
  hp.ridge = j.value("ridge", d.ridge);
  hp.input_dim = j.value("input_dim", d.input_dim);
  hp.output_dim = j.value("output_dim", d.output_dim);
  hp.washout = j.value("washout", d.washout);
  hp.seed = j.value("seed", d.seed);
  hp.input_scaling = j.value("input_scaling", d.input_scaling);
}

void to_json(json& j, const SystemSpec& spec) {
  j = json{{"kind", to_string(spec.kind)},
           {"dt", spec.dt},
           {"n_steps", spec.n_steps},
           {"rtol", spec.tolerances.rel},
           {"atol", spec.tolerances.abs}};
  if (spec.kind == SystemKind::Lorenz63)
    j["params"] = {{"sigma", spec.lorenz.sigma}, {"rho", spec.lorenz.rho}, {"beta", spec.lorenz.beta}};
  else
    j["params"] = {{"alpha", spec.chua.alpha}, {"beta", spec.chua.beta}, {"gamma", spec.chua.gamma},
                   {"m0", spec.chua.m0},       {"m1", spec.chua.m1}};
}

void from_json(const json& j, SystemSpec& spec) {
  const auto kind = system_kind_from_string(j.at("kind").get<std::string>());
  spec = kind == SystemKind::Lorenz63 ? default_lorenz_spec() : default_chua_spec();
  spec.dt = j.value("dt", spec.dt);
  spec.n_steps = j.value("n_steps", spec.n_steps);
  spec.tolerances.rel = j.value("rtol", spec.tolerances.rel);
  spec.tolerances.abs = j.value("atol", spec.tolerances.abs);
  if (j.contains("params")) {
    const auto& p = j.at("params");
    if (kind == SystemKind::Lorenz63) {
      spec.lorenz.sigma = p.value("sigma", spec.lorenz.sigma);
      spec.lorenz.rho = p.value("rho", spec.lorenz.rho);
      spec.lorenz.beta = p.value("beta", spec.lorenz.beta);
    } else {
      spec.chua.alpha = p.value("alpha", spec.chua.alpha);
      spec.chua.beta = p.value("beta", spec.chua.beta);
      spec.chua.gamma = p.value("gamma", spec.chua.gamma);
      spec.chua.m0 = p.value("m0", spec.chua.m0);
      spec.chua.m1 = p.value("m1", spec.chua.m1);
    }
  }
  spec.validate();
}

namespace {

json dense_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> data(static_cast<std::size_t>(m.size()));
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(data.data(), m.rows(), m.cols()) = m;
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd dense_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size())
    throw ParseError("model document: dense matrix size mismatch");
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(data.data(), rows, cols);
}

}  // namespace

json model_to_json(const EsnModel& model) {
  json triplets = json::array();
  for (Eigen::Index r = 0; r < model.weights.w.outerSize(); ++r)
    for (SparseMatrixR::InnerIterator it(model.weights.w, r); it; ++it)
      triplets.push_back({it.row(), it.col(), it.value()});
  json doc = {{"format", "chaosesn-model"},
              {"format_version", kModelFormatVersion},
              {"hyperparameters", model.params},
              {"seed", model.params.seed},
              {"w_in", dense_to_json(model.weights.w_in)},
              {"w", {{"rows", model.weights.w.rows()}, {"cols", model.weights.w.cols()}, {"triplets", triplets}}},
              {"w_out", model.weights.w_out ? dense_to_json(*model.weights.w_out) : json(nullptr)}};
  return doc;
}

EsnModel model_from_json(const json& doc) {
  try {
    if (doc.value("format", "") != "chaosesn-model") throw ParseError("model document: unknown format tag");
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw ParseError("model document: unsupported format_version " + std::to_string(version));
    EsnModel model;
    model.params = doc.at("hyperparameters").get<EsnHyperParams>();
    model.weights.w_in = dense_from_json(doc.at("w_in"));
    const auto& w = doc.at("w");
    const auto n = w.at("rows").get<Eigen::Index>();
    if (w.at("cols").get<Eigen::Index>() != n) throw ParseError("model document: W must be square");
    std::vector<Eigen::Triplet<double>> triplets;
    for (const auto& t : w.at("triplets")) {
      const auto r = t.at(0).get<Eigen::Index>(), c = t.at(1).get<Eigen::Index>();
      if (r < 0 || c < 0 || r >= n || c >= n) throw ParseError("model document: W triplet out of range");
      triplets.emplace_back(static_cast<int>(r), static_cast<int>(c), t.at(2).get<double>());
    }
    model.weights.w.resize(n, n);
    model.weights.w.setFromTriplets(triplets.begin(), triplets.end());
    model.weights.w.makeCompressed();
    if (!doc.at("w_out").is_null()) model.weights.w_out = dense_from_json(doc.at("w_out"));

    if (model.weights.w_in.rows() != n || model.weights.w_in.cols() != static_cast<Eigen::Index>(model.params.input_dim) + 1)
      throw ParseError("model document: W_in shape disagrees with hyperparameters");
    if (model.weights.w_out && model.weights.w_out->cols() != 1 + model.weights.w_in.cols() - 1 + n)
      throw ParseError("model document: W_out shape disagrees with reservoir size");
    return model;
  } catch (const json::exception& e) {
    throw ParseError(std::string("model document: ") + e.what());
  }
}

void save_model(const EsnModel& model, const std::filesystem::path& path) {
  write_text(path, model_to_json(model).dump() + "\n");
}

EsnModel load_model(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": corrupted model document: " + e.what());
  }
  return model_from_json(doc);
}

// ---------------------------------------------------------------------------

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json metrics_report_to_json(const MetricsReport& report) {
  json kde = json::array();
  for (std::size_t i = 0; i < report.kde.size(); ++i) {
    const auto& c = report.kde[i];
    kde.push_back({{"channel", i < report.kde_channels.size() ? report.kde_channels[i] : std::to_string(i)},
                   {"bandwidth", c.bandwidth},
                   {"grid", std::vector<double>(c.grid.data(), c.grid.data() + c.grid.size())},
                   {"density", std::vector<double>(c.density.data(), c.density.data() + c.density.size())}});
  }
  json ph = json::array();
  for (const auto& s : report.ph_samples)
    ph.push_back({{"ic_index", s.ic_index}, {"r", s.r}, {"ph_lyapunov", finite_or_null(s.value)}});
  return {{"channel", report.channel},
          {"mle", report.stats.mle},
          {"sample_entropy", report.stats.sample_entropy},
          {"k_c", report.stats.k_c},
          {"kde", kde},
          {"ph_samples", ph}};
}

std::string ph_samples_csv(std::span<const PhSample> samples) {
  std::string out = "ic_index,r,ph_lyapunov\n";
  for (const auto& s : samples) {
    out += std::to_string(s.ic_index) + ",";
    append_double(out, s.r);
    out += ",";
    if (s.crossed())
      append_double(out, s.value);
    else
      out += "inf";
    out += "\n";
  }
  return out;
}

std::string kde_csv(const KdeCurve& curve) {
  std::string out = "grid,density\n";
  for (Eigen::Index i = 0; i < curve.grid.size(); ++i) {
    append_double(out, curve.grid(i));
    out += ",";
    append_double(out, curve.density(i));
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

Dataset experimental_surrogate(const SurrogateOptions& opts) {
  SystemSpec spec = default_chua_spec(opts.n_steps);
  spec.dt = opts.dt;
  const TimeSeries clean =
      attractor_trajectory(spec, default_initial_condition(SystemKind::ChuaODE), 10.0 / reference_mle(SystemKind::ChuaODE));
  const TimeSeries noisy = add_noise(clean, opts.noise_rel, opts.seed);
  Eigen::MatrixXd v = noisy.values();
  const double levels = std::ldexp(1.0, opts.adc_bits) - 1.0;
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    const double lo = v.col(c).minCoeff(), hi = v.col(c).maxCoeff();
    const double step = (hi - lo) / levels;
    if (step > 0.0) v.col(c) = ((v.col(c).array() - lo) / step).round() * step + lo;
  }
  return {TimeSeries(std::move(v), opts.dt, {"V1", "V2", "I_L"}),
          DataSource::ExperimentalCSV,
          "surrogate: simulated Chua + " + std::to_string(opts.noise_rel) + " relative noise + " +
              std::to_string(opts.adc_bits) + "-bit quantization (not a recording)"};
}

}  // namespace chaosesn

#include "chaosesn/data.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace chaosesn;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("chaosesn_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

TimeSeries awkward_series() {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd v(200, 3);
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = normal(rng) * std::pow(10.0, (i % 13) - 6);
  v(0, 0) = 1.0 / 3.0;
  v(1, 1) = -0.0;
  return TimeSeries(v, 0.01, {"x", "y", "z"}, 2.5);
}

EsnModel trained_model() {
  EsnHyperParams hp;
  hp.n_nodes = 40;
  hp.density = 0.1;
  hp.output_dim = 3;
  hp.washout = 10;
  const TimeSeries s = attractor_trajectory(default_lorenz_spec(600), Eigen::Vector3d(1, 1, 1), 2.0);
  const auto [u, y] = teacher_pairs(s, 1, 3);
  return train(init_weights(hp), u, y, hp).model;
}

}  // namespace

TEST(Data, CsvRoundTripIsBitExact) {
  const TimeSeries s = awkward_series();
  const TimeSeries back = parse_csv(to_csv(s));
  EXPECT_EQ(back.values(), s.values());
  EXPECT_EQ(back.channels(), s.channels());
  EXPECT_NEAR(back.dt(), 0.01, 1e-12);
  EXPECT_DOUBLE_EQ(back.t0(), 2.5);
}

TEST(Data, CsvErrorsNameTheRow) {
  const std::string good = "t,a\n0,1\n0.1,2\n";
  EXPECT_NO_THROW(parse_csv(good));
  try {
    parse_csv("t,a\n0,1\n0.1,nan\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
  }
  EXPECT_THROW(parse_csv("t,a,b\n0,1,2\n0.1,2\n"), ParseError);
  EXPECT_THROW(parse_csv("t,a\n0,1\n0,2\n"), ParseError);
  EXPECT_THROW(parse_csv("t,a\n0,1\n0.1,2\n0.3,2\n"), ParseError);
  EXPECT_THROW(parse_csv("t,a\n0,1\n0.1,abc\n"), ParseError);
  EXPECT_THROW(parse_csv("x,a\n0,1\n"), ParseError);
  CsvOptions two;
  two.expected_channels = 2;
  EXPECT_THROW(parse_csv("t,a\n0,1\n0.1,2\n", two), ParseError);
  CsvOptions with_dt;
  with_dt.dt = 0.25;
  EXPECT_DOUBLE_EQ(parse_csv("t,a\n0,1\n", with_dt).dt(), 0.25);
}

TEST(Data, SidecarSuppliesDtAndProvenance) {
  const auto dir = scratch_dir("sidecar");
  const Dataset ds(awkward_series(), DataSource::Simulated, "unit test");
  save_dataset(ds, dir / "s.csv");
  ASSERT_TRUE(std::filesystem::exists(sidecar_path(dir / "s.csv")));
  const Dataset back = load_csv(dir / "s.csv");
  EXPECT_EQ(back.series.dt(), 0.01);
  EXPECT_EQ(back.source, DataSource::Simulated);
  EXPECT_EQ(back.provenance, "unit test");
  EXPECT_EQ(back.series.values(), ds.series.values());
}

TEST(Data, SplitUsesFloor) {
  const Dataset ds(awkward_series(), DataSource::Simulated, "split");
  const auto [train, test] = split(ds, SplitSpec{0.8});
  EXPECT_EQ(train.series.length(), 160u);
  EXPECT_EQ(test.series.length(), 40u);
  EXPECT_EQ(test.series.values().row(0), ds.series.values().row(160));
  const auto [a, b] = split(ds, SplitSpec{0.333});
  EXPECT_EQ(a.series.length(), 66u);
  EXPECT_THROW(split(ds, SplitSpec{1.0}), ArgumentError);
}

TEST(Data, ModelRoundTripIsBitExact) {
  const auto dir = scratch_dir("model");
  const EsnModel m = trained_model();
  save_model(m, dir / "model.json");
  const EsnModel back = load_model(dir / "model.json");
  EXPECT_EQ(back.weights.w_in, m.weights.w_in);
  EXPECT_EQ(Eigen::MatrixXd(back.weights.w), Eigen::MatrixXd(m.weights.w));
  EXPECT_EQ(*back.weights.w_out, *m.weights.w_out);
  EXPECT_EQ(back.params.leak, m.params.leak);
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, 1.5);
  const ReservoirState x = ReservoirState::Zero(40);
  EXPECT_EQ(predict_autonomous(back, u, x, 20).values(), predict_autonomous(m, u, x, 20).values());
}

TEST(Data, CorruptModelIsRejected) {
  const auto dir = scratch_dir("corrupt");
  write_text(dir / "broken.json", "{\"format\": \"chaosesn-model\", \"format_version\":");
  EXPECT_THROW(load_model(dir / "broken.json"), ParseError);
  auto doc = model_to_json(trained_model());
  doc["format_version"] = 99;
  EXPECT_THROW(model_from_json(doc), ParseError);
  doc = model_to_json(trained_model());
  doc["w"]["triplets"][0][0] = 4000;
  EXPECT_THROW(model_from_json(doc), ParseError);
  EXPECT_THROW(load_model(dir / "missing.json"), ParseError);
}

TEST(Data, UntrainedModelSerializes) {
  EsnHyperParams hp;
  hp.n_nodes = 20;
  hp.density = 0.2;
  const EsnModel m{hp, init_weights(hp)};
  EXPECT_FALSE(model_from_json(model_to_json(m)).trained());
}

TEST(Data, SpecJsonRoundTrip) {
  SystemSpec spec = default_chua_spec(123);
  spec.chua.alpha = 9.5;
  const SystemSpec back = nlohmann::json(spec).get<SystemSpec>();
  EXPECT_EQ(back.kind, SystemKind::ChuaODE);
  EXPECT_EQ(back.chua.alpha, 9.5);
  EXPECT_EQ(back.n_steps, 123u);
}

TEST(Data, PhSamplesCsv) {
  std::vector<PhSample> s(2);
  s[0].value = 1.5;
  s[0].r = 0.01;
  s[1].ic_index = 1;
  s[1].r = 0.01;
  EXPECT_EQ(ph_samples_csv(s), "ic_index,r,ph_lyapunov\n0,0.01,1.5\n1,0.01,inf\n");
}

TEST(Data, SurrogateIsLabelled) {
  SurrogateOptions opts;
  opts.n_steps = 3000;
  const Dataset ds = experimental_surrogate(opts);
  EXPECT_EQ(ds.source, DataSource::ExperimentalCSV);
  EXPECT_NE(ds.provenance.find("surrogate"), std::string::npos);
  EXPECT_EQ(ds.series.channels(), (std::vector<std::string>{"V1", "V2", "I_L"}));
  EXPECT_DOUBLE_EQ(ds.series.dt(), 0.057);
  // 10-bit quantization leaves at most 1024 distinct levels per channel
  std::vector<double> v(ds.series.values().col(0).data(), ds.series.values().col(0).data() + 3000);
  std::sort(v.begin(), v.end());
  EXPECT_LE(std::unique(v.begin(), v.end()) - v.begin(), 1024);
}

//
// Copyright 2026 The dpjl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "dpjl/io.h"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include <gtest/gtest.h>

#include "dpjl/config.h"

namespace dpjl {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("dpjl_io_test_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string path(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

CurveMetadata meta() {
  CurveMetadata m;
  m.spec = {0.6, 30, 0.01024, 1470};
  return m;
}

TEST(FormatTest, SeventeenDigitsRoundTrip) {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 4.9406564584124654e-324,
                   std::numeric_limits<double>::max()}) {
    EXPECT_EQ(std::strtod(format_double(x).c_str(), nullptr), x);
    EXPECT_EQ(std::strtod(format_short(x).c_str(), nullptr), x);
  }
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_short(0.6), "0.6");
}

TEST(CurveCsvTest, IdentityCurveRowsAreExact) {
  const TempDir dir;
  const TradeoffCurve id = identity_curve();
  write_tradeoff_csv(dir.path("id.csv"), id, meta());
  const CurveCsv c = read_curve_csv(dir.path("id.csv"));
  EXPECT_EQ(c.x_name, "alpha");
  EXPECT_EQ(c.y_name, "beta");
  ASSERT_EQ(c.x.size(), id.size());
  for (Eigen::Index i = 0; i < c.x.size(); ++i) EXPECT_EQ(c.y[i], 1.0 - c.x[i]) << i;
}

TEST(CurveCsvTest, WriteThenReadIsExact) {
  const TempDir dir;
  const TradeoffCurve g = gaussian_curve(1.3);
  write_tradeoff_csv(dir.path("g.csv"), g, meta());
  const CurveCsv c = read_curve_csv(dir.path("g.csv"));
  EXPECT_LE((c.x - g.alphas()).lpNorm<Eigen::Infinity>(), 1e-15);
  EXPECT_LE((c.y - g.betas()).lpNorm<Eigen::Infinity>(), 1e-15);
  EXPECT_EQ(c.x, g.alphas());
  EXPECT_EQ(c.y, g.betas());

  const Eigen::VectorXd eps = Eigen::VectorXd::LinSpaced(11, 0.0, 5.0);
  const Eigen::VectorXd del = (-eps.array()).exp() / 3.0;
  write_eps_delta_csv(dir.path("ed.csv"), eps, del, meta());
  const CurveCsv e = read_curve_csv(dir.path("ed.csv"));
  EXPECT_EQ(e.x_name, "epsilon");
  EXPECT_EQ(e.y_name, "delta");
  EXPECT_EQ(e.x, eps);
  EXPECT_EQ(e.y, del);
}

TEST(CurveCsvTest, HeaderCarriesTheMechanism) {
  const TempDir dir;
  CurveMetadata m = meta();
  write_tradeoff_csv(dir.path("a.csv"), identity_curve(5), m);
  const std::string text = slurp(dir.path("a.csv"));
  EXPECT_EQ(text.rfind("# spec sigma=0.6 r=30 p=0.01024 T=1470 delta_eps=0.001\n"
                       "# accountant loss_clamp=32 quad_tol=1e-09\n"
                       "alpha,beta\n",
                       0),
            0u)
      << text;
  m.spec.jl_dim = kExactJl;
  EXPECT_EQ(spec_comment(m), "spec sigma=0.6 r=exact p=0.01024 T=1470 delta_eps=0.001");
}

TEST(CurveCsvTest, RejectsMalformedFiles) {
  const TempDir dir;
  std::ofstream(dir.path("bad.csv")) << "alpha,beta\n0,1\n0.5,x\n";
  EXPECT_THROW(read_curve_csv(dir.path("bad.csv")), std::runtime_error);
  std::ofstream(dir.path("three.csv")) << "alpha,beta\n0,1,2\n";
  EXPECT_THROW(read_curve_csv(dir.path("three.csv")), std::runtime_error);
  EXPECT_THROW(read_curve_csv(dir.path("absent.csv")), std::runtime_error);
}

TEST(MetricsTest, RowFormat) {
  MetricsRow row;
  row.epoch = 2;
  row.step = 30;
  row.train_loss = 0.5;
  row.train_acc = 0.25;
  row.test_acc = std::nan("");
  row.clip_fraction = 0.1;
  row.epoch_seconds = 0.0;
  EXPECT_EQ(format_metrics_row(row), "2,30,0.5,0.25,nan,0.10000000000000001,0");
  EXPECT_STREQ(kMetricsHeader,
               "epoch,step,train_loss,train_acc,test_acc,clip_fraction,epoch_seconds");
}

Model rnn() {
  return Model({LayerSpec::embedding(5, 3), LayerSpec::simple_rnn(3, 4),
                LayerSpec::dense(4, 1, false), LayerSpec::sigmoid()},
               LossHead::kMeanSquaredError, 2.0);
}

TEST(CheckpointTest, RoundTripIsBitExact) {
  const TempDir dir;
  const Model m = rnn();
  RngStream rng(3, "init");
  const ParamVector p = init_params(m, rng);
  save_checkpoint(dir.path("ck"), m, p);
  const Checkpoint back = load_checkpoint(dir.path("ck.json"));
  EXPECT_EQ(back.params.values(), p.values());
  EXPECT_EQ(back.model.param_count(), m.param_count());
  EXPECT_EQ(back.model.head(), m.head());
  EXPECT_EQ(back.model.loss_scale(), 2.0);
  ASSERT_EQ(back.model.layers().size(), m.layers().size());
  for (std::size_t i = 0; i < m.layers().size(); ++i) {
    EXPECT_EQ(back.model.layers()[i].kind, m.layers()[i].kind);
    EXPECT_EQ(back.model.layers()[i].in, m.layers()[i].in);
    EXPECT_EQ(back.model.layers()[i].out, m.layers()[i].out);
    EXPECT_EQ(back.model.layers()[i].bias, m.layers()[i].bias);
  }
  EXPECT_EQ(fs::file_size(dir.path("ck.bin")), static_cast<std::uintmax_t>(8 * p.size()));
}

TEST(CheckpointTest, BlobIsLittleEndianInSegmentOrder) {
  const TempDir dir;
  const Model m({LayerSpec::dense(1, 1)}, LossHead::kMeanSquaredError);
  ParamVector p = ParamVector::zeros(m);
  p.values() << 1.0, -2.0;  // kernel, bias
  save_checkpoint(dir.path("ck"), m, p);
  const std::string bytes = slurp(dir.path("ck.bin"));
  const std::string want("\x00\x00\x00\x00\x00\x00\xf0\x3f\x00\x00\x00\x00\x00\x00\x00\xc0",
                         16);
  EXPECT_EQ(bytes, want);
}

TEST(CheckpointTest, RejectsTruncatedBlobAndMismatch) {
  const TempDir dir;
  const Model m = rnn();
  save_checkpoint(dir.path("ck"), m, ParamVector::zeros(m));
  fs::resize_file(dir.path("ck.bin"), 8 * m.param_count() - 1);
  EXPECT_THROW(load_checkpoint(dir.path("ck.json")), std::runtime_error);
  EXPECT_THROW(load_checkpoint(dir.path("none.json")), std::runtime_error);
  const Model other({LayerSpec::dense(2, 2)}, LossHead::kMeanSquaredError);
  EXPECT_THROW(save_checkpoint(dir.path("x"), other, ParamVector::zeros(m)),
               std::invalid_argument);
}

nlohmann::json minimal_config() {
  return nlohmann::json::parse(R"({
    "model": {"layers": [{"kind": "dense", "in": 10, "out": 2}]}
  })");
}

TEST(ConfigTest, DefaultsAndRoundTrip) {
  const RunConfig c = run_config_from_json(minimal_config());
  EXPECT_EQ(c.train.optimizer, OptimizerKind::kDpSgdJl);
  EXPECT_EQ(c.data.source, "synthetic");
  EXPECT_EQ(c.accountant.options.delta_eps, 1e-3);
  const nlohmann::json full = to_json(c);
  EXPECT_EQ(to_json(run_config_from_json(full)), full);
  EXPECT_EQ(full["accountant"]["loss_clamp"], 32.0);
  EXPECT_EQ(full["accountant"]["quad_tol"], 1e-9);
}

TEST(ConfigTest, SchedulesAcceptNumbersOrLists) {
  nlohmann::json doc = minimal_config();
  doc["train"] = {{"learning_rate", {0.1, 0.05}}, {"clip_norm", 2.0}};
  const RunConfig c = run_config_from_json(doc);
  EXPECT_EQ(c.train.learning_rates, (std::vector<double>{0.1, 0.05}));
  EXPECT_EQ(c.train.clip_norms, (std::vector<double>{2.0}));
  EXPECT_EQ(to_json(c)["train"]["learning_rate"], nlohmann::json({0.1, 0.05}));
}

TEST(ConfigTest, RejectsUnknownKeysAndBadTypes) {
  nlohmann::json doc = minimal_config();
  doc["train"] = {{"learnin_rate", 0.1}};
  EXPECT_THROW(run_config_from_json(doc), ConfigError);
  doc = minimal_config();
  doc["train"] = {{"batch_size", "big"}};
  EXPECT_THROW(run_config_from_json(doc), ConfigError);
  doc = minimal_config();
  doc["train"] = {{"optimizer", "dp-lamb"}};
  EXPECT_THROW(run_config_from_json(doc), ConfigError);
  EXPECT_THROW(run_config_from_json(nlohmann::json::object()), ConfigError);
}

TEST(ConfigTest, OverridesUseDottedKeys) {
  nlohmann::json doc = minimal_config();
  apply_override(doc, "train.jl_dim=12");
  apply_override(doc, "train.optimizer=dp-adam-jl");
  apply_override(doc, "train.learning_rate=[0.5,0.25]");
  apply_override(doc, "output.dir=some/where");
  const RunConfig c = run_config_from_json(doc);
  EXPECT_EQ(c.train.jl_dim, 12);
  EXPECT_EQ(c.train.optimizer, OptimizerKind::kDpAdamJl);
  EXPECT_EQ(c.train.learning_rates, (std::vector<double>{0.5, 0.25}));
  EXPECT_EQ(c.output_dir, "some/where");
  EXPECT_THROW(apply_override(doc, "novalue"), ConfigError);
  EXPECT_THROW(apply_override(doc, "train..x=1"), ConfigError);
  EXPECT_THROW(apply_override(doc, "train.jl_dim.x=1"), ConfigError);
}

TEST(ConfigTest, ManifestLoadsAsConfig) {
  const TempDir dir;
  RunConfig c = run_config_from_json(minimal_config());
  c.seed = 77;
  const nlohmann::json manifest = make_manifest(c, {"metrics.csv"});
  EXPECT_EQ(manifest["format"], kManifestFormat);
  EXPECT_EQ(manifest["code_version"], code_version());
  std::ofstream(dir.path("m.json")) << manifest.dump();
  const RunConfig back = run_config_from_json(load_config_json(dir.path("m.json")));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_THROW(load_config_json(dir.path("absent.json")), ConfigError);
  std::ofstream(dir.path("broken.json")) << "{";
  EXPECT_THROW(load_config_json(dir.path("broken.json")), ConfigError);
}

TEST(ConfigTest, MechanismForTrainingConfig) {
  TrainConfig t;
  t.optimizer = OptimizerKind::kDpSgdJl;
  t.noise_scale = 0.6;
  t.batch_size = 256;
  t.epochs = 15;
  t.jl_dim = 30;
  MechanismSpec s = mechanism_for(t, 25000);
  EXPECT_EQ(s.jl_dim, 30);
  EXPECT_EQ(s.sample_rate, 256.0 / 25000);
  EXPECT_EQ(s.steps, 1465);
  t.norm_oracle = true;
  EXPECT_EQ(mechanism_for(t, 25000).jl_dim, kExactJl);
  t.optimizer = OptimizerKind::kDpSgd;
  t.norm_oracle = false;
  EXPECT_EQ(mechanism_for(t, 25000).jl_dim, kExactJl);
}

}  // namespace
}  // namespace dpjl

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

#include "dpjl/data.h"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dpjl/optim.h"

namespace dpjl {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("dpjl_data_test_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string path(const std::string& name) const { return (path_ / name).string(); }
  std::string write(const std::string& name, const std::vector<unsigned char>& bytes) const {
    std::ofstream(path(name), std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));
    return path(name);
  }
  std::string write(const std::string& name, const std::string& text) const {
    return write(name, std::vector<unsigned char>(text.begin(), text.end()));
  }

 private:
  fs::path path_;
};

// Two 3x3 images and their labels, written out byte by byte.
std::vector<unsigned char> idx_images() {
  return {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0, 3,
          0, 255, 0, 255, 0, 255, 0, 255, 0,
          51, 102, 153, 204, 255, 0, 1, 2, 3};
}
std::vector<unsigned char> idx_labels() { return {0, 0, 8, 1, 0, 0, 0, 2, 7, 3}; }

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

TEST(LoadIdxTest, ParsesHandBuiltFixture) {
  const TempDir dir;
  const Dataset d = load_idx(dir.write("img", idx_images()), dir.write("lab", idx_labels()));
  ASSERT_EQ(d.features.rows(), 2);
  ASSERT_EQ(d.features.cols(), 9);
  EXPECT_EQ(d.labels, (std::vector<int>{7, 3}));
  EXPECT_EQ(d.features(0, 0), 0.0);
  EXPECT_EQ(d.features(0, 1), 1.0);
  EXPECT_EQ(d.features(1, 0), 51 / 255.0);
  EXPECT_EQ(d.features(1, 4), 1.0);
  EXPECT_EQ(d.features(1, 8), 3 / 255.0);
  EXPECT_EQ(d.num_classes, 10);
  EXPECT_EQ(d.n_train, 2);
}

TEST(LoadIdxTest, ReportsTruncationWithByteCounts) {
  const TempDir dir;
  std::vector<unsigned char> img = idx_images();
  img.pop_back();
  const std::string msg = error_of(
      [&] { load_idx(dir.write("img", img), dir.write("lab", idx_labels())); });
  EXPECT_NE(msg.find("expected 34 bytes, got 33"), std::string::npos) << msg;
}

TEST(LoadIdxTest, RejectsBadMagicCountMismatchAndMissingFile) {
  const TempDir dir;
  std::vector<unsigned char> img = idx_images();
  img[3] = 4;
  EXPECT_NE(error_of([&] {
              load_idx(dir.write("img", img), dir.write("lab", idx_labels()));
            }).find("bad magic"),
            std::string::npos);
  const std::vector<unsigned char> one_label = {0, 0, 8, 1, 0, 0, 0, 1, 7};
  EXPECT_NE(error_of([&] {
              load_idx(dir.write("img2", idx_images()), dir.write("lab2", one_label));
            }).find("2 images but 1 labels"),
            std::string::npos);
  EXPECT_THROW(load_idx(dir.path("absent"), dir.write("lab3", idx_labels())),
               std::runtime_error);
}

TEST(LoadCsvTest, ReadsRowsInOrder) {
  const TempDir dir;
  const std::string p = dir.write("d.csv", "a,label,b\n1.5,0,2\n-3,2,4e-1\n0,1,7\n");
  const Dataset d = load_csv(p, {});
  ASSERT_EQ(d.size(), 3);
  ASSERT_EQ(d.features.cols(), 2);
  EXPECT_EQ(d.labels, (std::vector<int>{0, 2, 1}));
  EXPECT_EQ(d.features(0, 0), 1.5);
  EXPECT_EQ(d.features(1, 1), 0.4);
  EXPECT_EQ(d.num_classes, 3);

  CsvSchema only_b;
  only_b.feature_columns = {"b"};
  const Dataset e = load_csv(p, only_b);
  ASSERT_EQ(e.features.cols(), 1);
  EXPECT_EQ(e.features(2, 0), 7.0);
}

TEST(LoadCsvTest, ErrorsCarryCoordinates) {
  const TempDir dir;
  const std::string missing = error_of(
      [&] { load_csv(dir.write("m.csv", "x,label\n1,0\n,1\n"), {}); });
  EXPECT_NE(missing.find("missing value at row 3, column 1 (x)"), std::string::npos)
      << missing;
  const std::string text = error_of(
      [&] { load_csv(dir.write("t.csv", "x,label\n1,0\nabc,1\n"), {}); });
  EXPECT_NE(text.find("non-numeric value 'abc' at row 3"), std::string::npos) << text;
  const std::string frac = error_of(
      [&] { load_csv(dir.write("f.csv", "x,label\n1,1.5\n"), {}); });
  EXPECT_NE(frac.find("not a nonnegative integer"), std::string::npos) << frac;
  CsvSchema schema;
  schema.label_column = "y";
  const std::string col = error_of(
      [&] { load_csv(dir.write("c.csv", "x,label\n1,0\n"), schema); });
  EXPECT_NE(col.find("unknown column y"), std::string::npos) << col;
  EXPECT_THROW(load_csv(dir.write("e.csv", ""), {}), std::runtime_error);
}

TEST(SyntheticTest, SameSeedSameBytes) {
  for (SyntheticKind kind :
       {SyntheticKind::kClassificationGaussians, SyntheticKind::kSequenceParity}) {
    const Dataset a = gen_synthetic(kind, 100, 3);
    const Dataset b = gen_synthetic(kind, 100, 3);
    const Dataset c = gen_synthetic(kind, 100, 4);
    EXPECT_EQ(a.features, b.features);
    EXPECT_EQ(a.tokens, b.tokens);
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_TRUE(a.features != c.features || a.tokens != c.tokens);
    EXPECT_EQ(a.n_train, 80);
    EXPECT_NO_THROW(a.validate());
    EXPECT_EQ(parse_synthetic_kind(synthetic_kind_name(kind)), kind);
  }
}

TEST(SyntheticTest, ParityLabelsAndPadding) {
  SyntheticParams p;
  p.length = 6;
  p.min_length = 2;
  const Dataset d = gen_synthetic(SyntheticKind::kSequenceParity, 300, 1, p);
  ASSERT_EQ(d.tokens.cols(), 6);
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    int ones = 0;
    bool seen_token = false;
    int length = 0;
    for (Eigen::Index t = 0; t < 6; ++t) {
      const int tok = d.tokens(i, t);
      if (tok == 0) {
        ASSERT_FALSE(seen_token) << "padding after a token in row " << i;
      } else {
        seen_token = true;
        ++length;
        ASSERT_LT(tok, p.vocab);
      }
      ones += tok == 1;
    }
    EXPECT_GE(length, 2);
    EXPECT_EQ(d.labels[i], ones % 2);
  }
}

TEST(SyntheticTest, RejectsInvalidParams) {
  EXPECT_THROW(gen_synthetic(SyntheticKind::kClassificationGaussians, 1, 0),
               std::invalid_argument);
  SyntheticParams p;
  p.num_classes = 11;
  EXPECT_THROW(gen_synthetic(SyntheticKind::kClassificationGaussians, 10, 0, p),
               std::invalid_argument);
  p = {};
  p.min_length = 9;
  EXPECT_THROW(gen_synthetic(SyntheticKind::kSequenceParity, 10, 0, p),
               std::invalid_argument);
  p = {};
  p.test_fraction = 1.0;
  EXPECT_THROW(gen_synthetic(SyntheticKind::kSequenceParity, 10, 0, p),
               std::invalid_argument);
}

TEST(SyntheticTest, WideMarginIsLinearlyLearnable) {
  SyntheticParams p;
  p.margin = 10.0;
  const Dataset d = gen_synthetic(SyntheticKind::kClassificationGaussians, 1000, 2, p);
  const Model linear({LayerSpec::dense(10, 2)}, LossHead::kSoftmaxCrossEntropy);
  TrainConfig c;
  c.optimizer = OptimizerKind::kSgd;
  c.batch_size = 32;
  c.epochs = 5;
  c.timing = TimingMode::kNone;
  const TrainResult r = train(c, linear, d);
  EXPECT_GE(r.metrics.back().test_acc, 0.99);
}

TEST(SyntheticTest, LengthOneParityBeatsMajorityClass) {
  SyntheticParams p;
  p.length = 1;
  const Dataset d = gen_synthetic(SyntheticKind::kSequenceParity, 1000, 6, p);
  int ones = 0;
  for (Eigen::Index i = d.n_train; i < d.size(); ++i) ones += d.labels[i];
  const double majority =
      std::max(ones, static_cast<int>(d.n_test()) - ones) / static_cast<double>(d.n_test());
  const Model rnn({LayerSpec::embedding(p.vocab, 4), LayerSpec::simple_rnn(4, 8),
                   LayerSpec::dense(8, 2)},
                  LossHead::kSoftmaxCrossEntropy);
  TrainConfig c;
  c.optimizer = OptimizerKind::kAdam;
  c.learning_rates = {0.05};
  c.batch_size = 32;
  c.epochs = 5;
  c.timing = TimingMode::kNone;
  const TrainResult r = train(c, rnn, d);
  EXPECT_LT(majority, r.metrics.back().test_acc);
  EXPECT_EQ(r.metrics.back().test_acc, 1.0);
}

TEST(DatasetTest, GatherSliceAndConcat) {
  const Dataset d = gen_synthetic(SyntheticKind::kSequenceParity, 10, 0);
  const Batch b = d.gather({3, 1});
  EXPECT_EQ(b.tokens.row(0), d.tokens.row(3));
  EXPECT_EQ(b.labels, (std::vector<int>{d.labels[3], d.labels[1]}));
  EXPECT_EQ(d.slice(2, 5).size(), 3);
  const Dataset both = concat_train_test(d, d);
  EXPECT_EQ(both.size(), 20);
  EXPECT_EQ(both.n_train, 10);
  Dataset bad = d;
  bad.labels[0] = 2;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace dpjl

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

#ifndef DPJL_DATA_H_
#define DPJL_DATA_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dpjl/model.h"

namespace dpjl {

// Rows [0, n_train) are the training split, the rest the test split. Dense
// data fills `features`; sequence data fills `tokens` (pad id 0, uniform
// length). Labels are class ids below num_classes.
struct Dataset {
  Eigen::MatrixXd features;
  Eigen::MatrixXi tokens;
  std::vector<int> labels;
  int num_classes = 0;
  Eigen::Index n_train = 0;

  Eigen::Index size() const { return static_cast<Eigen::Index>(labels.size()); }
  Eigen::Index n_test() const { return size() - n_train; }
  bool is_sequence() const { return tokens.size() > 0; }

  Batch gather(const std::vector<Eigen::Index>& rows) const;
  // Rows [begin, end).
  Batch slice(Eigen::Index begin, Eigen::Index end) const;
  // Throws std::invalid_argument when the invariants above fail.
  void validate() const;
};

// Appends test's rows after train's; n_train = train.size().
Dataset concat_train_test(const Dataset& train, const Dataset& test);

// IDX pair: big-endian magic 0x00000803 (images, N x rows x cols unsigned
// bytes) and 0x00000801 (labels, N unsigned bytes). Pixels map to p / 255.
// All rows are training rows; num_classes = 10.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Header row required. Empty feature_columns means every column except the
// label. All rows are training rows; num_classes = max label + 1.
struct CsvSchema {
  std::vector<std::string> feature_columns;
  std::string label_column = "label";
};
Dataset load_csv(const std::string& path, const CsvSchema& schema);

enum class SyntheticKind { kClassificationGaussians, kSequenceParity };

const char* synthetic_kind_name(SyntheticKind kind);
SyntheticKind parse_synthetic_kind(const std::string& name);

// classification-gaussians: class k centered at (margin / sqrt(2)) e_k, so
// centers are `margin` apart, plus N(0, I_dim) noise; needs num_classes <=
// dim. sequence-parity: tokens uniform on 1..vocab-1 over a length uniform
// in [min_length, length], left-padded with 0; the label is the parity of
// the count of token 1. The last round(test_fraction * n) rows are the test
// split.
struct SyntheticParams {
  int num_classes = 2;
  int dim = 10;
  double margin = 4.0;
  int vocab = 4;
  int length = 8;
  int min_length = 0;  // 0 means length
  double test_fraction = 0.2;
};
Dataset gen_synthetic(SyntheticKind kind, Eigen::Index n, std::uint64_t seed,
                      const SyntheticParams& params = {});

}  // namespace dpjl

#endif  // DPJL_DATA_H_

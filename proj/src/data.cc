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

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

#include "dpjl/rng.h"

namespace dpjl {
namespace {

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t big_endian_u32(const std::vector<unsigned char>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

void require_bytes(const std::string& path, std::size_t expected, std::size_t actual) {
  if (actual != expected) {
    throw std::runtime_error(path + ": expected " + std::to_string(expected) +
                             " bytes, got " + std::to_string(actual));
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Batch Dataset::gather(const std::vector<Eigen::Index>& rows) const {
  Batch b;
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (is_sequence()) {
    b.tokens.resize(n, tokens.cols());
    for (Eigen::Index i = 0; i < n; ++i) b.tokens.row(i) = tokens.row(rows[i]);
  } else {
    b.features.resize(n, features.cols());
    for (Eigen::Index i = 0; i < n; ++i) b.features.row(i) = features.row(rows[i]);
  }
  b.labels.reserve(rows.size());
  for (Eigen::Index r : rows) b.labels.push_back(labels[r]);
  return b;
}

Batch Dataset::slice(Eigen::Index begin, Eigen::Index end) const {
  Batch b;
  if (is_sequence()) {
    b.tokens = tokens.middleRows(begin, end - begin);
  } else {
    b.features = features.middleRows(begin, end - begin);
  }
  b.labels.assign(labels.begin() + begin, labels.begin() + end);
  return b;
}

void Dataset::validate() const {
  const Eigen::Index n = size();
  const Eigen::Index rows = is_sequence() ? tokens.rows() : features.rows();
  if (rows != n) throw std::invalid_argument("dataset: row count does not match labels");
  if (n_train < 0 || n_train > n) throw std::invalid_argument("dataset: bad train split");
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw std::invalid_argument("dataset: label " + std::to_string(y) + " outside [0, " +
                                  std::to_string(num_classes) + ")");
    }
  }
}

Dataset concat_train_test(const Dataset& train, const Dataset& test) {
  if (train.is_sequence() != test.is_sequence() ||
      train.features.cols() != test.features.cols() ||
      train.tokens.cols() != test.tokens.cols()) {
    throw std::invalid_argument("concat_train_test: incompatible datasets");
  }
  Dataset out;
  if (train.is_sequence()) {
    out.tokens.resize(train.tokens.rows() + test.tokens.rows(), train.tokens.cols());
    out.tokens << train.tokens, test.tokens;
  } else {
    out.features.resize(train.features.rows() + test.features.rows(), train.features.cols());
    out.features << train.features, test.features;
  }
  out.labels = train.labels;
  out.labels.insert(out.labels.end(), test.labels.begin(), test.labels.end());
  out.num_classes = std::max(train.num_classes, test.num_classes);
  out.n_train = train.size();
  return out;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const std::vector<unsigned char> img = read_file(images_path);
  const std::vector<unsigned char> lab = read_file(labels_path);
  if (img.size() < 16) require_bytes(images_path, 16, img.size());
  if (lab.size() < 8) require_bytes(labels_path, 8, lab.size());
  if (big_endian_u32(img, 0) != 0x00000803) {
    throw std::runtime_error(images_path + ": bad magic, expected 0x00000803");
  }
  if (big_endian_u32(lab, 0) != 0x00000801) {
    throw std::runtime_error(labels_path + ": bad magic, expected 0x00000801");
  }
  const std::size_t n = big_endian_u32(img, 4);
  const std::size_t rows = big_endian_u32(img, 8);
  const std::size_t cols = big_endian_u32(img, 12);
  const std::size_t n_labels = big_endian_u32(lab, 4);
  require_bytes(images_path, 16 + n * rows * cols, img.size());
  require_bytes(labels_path, 8 + n_labels, lab.size());
  if (n_labels != n) {
    throw std::runtime_error("idx: " + std::to_string(n) + " images but " +
                             std::to_string(n_labels) + " labels");
  }
  Dataset d;
  const std::size_t width = rows * cols;
  d.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      d.features(i, j) = img[16 + i * width + j] / 255.0;
    }
  }
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.labels[i] = lab[8 + i];
  d.num_classes = 10;
  d.n_train = static_cast<Eigen::Index>(n);
  d.validate();
  return d;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": missing header row");
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);
  auto column_of = [&](const std::string& name) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) return c;
    }
    throw std::runtime_error(path + ": unknown column " + name);
  };
  const std::size_t label_col = column_of(schema.label_column);
  std::vector<std::size_t> feature_cols;
  if (schema.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c != label_col) feature_cols.push_back(c);
    }
  } else {
    for (const auto& name : schema.feature_columns) feature_cols.push_back(column_of(name));
  }

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    auto cell = [&](std::size_t c) -> double {
      const std::string text = c < cells.size() ? trim(cells[c]) : std::string();
      const std::string where = " at row " + std::to_string(row_no) + ", column " +
                                std::to_string(c + 1) + " (" + header[c] + ")";
      if (text.empty()) throw std::runtime_error(path + ": missing value" + where);
      char* end = nullptr;
      const double v = std::strtod(text.c_str(), &end);
      if (end != text.c_str() + text.size() || !std::isfinite(v)) {
        throw std::runtime_error(path + ": non-numeric value '" + text + "'" + where);
      }
      return v;
    };
    std::vector<double> x;
    x.reserve(feature_cols.size());
    for (std::size_t c : feature_cols) x.push_back(cell(c));
    const double y = cell(label_col);
    if (y != std::floor(y) || y < 0 || y > 1e9) {
      throw std::runtime_error(path + ": label " + cells[label_col] + " at row " +
                               std::to_string(row_no) + " is not a nonnegative integer");
    }
    rows.push_back(std::move(x));
    labels.push_back(static_cast<int>(y));
  }
  Dataset d;
  d.features.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(feature_cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < feature_cols.size(); ++j) d.features(i, j) = rows[i][j];
  }
  d.labels = std::move(labels);
  for (int y : d.labels) d.num_classes = std::max(d.num_classes, y + 1);
  d.n_train = d.size();
  return d;
}

const char* synthetic_kind_name(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::kClassificationGaussians: return "classification-gaussians";
    case SyntheticKind::kSequenceParity: return "sequence-parity";
  }
  return "?";
}

SyntheticKind parse_synthetic_kind(const std::string& name) {
  if (name == "classification-gaussians") return SyntheticKind::kClassificationGaussians;
  if (name == "sequence-parity") return SyntheticKind::kSequenceParity;
  throw std::invalid_argument("unknown synthetic dataset: " + name);
}

Dataset gen_synthetic(SyntheticKind kind, Eigen::Index n, std::uint64_t seed,
                      const SyntheticParams& params) {
  if (n < 2) throw std::invalid_argument("gen_synthetic: n must be >= 2");
  if (!(params.test_fraction >= 0.0 && params.test_fraction < 1.0)) {
    throw std::invalid_argument("gen_synthetic: test_fraction must be in [0, 1)");
  }
  RngStream rng(seed, std::string("synthetic/") + synthetic_kind_name(kind));
  Dataset d;
  d.labels.resize(n);
  switch (kind) {
    case SyntheticKind::kClassificationGaussians: {
      const int k = params.num_classes, dim = params.dim;
      if (k < 2 || dim < k || !(params.margin >= 0.0)) {
        throw std::invalid_argument(
            "gen_synthetic: need 2 <= num_classes <= dim and margin >= 0");
      }
      const double offset = params.margin / std::sqrt(2.0);
      d.features.resize(n, dim);
      for (Eigen::Index i = 0; i < n; ++i) {
        const int y = static_cast<int>(rng.next_below(k));
        d.labels[i] = y;
        for (int j = 0; j < dim; ++j) d.features(i, j) = rng.next_gaussian();
        d.features(i, y) += offset;
      }
      d.num_classes = k;
      break;
    }
    case SyntheticKind::kSequenceParity: {
      const int len = params.length;
      const int min_len = params.min_length == 0 ? len : params.min_length;
      if (params.vocab < 2 || len < 1 || min_len < 1 || min_len > len) {
        throw std::invalid_argument(
            "gen_synthetic: need vocab >= 2 and 1 <= min_length <= length");
      }
      d.tokens = Eigen::MatrixXi::Zero(n, len);
      for (Eigen::Index i = 0; i < n; ++i) {
        const int l = min_len + static_cast<int>(rng.next_below(len - min_len + 1));
        int count = 0;
        for (int t = len - l; t < len; ++t) {
          const int tok = 1 + static_cast<int>(rng.next_below(params.vocab - 1));
          d.tokens(i, t) = tok;
          if (tok == 1) ++count;
        }
        d.labels[i] = count % 2;
      }
      d.num_classes = 2;
      break;
    }
  }
  d.n_train = n - static_cast<Eigen::Index>(std::llround(params.test_fraction * n));
  return d;
}

}  // namespace dpjl

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

#include "dpjl/model.h"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace dpjl {
namespace {

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument("Model: " + what);
}

}  // namespace

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kDense: return "dense";
    case LayerKind::kEmbedding: return "embedding";
    case LayerKind::kSimpleRnn: return "simple_rnn";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kTanh: return "tanh";
    case LayerKind::kSigmoid: return "sigmoid";
  }
  return "?";
}

LayerKind parse_layer_kind(const std::string& name) {
  for (LayerKind k : {LayerKind::kDense, LayerKind::kEmbedding, LayerKind::kSimpleRnn,
                      LayerKind::kRelu, LayerKind::kTanh, LayerKind::kSigmoid}) {
    if (name == layer_kind_name(k)) return k;
  }
  throw std::invalid_argument("unknown layer kind: " + name);
}

const char* loss_head_name(LossHead head) {
  switch (head) {
    case LossHead::kSoftmaxCrossEntropy: return "softmax_cross_entropy";
    case LossHead::kSigmoidBinaryCrossEntropy: return "sigmoid_binary_cross_entropy";
    case LossHead::kMeanSquaredError: return "mean_squared_error";
  }
  return "?";
}

LossHead parse_loss_head(const std::string& name) {
  for (LossHead h : {LossHead::kSoftmaxCrossEntropy, LossHead::kSigmoidBinaryCrossEntropy,
                     LossHead::kMeanSquaredError}) {
    if (name == loss_head_name(h)) return h;
  }
  throw std::invalid_argument("unknown loss head: " + name);
}

Model::Model(std::vector<LayerSpec> layers, LossHead head, double loss_scale)
    : layers_(std::move(layers)), head_(head), loss_scale_(loss_scale) {
  if (layers_.empty()) fail("no layers");
  if (!(loss_scale > 0.0) || !std::isfinite(loss_scale)) fail("loss_scale must be finite and > 0");
  int width = 0;
  bool sequence = false;
  auto add = [&](int layer, const std::string& name, Eigen::Index rows,
                 Eigen::Index cols) {
    if (first_segment_[layer] < 0) first_segment_[layer] = static_cast<int>(segments_.size());
    segments_.push_back({name, layer, param_count_, rows, cols});
    param_count_ += rows * cols;
  };
  first_segment_.assign(layers_.size(), -1);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    LayerSpec& s = layers_[l];
    const int li = static_cast<int>(l);
    const std::string tag = std::string(layer_kind_name(s.kind)) + std::to_string(l);
    switch (s.kind) {
      case LayerKind::kEmbedding:
        if (l != 0) fail("embedding must be the first layer");
        if (s.in < 1 || s.out < 1) fail("embedding needs vocab >= 1 and dim >= 1");
        add(li, tag + "/table", s.in, s.out);
        width = s.out;
        sequence = true;
        break;
      case LayerKind::kDense:
        if (sequence) fail("dense layer " + std::to_string(l) + " cannot take a sequence");
        if (s.in < 1 || s.out < 1) fail("dense needs in >= 1 and out >= 1");
        if (l > 0 && s.in != width) {
          fail("dense layer " + std::to_string(l) + " expects width " +
               std::to_string(s.in) + ", got " + std::to_string(width));
        }
        add(li, tag + "/kernel", s.in, s.out);
        if (s.bias) add(li, tag + "/bias", 1, s.out);
        width = s.out;
        break;
      case LayerKind::kSimpleRnn:
        if (!sequence) fail("simple_rnn layer " + std::to_string(l) + " needs a sequence");
        if (s.in != width || s.out < 1) {
          fail("simple_rnn layer " + std::to_string(l) + " expects width " +
               std::to_string(s.in) + ", got " + std::to_string(width));
        }
        s.bias = true;
        add(li, tag + "/input_kernel", s.in, s.out);
        add(li, tag + "/recurrent_kernel", s.out, s.out);
        add(li, tag + "/bias", 1, s.out);
        width = s.out;
        sequence = false;
        break;
      case LayerKind::kRelu:
      case LayerKind::kTanh:
      case LayerKind::kSigmoid:
        if (l == 0) fail("an activation cannot be the first layer");
        s.in = s.out = width;
        break;
    }
  }
  if (sequence) fail("the last layer emits a sequence; add a simple_rnn");
  if (param_count_ == 0) fail("no trainable parameters");
  output_width_ = width;
  if (head_ == LossHead::kSigmoidBinaryCrossEntropy && width != 1) {
    fail("sigmoid_binary_cross_entropy needs one output");
  }
  if (head_ == LossHead::kSoftmaxCrossEntropy && width < 2) {
    fail("softmax_cross_entropy needs >= 2 outputs");
  }
}

ParamVector::ParamVector(std::vector<Segment> segments, Eigen::VectorXd values)
    : segments_(std::move(segments)), values_(std::move(values)) {
  Eigen::Index total = 0;
  for (const Segment& s : segments_) {
    if (s.offset != total) throw std::invalid_argument("ParamVector: segments not contiguous");
    total += s.size();
  }
  if (total != values_.size()) {
    throw std::invalid_argument("ParamVector: " + std::to_string(values_.size()) +
                                " values for " + std::to_string(total) + " parameters");
  }
}

ParamVector ParamVector::zeros(const Model& model) {
  return ParamVector(model.segments(), Eigen::VectorXd::Zero(model.param_count()));
}

std::vector<Eigen::MatrixXd> ParamVector::unflatten() const {
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  std::vector<Eigen::MatrixXd> out;
  out.reserve(segments_.size());
  for (const Segment& s : segments_) {
    out.emplace_back(Eigen::Map<const RowMat>(values_.data() + s.offset, s.rows, s.cols));
  }
  return out;
}

ParamVector ParamVector::flatten(const std::vector<Segment>& segments,
                                 const std::vector<Eigen::MatrixXd>& arrays) {
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  if (arrays.size() != segments.size()) {
    throw std::invalid_argument("ParamVector::flatten: segment count mismatch");
  }
  Eigen::Index total = 0;
  for (const Segment& s : segments) total += s.size();
  Eigen::VectorXd values(total);
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const Segment& s = segments[k];
    if (arrays[k].rows() != s.rows || arrays[k].cols() != s.cols) {
      throw std::invalid_argument("ParamVector::flatten: shape mismatch for " + s.name);
    }
    Eigen::Map<RowMat>(values.data() + s.offset, s.rows, s.cols) = arrays[k];
  }
  return ParamVector(segments, std::move(values));
}

ParamVector init_params(const Model& model, RngStream& rng) {
  ParamVector p = ParamVector::zeros(model);
  Eigen::VectorXd& v = p.values();
  for (const Segment& s : model.segments()) {
    const LayerSpec& layer = model.layers()[s.layer];
    const bool is_bias = s.name.size() >= 5 && s.name.compare(s.name.size() - 5, 5, "/bias") == 0;
    if (is_bias) continue;
    if (layer.kind == LayerKind::kEmbedding) {
      for (Eigen::Index i = 0; i < s.size(); ++i) v[s.offset + i] = rng.next_gaussian();
      continue;
    }
    double limit = std::sqrt(6.0 / static_cast<double>(s.rows + s.cols));
    if (s.name.find("recurrent") != std::string::npos) {
      limit = 1.0 / std::sqrt(static_cast<double>(s.cols));
    }
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      v[s.offset + i] = limit * (2.0 * rng.next_uniform() - 1.0);
    }
  }
  return p;
}

Eigen::Index Batch::size() const {
  return tokens.size() > 0 ? tokens.rows() : features.rows();
}

Batch Batch::row(Eigen::Index i) const {
  Batch b;
  if (features.size() > 0) b.features = features.row(i);
  if (tokens.size() > 0) b.tokens = tokens.row(i);
  if (!labels.empty()) b.labels = {labels[i]};
  if (targets.size() > 0) b.targets = targets.row(i);
  return b;
}

void check_batch(const Model& model, const Batch& batch) {
  const Eigen::Index n = batch.size();
  auto bad = [](const std::string& what) { throw std::invalid_argument("batch: " + what); };
  if (n == 0) bad("empty");
  if (model.takes_tokens()) {
    if (batch.tokens.rows() != n || batch.tokens.cols() < 1) bad("model expects token ids");
    const int vocab = model.input_width();
    for (Eigen::Index i = 0; i < batch.tokens.size(); ++i) {
      const int id = batch.tokens.data()[i];
      if (id < 0 || id >= vocab) {
        bad("token id " + std::to_string(id) + " outside vocabulary of " +
            std::to_string(vocab));
      }
    }
  } else if (batch.features.cols() != model.input_width()) {
    bad("expected " + std::to_string(model.input_width()) + " features, got " +
        std::to_string(batch.features.cols()));
  }
  const int k = model.output_width();
  switch (model.head()) {
    case LossHead::kSoftmaxCrossEntropy:
    case LossHead::kSigmoidBinaryCrossEntropy: {
      if (static_cast<Eigen::Index>(batch.labels.size()) != n) bad("label count mismatch");
      const int classes = model.head() == LossHead::kSoftmaxCrossEntropy ? k : 2;
      for (std::size_t i = 0; i < batch.labels.size(); ++i) {
        if (batch.labels[i] < 0 || batch.labels[i] >= classes) {
          bad("label " + std::to_string(batch.labels[i]) + " at row " + std::to_string(i) +
              " outside [0, " + std::to_string(classes) + ")");
        }
      }
      break;
    }
    case LossHead::kMeanSquaredError:
      if (batch.targets.rows() != n || batch.targets.cols() != k) {
        bad("targets must be " + std::to_string(n) + " x " + std::to_string(k));
      }
      break;
  }
}

}  // namespace dpjl

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

#ifndef DPJL_MODEL_H_
#define DPJL_MODEL_H_

#include <string>
#include <vector>

#include <Eigen/Core>

#include "dpjl/rng.h"

namespace dpjl {

enum class LayerKind { kDense, kEmbedding, kSimpleRnn, kRelu, kTanh, kSigmoid };

// Dense: in -> out, y = x W + b.
// Embedding: in = vocab, out = dim; consumes token ids, emits a sequence.
// SimpleRnn: in -> out = hidden, h_t = tanh(x_t Wx + h_{t-1} Wh + b) with
// h_0 = 0; emits h_L. Activations keep the width of their input.
struct LayerSpec {
  LayerKind kind = LayerKind::kDense;
  int in = 0;
  int out = 0;
  bool bias = true;

  static LayerSpec dense(int in, int out, bool bias = true) {
    return {LayerKind::kDense, in, out, bias};
  }
  static LayerSpec embedding(int vocab, int dim) {
    return {LayerKind::kEmbedding, vocab, dim, false};
  }
  static LayerSpec simple_rnn(int in, int hidden) {
    return {LayerKind::kSimpleRnn, in, hidden, true};
  }
  static LayerSpec relu() { return {LayerKind::kRelu, 0, 0, false}; }
  static LayerSpec tanh() { return {LayerKind::kTanh, 0, 0, false}; }
  static LayerSpec sigmoid() { return {LayerKind::kSigmoid, 0, 0, false}; }
};

// Per-sample losses, with z the final layer output:
//   softmax-CE:  logsumexp(z) - z_label
//   sigmoid-BCE: softplus(z) - label * z   (one output, labels 0/1)
//   MSE:         mean_j (z_j - target_j)^2
enum class LossHead { kSoftmaxCrossEntropy, kSigmoidBinaryCrossEntropy, kMeanSquaredError };

const char* layer_kind_name(LayerKind kind);
LayerKind parse_layer_kind(const std::string& name);
const char* loss_head_name(LossHead head);
LossHead parse_loss_head(const std::string& name);

// One trainable array: rows x cols, row-major at [offset, offset + size).
struct Segment {
  std::string name;
  int layer = 0;
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index size() const { return rows * cols; }
};

class Model {
 public:
  // Every per-sample loss is multiplied by loss_scale > 0. Throws
  // std::invalid_argument on incompatible shapes or no parameters.
  Model(std::vector<LayerSpec> layers, LossHead head, double loss_scale = 1.0);

  const std::vector<LayerSpec>& layers() const { return layers_; }
  LossHead head() const { return head_; }
  double loss_scale() const { return loss_scale_; }
  const std::vector<Segment>& segments() const { return segments_; }
  // Index into segments() of the first segment of each layer, -1 if none.
  int first_segment(int layer) const { return first_segment_[layer]; }
  Eigen::Index param_count() const { return param_count_; }
  bool takes_tokens() const { return layers_.front().kind == LayerKind::kEmbedding; }
  // Feature width for dense input; vocabulary size for token input.
  int input_width() const { return layers_.front().in; }
  int output_width() const { return output_width_; }

 private:
  std::vector<LayerSpec> layers_;
  LossHead head_;
  double loss_scale_;
  std::vector<Segment> segments_;
  std::vector<int> first_segment_;
  Eigen::Index param_count_ = 0;
  int output_width_ = 0;
};

// Flat parameters theta in R^d plus the segment table that gives them shape.
class ParamVector {
 public:
  ParamVector() = default;
  ParamVector(std::vector<Segment> segments, Eigen::VectorXd values);
  static ParamVector zeros(const Model& model);

  const std::vector<Segment>& segments() const { return segments_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }
  Eigen::Index size() const { return values_.size(); }

  // One matrix per segment; flatten(unflatten()) is the identity.
  std::vector<Eigen::MatrixXd> unflatten() const;
  static ParamVector flatten(const std::vector<Segment>& segments,
                             const std::vector<Eigen::MatrixXd>& arrays);

 private:
  std::vector<Segment> segments_;
  Eigen::VectorXd values_;
};

// Uniform Glorot initialization of weight matrices, Embedding rows N(0, 1),
// zero biases; the recurrent matrix is scaled by 1/sqrt(hidden).
ParamVector init_params(const Model& model, RngStream& rng);

// B examples. Dense input uses `features` (B x width); token input uses
// `tokens` (B x length, pad id 0). Classification heads read `labels`; MSE
// reads `targets` (B x output width).
struct Batch {
  Eigen::MatrixXd features;
  Eigen::MatrixXi tokens;
  std::vector<int> labels;
  Eigen::MatrixXd targets;

  Eigen::Index size() const;
  // Example i as a batch of one.
  Batch row(Eigen::Index i) const;
};

// Throws std::invalid_argument on shape mismatch or out-of-range ids.
void check_batch(const Model& model, const Batch& batch);

}  // namespace dpjl

#endif  // DPJL_MODEL_H_

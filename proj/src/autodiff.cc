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

#include "dpjl/autodiff.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpjl {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstView = Eigen::Map<const RowMat>;
using View = Eigen::Map<RowMat>;
// B x width per timestep; non-sequence values have one step.
using Seq = std::vector<Eigen::MatrixXd>;

thread_local PassCounters counters;

void note_gradient_storage(std::int64_t doubles) {
  counters.peak_gradient_doubles = std::max(counters.peak_gradient_doubles, doubles);
}

ConstView view(const Eigen::VectorXd& flat, const Segment& s) {
  return ConstView(flat.data() + s.offset, s.rows, s.cols);
}

View view(Eigen::VectorXd& flat, const Segment& s) {
  return View(flat.data() + s.offset, s.rows, s.cols);
}

// Primal inputs and outputs of every layer; SimpleRnn outputs hold all
// hidden states h_1..h_L.
struct Trace {
  std::vector<Seq> in;
  std::vector<Seq> out;
};

struct Forward {
  Eigen::MatrixXd z;
  Eigen::MatrixXd dz;  // empty without a tangent
};

double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

Eigen::MatrixXd apply_activation(LayerKind kind, const Eigen::MatrixXd& x) {
  switch (kind) {
    case LayerKind::kRelu: return x.cwiseMax(0.0);
    case LayerKind::kTanh: return x.array().tanh().matrix();
    case LayerKind::kSigmoid: return x.unaryExpr([](double v) { return sigmoid(v); });
    default: break;
  }
  throw std::logic_error("not an activation");
}

// d activation / d input at input x with output y.
Eigen::ArrayXXd activation_slope(LayerKind kind, const Eigen::MatrixXd& x,
                                 const Eigen::MatrixXd& y) {
  switch (kind) {
    case LayerKind::kRelu: return (x.array() > 0.0).cast<double>();
    case LayerKind::kTanh: return 1.0 - y.array().square();
    case LayerKind::kSigmoid: return y.array() * (1.0 - y.array());
    default: break;
  }
  throw std::logic_error("not an activation");
}

// Runs the layers. With `v` the tangent of every value is carried along;
// with `trace` the primal values are recorded for the reverse pass.
Forward run_layers(const Model& model, const ParamVector& params, const Batch& batch,
                   const Eigen::VectorXd* v, Trace* trace) {
  const Eigen::VectorXd& theta = params.values();
  const auto& segs = model.segments();
  const Eigen::Index n = batch.size();
  const bool tangent = v != nullptr;

  Seq x, dx;
  if (!model.takes_tokens()) {
    x = {batch.features};
    if (tangent) dx = {Eigen::MatrixXd::Zero(n, batch.features.cols())};
  }
  if (trace) {
    trace->in.assign(model.layers().size(), {});
    trace->out.assign(model.layers().size(), {});
  }

  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    const LayerSpec& spec = model.layers()[l];
    const int s0 = model.first_segment(static_cast<int>(l));
    if (trace) trace->in[l] = x;
    Seq y, dy;
    switch (spec.kind) {
      case LayerKind::kDense: {
        const ConstView w = view(theta, segs[s0]);
        Eigen::MatrixXd out = x[0] * w;
        if (spec.bias) out.rowwise() += view(theta, segs[s0 + 1]).row(0);
        y = {std::move(out)};
        if (tangent) {
          Eigen::MatrixXd d = dx[0] * w + x[0] * view(*v, segs[s0]);
          if (spec.bias) d.rowwise() += view(*v, segs[s0 + 1]).row(0);
          dy = {std::move(d)};
        }
        break;
      }
      case LayerKind::kEmbedding: {
        const ConstView table = view(theta, segs[s0]);
        const Eigen::Index steps = batch.tokens.cols();
        y.assign(steps, Eigen::MatrixXd(n, spec.out));
        if (tangent) dy.assign(steps, Eigen::MatrixXd(n, spec.out));
        for (Eigen::Index t = 0; t < steps; ++t) {
          for (Eigen::Index i = 0; i < n; ++i) {
            const int id = batch.tokens(i, t);
            y[t].row(i) = table.row(id);
            if (tangent) dy[t].row(i) = view(*v, segs[s0]).row(id);
          }
        }
        break;
      }
      case LayerKind::kSimpleRnn: {
        const ConstView wx = view(theta, segs[s0]);
        const ConstView wh = view(theta, segs[s0 + 1]);
        const auto b = view(theta, segs[s0 + 2]).row(0);
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, spec.out);
        Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(n, spec.out);
        Seq states;
        for (std::size_t t = 0; t < x.size(); ++t) {
          Eigen::MatrixXd a = x[t] * wx + h * wh;
          a.rowwise() += b;
          Eigen::MatrixXd next = a.array().tanh().matrix();
          if (tangent) {
            Eigen::MatrixXd da = dx[t] * wx + x[t] * view(*v, segs[s0]) + dh * wh +
                                 h * view(*v, segs[s0 + 1]);
            da.rowwise() += view(*v, segs[s0 + 2]).row(0);
            dh = ((1.0 - next.array().square()) * da.array()).matrix();
          }
          h = std::move(next);
          if (trace) states.push_back(h);
        }
        if (trace) trace->out[l] = std::move(states);
        y = {h};
        if (tangent) dy = {dh};
        break;
      }
      case LayerKind::kRelu:
      case LayerKind::kTanh:
      case LayerKind::kSigmoid: {
        y.resize(x.size());
        if (tangent) dy.resize(x.size());
        for (std::size_t t = 0; t < x.size(); ++t) {
          y[t] = apply_activation(spec.kind, x[t]);
          if (tangent) {
            dy[t] = (activation_slope(spec.kind, x[t], y[t]) * dx[t].array()).matrix();
          }
        }
        break;
      }
    }
#ifndef NDEBUG
    for (const auto& m : y) assert(m.allFinite() && "non-finite activation");
#endif
    if (trace && spec.kind != LayerKind::kSimpleRnn) trace->out[l] = y;
    x = std::move(y);
    dx = std::move(dy);
  }
  Forward f;
  f.z = std::move(x[0]);
  if (tangent) f.dz = std::move(dx[0]);
  return f;
}

// Per-sample losses and, when `grad` is given, dL_i/dz_i as rows.
Eigen::VectorXd loss_head(const Model& model, const Batch& batch, const Eigen::MatrixXd& z,
                          Eigen::MatrixXd* grad) {
  const Eigen::Index n = z.rows(), k = z.cols();
  Eigen::VectorXd loss(n);
  if (grad) grad->resize(n, k);
  switch (model.head()) {
    case LossHead::kSoftmaxCrossEntropy:
      for (Eigen::Index i = 0; i < n; ++i) {
        const double m = z.row(i).maxCoeff();
        const Eigen::RowVectorXd e = (z.row(i).array() - m).exp().matrix();
        const double s = e.sum();
        loss[i] = m + std::log(s) - z(i, batch.labels[i]);
        if (grad) {
          grad->row(i) = e / s;
          (*grad)(i, batch.labels[i]) -= 1.0;
        }
      }
      break;
    case LossHead::kSigmoidBinaryCrossEntropy:
      for (Eigen::Index i = 0; i < n; ++i) {
        const double v = z(i, 0);
        const double y = batch.labels[i];
        loss[i] = std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))) - y * v;
        if (grad) (*grad)(i, 0) = sigmoid(v) - y;
      }
      break;
    case LossHead::kMeanSquaredError: {
      const Eigen::MatrixXd r = z - batch.targets;
      loss = r.rowwise().squaredNorm() / static_cast<double>(k);
      if (grad) *grad = (2.0 / static_cast<double>(k)) * r;
      break;
    }
  }
  if (model.loss_scale() != 1.0) {
    loss *= model.loss_scale();
    if (grad) *grad *= model.loss_scale();
  }
  return loss;
}

}  // namespace

Eigen::VectorXd forward_losses(const Model& model, const ParamVector& params,
                               const Batch& batch) {
  check_batch(model, batch);
  ++counters.forward_passes;
  const Forward f = run_layers(model, params, batch, nullptr, nullptr);
  return loss_head(model, batch, f.z, nullptr);
}

Eigen::MatrixXd forward_outputs(const Model& model, const ParamVector& params,
                                const Batch& batch) {
  check_batch(model, batch);
  ++counters.forward_passes;
  return run_layers(model, params, batch, nullptr, nullptr).z;
}

double accuracy(const Model& model, const ParamVector& params, const Batch& batch) {
  if (model.head() == LossHead::kMeanSquaredError) return std::nan("");
  const Eigen::MatrixXd z = forward_outputs(model, params, batch);
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index predicted = 0;
    if (model.head() == LossHead::kSigmoidBinaryCrossEntropy) {
      predicted = z(i, 0) > 0.0 ? 1 : 0;
    } else {
      z.row(i).maxCoeff(&predicted);
    }
    if (predicted == batch.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(z.rows());
}

Eigen::VectorXd jvp_losses(const Model& model, const ParamVector& params,
                           const Batch& batch, const Eigen::VectorXd& tangent) {
  check_batch(model, batch);
  if (tangent.size() != model.param_count()) {
    throw std::invalid_argument("jvp_losses: tangent has " + std::to_string(tangent.size()) +
                                " entries, model has " +
                                std::to_string(model.param_count()));
  }
  ++counters.tangent_passes;
  const Forward f = run_layers(model, params, batch, &tangent, nullptr);
  Eigen::MatrixXd dl_dz;
  loss_head(model, batch, f.z, &dl_dz);
  return (dl_dz.array() * f.dz.array()).rowwise().sum().matrix();
}

Eigen::VectorXd grad_weighted_loss(const Model& model, const ParamVector& params,
                                   const Batch& batch, const Eigen::VectorXd& weights,
                                   Eigen::VectorXd* losses) {
  check_batch(model, batch);
  if (weights.size() != batch.size()) {
    throw std::invalid_argument("grad_weighted_loss: " + std::to_string(weights.size()) +
                                " weights for " + std::to_string(batch.size()) +
                                " examples");
  }
  if (!weights.allFinite()) throw std::invalid_argument("grad_weighted_loss: weights not finite");
  ++counters.reverse_passes;
  note_gradient_storage(model.param_count());

  const Eigen::VectorXd& theta = params.values();
  const auto& segs = model.segments();
  Trace trace;
  const Forward f = run_layers(model, params, batch, nullptr, &trace);
  Eigen::MatrixXd dl_dz;
  const Eigen::VectorXd l = loss_head(model, batch, f.z, &dl_dz);
  if (losses) *losses = l;

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.param_count());
  Seq g = {weights.asDiagonal() * dl_dz};
  for (std::size_t li = model.layers().size(); li-- > 0;) {
    const LayerSpec& spec = model.layers()[li];
    const int s0 = model.first_segment(static_cast<int>(li));
    const Seq& x = trace.in[li];
    const bool need_input_grad = li > 0;
    switch (spec.kind) {
      case LayerKind::kDense: {
        view(grad, segs[s0]) += x[0].transpose() * g[0];
        if (spec.bias) view(grad, segs[s0 + 1]) += g[0].colwise().sum();
        if (need_input_grad) g[0] = g[0] * view(theta, segs[s0]).transpose();
        break;
      }
      case LayerKind::kEmbedding: {
        View table = view(grad, segs[s0]);
        for (std::size_t t = 0; t < g.size(); ++t) {
          for (Eigen::Index i = 0; i < g[t].rows(); ++i) {
            table.row(batch.tokens(i, static_cast<Eigen::Index>(t))) += g[t].row(i);
          }
        }
        break;
      }
      case LayerKind::kSimpleRnn: {
        const ConstView wx = view(theta, segs[s0]);
        const ConstView wh = view(theta, segs[s0 + 1]);
        const Seq& h = trace.out[li];
        Eigen::MatrixXd gh = g[0];
        Seq gx(x.size());
        for (std::size_t t = x.size(); t-- > 0;) {
          const Eigen::MatrixXd ga = (gh.array() * (1.0 - h[t].array().square())).matrix();
          view(grad, segs[s0]) += x[t].transpose() * ga;
          if (t > 0) view(grad, segs[s0 + 1]) += h[t - 1].transpose() * ga;
          view(grad, segs[s0 + 2]) += ga.colwise().sum();
          gx[t] = ga * wx.transpose();
          gh = ga * wh.transpose();
        }
        g = std::move(gx);
        break;
      }
      case LayerKind::kRelu:
      case LayerKind::kTanh:
      case LayerKind::kSigmoid: {
        const Seq& y = trace.out[li];
        for (std::size_t t = 0; t < g.size(); ++t) {
          g[t] = (activation_slope(spec.kind, x[t], y[t]) * g[t].array()).matrix();
        }
        break;
      }
    }
  }
  return grad;
}

Eigen::MatrixXd per_sample_grads(const Model& model, const ParamVector& params,
                                 const Batch& batch) {
  check_batch(model, batch);
  const Eigen::Index n = batch.size();
  Eigen::MatrixXd rows(n, model.param_count());
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  for (Eigen::Index i = 0; i < n; ++i) {
    rows.row(i) = grad_weighted_loss(model, params, batch.row(i), one).transpose();
  }
  note_gradient_storage(n * model.param_count());
  return rows;
}

const PassCounters& pass_counters() { return counters; }

void reset_pass_counters() { counters = PassCounters{}; }

}  // namespace dpjl

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

#ifndef DPJL_AUTODIFF_H_
#define DPJL_AUTODIFF_H_

#include <cstdint>

#include <Eigen/Core>

#include "dpjl/model.h"

namespace dpjl {

// F(theta) = (L(theta; X_1), ..., L(theta; X_B)).
Eigen::VectorXd forward_losses(const Model& model, const ParamVector& params,
                               const Batch& batch);

// Final-layer outputs z (B x output width), before the loss head.
Eigen::MatrixXd forward_outputs(const Model& model, const ParamVector& params,
                                const Batch& batch);

// Fraction of examples whose prediction matches the label: argmax z for
// softmax-CE, z > 0 for sigmoid-BCE. NaN for MSE.
double accuracy(const Model& model, const ParamVector& params, const Batch& batch);

// Reverse-mode gradient of sum_i w_i L(theta; X_i). The weights are
// constants. When `losses` is given it receives F(theta) from the same pass.
Eigen::VectorXd grad_weighted_loss(const Model& model, const ParamVector& params,
                                   const Batch& batch, const Eigen::VectorXd& weights,
                                   Eigen::VectorXd* losses = nullptr);

// P_i = <grad L(theta; X_i), v> by one forward pass carrying tangents.
//
// Tangent rules (primal y, tangent dy; dW, db are slices of v):
//   Dense        dy = dx W + x dW + db
//   relu         dy = [x > 0] dx
//   tanh         dy = (1 - y^2) dx
//   sigmoid      dy = y (1 - y) dx
//   Embedding    dy_t = dE[token_t]
//   SimpleRnn    dh_t = (1 - h_t^2)(dx_t Wx + x_t dWx + dh_{t-1} Wh
//                                   + h_{t-1} dWh + db), dh_0 = 0
//   softmax-CE   dL = <softmax(z), dz> - dz_label
//   sigmoid-BCE  dL = (sigmoid(z) - label) dz
//   MSE          dL = (2 / k) <z - target, dz>
Eigen::VectorXd jvp_losses(const Model& model, const ParamVector& params,
                           const Batch& batch, const Eigen::VectorXd& tangent);

// Row i = grad L(theta; X_i), from B independent reverse passes.
Eigen::MatrixXd per_sample_grads(const Model& model, const ParamVector& params,
                                 const Batch& batch);

// Work done on the calling thread since the last reset. Gradient storage
// counts doubles allocated for parameter-gradient results.
struct PassCounters {
  std::int64_t forward_passes = 0;
  std::int64_t tangent_passes = 0;
  std::int64_t reverse_passes = 0;
  std::int64_t peak_gradient_doubles = 0;
};

const PassCounters& pass_counters();
void reset_pass_counters();

}  // namespace dpjl

#endif  // DPJL_AUTODIFF_H_

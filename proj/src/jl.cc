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

#include "dpjl/jl.h"

#include <cmath>
#include <stdexcept>

#include "dpjl/autodiff.h"

namespace dpjl {

NormEstimates estimate_norms(const Model& model, const ParamVector& params,
                             const Batch& batch, int r, RngStream& rng) {
  if (r < 1) throw std::invalid_argument("estimate_norms: r must be >= 1");
  NormEstimates out;
  out.jl_dim = r;
  out.projection_seed = rng.seed();
  out.projection_label = rng.label();
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(batch.size());
  for (int j = 0; j < r; ++j) {
    const Eigen::VectorXd v = sample_std_gaussian(rng, model.param_count());
    sum_sq += jvp_losses(model, params, batch, v).cwiseAbs2();
  }
  out.values = (sum_sq / static_cast<double>(r)).cwiseSqrt();
  return out;
}

Eigen::VectorXd exact_norms(const Model& model, const ParamVector& params,
                            const Batch& batch) {
  return per_sample_grads(model, params, batch).rowwise().norm();
}

Eigen::VectorXd clip_weights(const Eigen::VectorXd& norms, double clip,
                             Eigen::Index batch_size) {
  if (!(clip > 0.0)) throw std::invalid_argument("clip_weights: clip must be > 0");
  if (batch_size < 1) throw std::invalid_argument("clip_weights: batch_size must be >= 1");
  const double inv_b = 1.0 / static_cast<double>(batch_size);
  Eigen::VectorXd w(norms.size());
  for (Eigen::Index i = 0; i < norms.size(); ++i) {
    const double m = norms[i];
    if (!(m >= 0.0)) throw std::invalid_argument("clip_weights: norms must be >= 0");
    w[i] = m <= kZeroNormFloor ? inv_b : std::min(1.0, clip / m) * inv_b;
  }
  return w;
}

}  // namespace dpjl

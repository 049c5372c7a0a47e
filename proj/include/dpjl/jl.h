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

#ifndef DPJL_JL_H_
#define DPJL_JL_H_

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "dpjl/model.h"
#include "dpjl/rng.h"

namespace dpjl {

// Estimates at or below this are treated as zero by clip_weights.
inline constexpr double kZeroNormFloor = 1e-12;

struct NormEstimates {
  Eigen::VectorXd values;  // M_i >= 0
  int jl_dim = 0;
  // Identity of the projection stream: (seed, label) at entry.
  std::uint64_t projection_seed = 0;
  std::string projection_label;
};

// M_i = sqrt((1/r) sum_j <g_i, v_j>^2) with v_j ~ N(0, I_d) drawn from rng
// in order, one full vector per projection. Exactly r tangent passes and no
// reverse pass. Throws std::invalid_argument if r < 1.
NormEstimates estimate_norms(const Model& model, const ParamVector& params,
                             const Batch& batch, int r, RngStream& rng);

// ||g_i|| from per_sample_grads.
Eigen::VectorXd exact_norms(const Model& model, const ParamVector& params,
                            const Batch& batch);

// w_i = min(1, C / M_i) / B, and 1 / B when M_i <= kZeroNormFloor. C may be
// +inf. Throws std::invalid_argument unless C > 0 and every M_i >= 0.
Eigen::VectorXd clip_weights(const Eigen::VectorXd& norms, double clip,
                             Eigen::Index batch_size);

}  // namespace dpjl

#endif  // DPJL_JL_H_

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

#ifndef DPJL_OPTIM_H_
#define DPJL_OPTIM_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dpjl/data.h"
#include "dpjl/model.h"
#include "dpjl/rng.h"

namespace dpjl {

// Update rules:
//   sgd family          theta -= lr g
//   adam family         bias-corrected Adam on g with step size lr
//   *-adam-paper family m and u as Adam, then theta -= (m / (sqrt(u) + eps)) * g
//                       elementwise; no bias correction and no lr.
// Gradients g: sgd/adam/adam-paper use the mean batch gradient; dp-sgd and
// dp-adam clip exact per-sample gradients; the -jl kinds clip by JL norm
// estimates. Private kinds add (sigma C / B) N(0, I_d).
enum class OptimizerKind {
  kSgd,
  kAdam,
  kAdamPaper,
  kDpSgd,
  kDpAdam,
  kDpSgdJl,
  kDpAdamJl,
  kDpAdamJlPaper,
};

const char* optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& name);
bool is_private(OptimizerKind kind);
bool uses_jl(OptimizerKind kind);

enum class SamplingMode { kFixedSize, kPoisson };
const char* sampling_name(SamplingMode mode);
SamplingMode parse_sampling(const std::string& name);

// kNone records zero seconds so repeated runs write identical metrics.
enum class TimingMode { kWall, kNone };

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::kDpSgdJl;
  // steps > 0 takes precedence over epochs; otherwise T = round(E N / B).
  std::int64_t steps = 0;
  double epochs = 1.0;
  // One entry is a constant; otherwise entry t-1 is used at step t.
  std::vector<double> learning_rates{0.1};
  double noise_scale = 1.0;
  std::int64_t batch_size = 128;
  std::vector<double> clip_norms{1.0};
  int jl_dim = 5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  SamplingMode sampling = SamplingMode::kFixedSize;
  std::uint64_t seed = 0;
  // -jl kinds use exact per-sample norms instead of estimates.
  bool norm_oracle = false;
  TimingMode timing = TimingMode::kWall;

  double learning_rate(std::int64_t step) const;
  double clip_norm(std::int64_t step) const;
  std::int64_t total_steps(Eigen::Index n_train) const;
  std::int64_t steps_per_epoch(Eigen::Index n_train) const;
  // Throws std::invalid_argument on violated invariants.
  void validate(Eigen::Index n_train) const;
};

struct OptimizerState {
  ParamVector params;
  Eigen::VectorXd m;
  Eigen::VectorXd u;
  std::int64_t t = 0;  // steps taken
};

OptimizerState init_state(ParamVector params);

struct StepReport {
  std::int64_t step = 0;
  Eigen::Index batch_size = 0;
  double mean_loss = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;   // before noise
  double noise_norm = 0.0;
  double seconds = 0.0;
};

// Streams of step t: "<name>/step-t" under the run seed.
RngStream step_stream(std::uint64_t seed, const char* name, std::int64_t step);

// Fixed-size: partial Fisher-Yates, B distinct indices in ascending order.
// Poisson: each index independently with probability B / N. Throws
// std::invalid_argument if B > N or B < 1.
std::vector<Eigen::Index> sample_batch(RngStream& rng, Eigen::Index n, Eigen::Index b,
                                       SamplingMode mode);

// Each row scaled to norm at most `clip`; rows at or below the zero floor
// are kept.
Eigen::MatrixXd clip_rows(const Eigen::MatrixXd& rows, double clip);

// One step at state.t + 1 on `batch`. The free functions below fix the
// optimizer kind; step() dispatches on config.optimizer.
StepReport step(OptimizerState& state, const TrainConfig& config, const Model& model,
                const Batch& batch);
StepReport step_dp_sgd_jl(OptimizerState& state, const TrainConfig& config,
                          const Model& model, const Batch& batch);
StepReport step_dp_adam_jl(OptimizerState& state, const TrainConfig& config,
                           const Model& model, const Batch& batch);
StepReport step_dp_sgd_vanilla(OptimizerState& state, const TrainConfig& config,
                               const Model& model, const Batch& batch);

struct MetricsRow {
  int epoch = 0;
  std::int64_t step = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;  // NaN without a test split
  double clip_fraction = 0.0;
  double epoch_seconds = 0.0;
};

struct TrainCallbacks {
  std::function<void(const StepReport&)> on_step;
  std::function<void(const MetricsRow&)> on_epoch;
};

struct TrainResult {
  ParamVector initial;
  ParamVector final_params;
  std::vector<StepReport> steps;
  std::vector<double> param_norms;  // ||theta_t|| for t = 0..T
  std::vector<MetricsRow> metrics;
};

// Parameters start from init_params under the "init" stream unless
// `initial` is given. Metrics are evaluated at the end of every epoch and
// after the last step. A throwing step propagates after the epochs already
// completed were reported through on_epoch.
TrainResult train(const TrainConfig& config, const Model& model, const Dataset& data,
                  const TrainCallbacks& callbacks = {},
                  const ParamVector* initial = nullptr);

}  // namespace dpjl

#endif  // DPJL_OPTIM_H_

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

#include "dpjl/optim.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dpjl/autodiff.h"
#include "dpjl/jl.h"

namespace dpjl {
namespace {

enum class GradientSource { kMean, kExactClip, kJlClip };
enum class UpdateRule { kSgd, kAdam, kAdamPaper };

GradientSource source_of(const TrainConfig& c) {
  switch (c.optimizer) {
    case OptimizerKind::kSgd:
    case OptimizerKind::kAdam:
    case OptimizerKind::kAdamPaper:
      return GradientSource::kMean;
    case OptimizerKind::kDpSgd:
    case OptimizerKind::kDpAdam:
      return GradientSource::kExactClip;
    case OptimizerKind::kDpSgdJl:
    case OptimizerKind::kDpAdamJl:
    case OptimizerKind::kDpAdamJlPaper:
      return c.norm_oracle ? GradientSource::kExactClip : GradientSource::kJlClip;
  }
  return GradientSource::kMean;
}

UpdateRule rule_of(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::kSgd:
    case OptimizerKind::kDpSgd:
    case OptimizerKind::kDpSgdJl:
      return UpdateRule::kSgd;
    case OptimizerKind::kAdam:
    case OptimizerKind::kDpAdam:
    case OptimizerKind::kDpAdamJl:
      return UpdateRule::kAdam;
    case OptimizerKind::kAdamPaper:
    case OptimizerKind::kDpAdamJlPaper:
      return UpdateRule::kAdamPaper;
  }
  return UpdateRule::kSgd;
}

double pick(const std::vector<double>& schedule, std::int64_t step, const char* what) {
  if (schedule.empty()) throw std::invalid_argument(std::string(what) + " schedule is empty");
  if (schedule.size() == 1) return schedule[0];
  if (step < 1 || step > static_cast<std::int64_t>(schedule.size())) {
    throw std::invalid_argument(std::string(what) + " schedule has no entry for step " +
                                std::to_string(step));
  }
  return schedule[step - 1];
}

double fraction_above(const Eigen::VectorXd& norms, double clip) {
  if (norms.size() == 0) return 0.0;
  return static_cast<double>((norms.array() > clip).count()) / static_cast<double>(norms.size());
}

StepReport run_step(OptimizerState& state, const TrainConfig& config, const Model& model,
                    const Batch& batch) {
  const auto start = std::chrono::steady_clock::now();
  const std::int64_t t = state.t + 1;
  const Eigen::Index d = model.param_count();
  const Eigen::Index n = batch.size();
  const double clip = config.clip_norm(t);
  const bool priv = is_private(config.optimizer);

  StepReport report;
  report.step = t;
  report.batch_size = n;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd losses;
  if (n > 0) {
    switch (source_of(config)) {
      case GradientSource::kMean:
        g = grad_weighted_loss(model, state.params, batch,
                               Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)),
                               &losses);
        break;
      case GradientSource::kJlClip: {
        RngStream proj = step_stream(config.seed, "jl-proj", t);
        const NormEstimates est =
            estimate_norms(model, state.params, batch, config.jl_dim, proj);
        const Eigen::VectorXd w = clip_weights(est.values, clip, config.batch_size);
        g = grad_weighted_loss(model, state.params, batch, w, &losses);
        report.clip_fraction = fraction_above(est.values, clip);
        break;
      }
      case GradientSource::kExactClip: {
        const Eigen::MatrixXd rows = per_sample_grads(model, state.params, batch);
        const Eigen::VectorXd norms = rows.rowwise().norm();
        const Eigen::VectorXd w = clip_weights(norms, clip, config.batch_size);
        g = rows.transpose() * w;
        losses = forward_losses(model, state.params, batch);
        report.clip_fraction = fraction_above(norms, clip);
        break;
      }
    }
    report.mean_loss = losses.mean();
  }
  report.grad_norm = g.norm();

  if (priv && config.noise_scale > 0.0) {
    const double scale = config.noise_scale * clip / static_cast<double>(config.batch_size);
    if (!std::isfinite(scale)) {
      throw std::invalid_argument("noise scale sigma * C / B is not finite");
    }
    RngStream noise_rng = step_stream(config.seed, "noise", t);
    const Eigen::VectorXd noise = scale * sample_std_gaussian(noise_rng, d);
    report.noise_norm = noise.norm();
    g += noise;
  }

  Eigen::VectorXd& theta = state.params.values();
  switch (rule_of(config.optimizer)) {
    case UpdateRule::kSgd:
      theta -= config.learning_rate(t) * g;
      break;
    case UpdateRule::kAdam: {
      state.m = config.beta1 * state.m + (1.0 - config.beta1) * g;
      state.u = config.beta2 * state.u + (1.0 - config.beta2) * g.cwiseAbs2();
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
      theta -= config.learning_rate(t) *
               ((state.m / c1).array() / ((state.u / c2).array().sqrt() + config.adam_epsilon))
                   .matrix();
      break;
    }
    case UpdateRule::kAdamPaper: {
      state.m = config.beta1 * state.m + (1.0 - config.beta1) * g;
      state.u = config.beta2 * state.u + (1.0 - config.beta2) * g.cwiseAbs2();
      const Eigen::ArrayXd ratio = state.m.array() / (state.u.array().sqrt() + config.adam_epsilon);
      theta -= (ratio * g.array()).matrix();
      break;
    }
  }
  state.t = t;
  if (config.timing == TimingMode::kWall) {
    report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return report;
}

void require_kind(const TrainConfig& config, std::initializer_list<OptimizerKind> kinds,
                  const char* op) {
  for (OptimizerKind k : kinds) {
    if (config.optimizer == k) return;
  }
  throw std::invalid_argument(std::string(op) + ": optimizer " +
                              optimizer_name(config.optimizer) + " not handled here");
}

struct Evaluation {
  double loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
};

double mean_over(const Dataset& data, Eigen::Index begin, Eigen::Index end,
                 const std::function<double(const Batch&)>& f) {
  constexpr Eigen::Index kChunk = 4096;
  if (end <= begin) return std::nan("");
  double sum = 0.0;
  for (Eigen::Index a = begin; a < end; a += kChunk) {
    const Eigen::Index b = std::min(end, a + kChunk);
    sum += f(data.slice(a, b)) * static_cast<double>(b - a);
  }
  return sum / static_cast<double>(end - begin);
}

Evaluation evaluate(const Model& model, const ParamVector& params, const Dataset& data) {
  Evaluation e;
  const auto loss = [&](const Batch& b) { return forward_losses(model, params, b).mean(); };
  const auto acc = [&](const Batch& b) { return accuracy(model, params, b); };
  e.loss = mean_over(data, 0, data.n_train, loss);
  e.train_acc = mean_over(data, 0, data.n_train, acc);
  e.test_acc = mean_over(data, data.n_train, data.size(), acc);
  return e;
}

}  // namespace

const char* optimizer_name(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kAdam: return "adam";
    case OptimizerKind::kAdamPaper: return "adam-paper";
    case OptimizerKind::kDpSgd: return "dp-sgd";
    case OptimizerKind::kDpAdam: return "dp-adam";
    case OptimizerKind::kDpSgdJl: return "dp-sgd-jl";
    case OptimizerKind::kDpAdamJl: return "dp-adam-jl";
    case OptimizerKind::kDpAdamJlPaper: return "dp-adam-jl-paper";
  }
  return "?";
}

OptimizerKind parse_optimizer(const std::string& name) {
  for (OptimizerKind k :
       {OptimizerKind::kSgd, OptimizerKind::kAdam, OptimizerKind::kAdamPaper,
        OptimizerKind::kDpSgd, OptimizerKind::kDpAdam, OptimizerKind::kDpSgdJl,
        OptimizerKind::kDpAdamJl, OptimizerKind::kDpAdamJlPaper}) {
    if (name == optimizer_name(k)) return k;
  }
  throw std::invalid_argument("unknown optimizer: " + name);
}

bool is_private(OptimizerKind kind) {
  return kind != OptimizerKind::kSgd && kind != OptimizerKind::kAdam &&
         kind != OptimizerKind::kAdamPaper;
}

bool uses_jl(OptimizerKind kind) {
  return kind == OptimizerKind::kDpSgdJl || kind == OptimizerKind::kDpAdamJl ||
         kind == OptimizerKind::kDpAdamJlPaper;
}

const char* sampling_name(SamplingMode mode) {
  return mode == SamplingMode::kPoisson ? "poisson" : "fixed-size-without-replacement";
}

SamplingMode parse_sampling(const std::string& name) {
  if (name == "poisson") return SamplingMode::kPoisson;
  if (name == "fixed-size-without-replacement" || name == "fixed-size") {
    return SamplingMode::kFixedSize;
  }
  throw std::invalid_argument("unknown sampling mode: " + name);
}

double TrainConfig::learning_rate(std::int64_t step) const {
  return pick(learning_rates, step, "learning_rates");
}

double TrainConfig::clip_norm(std::int64_t step) const {
  return pick(clip_norms, step, "clip_norms");
}

std::int64_t TrainConfig::steps_per_epoch(Eigen::Index n_train) const {
  return std::max<std::int64_t>(
      1, std::llround(static_cast<double>(n_train) / static_cast<double>(batch_size)));
}

std::int64_t TrainConfig::total_steps(Eigen::Index n_train) const {
  if (steps > 0) return steps;
  return std::llround(epochs * static_cast<double>(n_train) / static_cast<double>(batch_size));
}

void TrainConfig::validate(Eigen::Index n_train) const {
  auto bad = [](const std::string& what) { throw std::invalid_argument("config: " + what); };
  if (batch_size < 1) bad("batch_size must be >= 1");
  if (batch_size > n_train) {
    bad("batch_size " + std::to_string(batch_size) + " exceeds " + std::to_string(n_train) +
        " training examples");
  }
  if (steps < 0 || !(epochs >= 0.0)) bad("steps and epochs must be >= 0");
  const std::int64_t t = total_steps(n_train);
  for (const auto* schedule : {&learning_rates, &clip_norms}) {
    if (schedule->empty()) bad("empty schedule");
    if (schedule->size() > 1 && static_cast<std::int64_t>(schedule->size()) < t) {
      bad("schedule shorter than the " + std::to_string(t) + " steps");
    }
  }
  for (double lr : learning_rates) {
    if (!std::isfinite(lr)) bad("learning rates must be finite");
  }
  for (double c : clip_norms) {
    if (!(c > 0.0)) bad("clip norms must be > 0");
  }
  if (is_private(optimizer) && !(noise_scale >= 0.0)) bad("noise_scale must be >= 0");
  if (uses_jl(optimizer) && jl_dim < 1) bad("jl_dim must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    bad("adam betas must be in [0, 1)");
  }
  if (!(adam_epsilon >= 0.0)) bad("adam_epsilon must be >= 0");
}

OptimizerState init_state(ParamVector params) {
  OptimizerState s;
  const Eigen::Index d = params.size();
  s.params = std::move(params);
  s.m = Eigen::VectorXd::Zero(d);
  s.u = Eigen::VectorXd::Zero(d);
  return s;
}

RngStream step_stream(std::uint64_t seed, const char* name, std::int64_t step) {
  return RngStream(seed, name).child("step-" + std::to_string(step));
}

std::vector<Eigen::Index> sample_batch(RngStream& rng, Eigen::Index n, Eigen::Index b,
                                       SamplingMode mode) {
  if (b < 1 || b > n) {
    throw std::invalid_argument("sample_batch: need 1 <= B <= N, got B=" + std::to_string(b) +
                                ", N=" + std::to_string(n));
  }
  std::vector<Eigen::Index> out;
  if (mode == SamplingMode::kPoisson) {
    const double q = static_cast<double>(b) / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (rng.next_uniform() < q) out.push_back(i);
    }
    return out;
  }
  std::vector<Eigen::Index> idx(n);
  for (Eigen::Index i = 0; i < n; ++i) idx[i] = i;
  for (Eigen::Index i = 0; i < b; ++i) {
    const Eigen::Index j = i + static_cast<Eigen::Index>(rng.next_below(n - i));
    std::swap(idx[i], idx[j]);
  }
  out.assign(idx.begin(), idx.begin() + b);
  std::sort(out.begin(), out.end());
  return out;
}

Eigen::MatrixXd clip_rows(const Eigen::MatrixXd& rows, double clip) {
  const Eigen::VectorXd norms = rows.rowwise().norm();
  const Eigen::VectorXd w = clip_weights(norms, clip, 1);
  return w.asDiagonal() * rows;
}

StepReport step(OptimizerState& state, const TrainConfig& config, const Model& model,
                const Batch& batch) {
  return run_step(state, config, model, batch);
}

StepReport step_dp_sgd_jl(OptimizerState& state, const TrainConfig& config,
                          const Model& model, const Batch& batch) {
  require_kind(config, {OptimizerKind::kDpSgdJl}, "step_dp_sgd_jl");
  return run_step(state, config, model, batch);
}

StepReport step_dp_adam_jl(OptimizerState& state, const TrainConfig& config,
                           const Model& model, const Batch& batch) {
  require_kind(config, {OptimizerKind::kDpAdamJl, OptimizerKind::kDpAdamJlPaper},
               "step_dp_adam_jl");
  return run_step(state, config, model, batch);
}

StepReport step_dp_sgd_vanilla(OptimizerState& state, const TrainConfig& config,
                               const Model& model, const Batch& batch) {
  require_kind(config, {OptimizerKind::kDpSgd}, "step_dp_sgd_vanilla");
  return run_step(state, config, model, batch);
}

TrainResult train(const TrainConfig& config, const Model& model, const Dataset& data,
                  const TrainCallbacks& callbacks, const ParamVector* initial) {
  data.validate();
  config.validate(data.n_train);
  TrainResult result;
  if (initial) {
    if (initial->size() != model.param_count()) {
      throw std::invalid_argument("train: initial parameters do not match the model");
    }
    result.initial = *initial;
  } else {
    RngStream init_rng(config.seed, "init");
    result.initial = init_params(model, init_rng);
  }
  OptimizerState state = init_state(result.initial);
  result.param_norms.push_back(state.params.values().norm());

  const std::int64_t total = config.total_steps(data.n_train);
  const double per_epoch = static_cast<double>(data.n_train) / static_cast<double>(config.batch_size);
  int epoch = 1;
  std::int64_t epoch_end = std::max<std::int64_t>(1, std::llround(per_epoch));
  double epoch_seconds = 0.0, clip_sum = 0.0;
  std::int64_t epoch_steps = 0;
  for (std::int64_t t = 1; t <= total; ++t) {
    RngStream batch_rng = step_stream(config.seed, "batch", t);
    const std::vector<Eigen::Index> rows =
        sample_batch(batch_rng, data.n_train, config.batch_size, config.sampling);
    const StepReport report = run_step(state, config, model, data.gather(rows));
    result.steps.push_back(report);
    result.param_norms.push_back(state.params.values().norm());
    if (callbacks.on_step) callbacks.on_step(report);
    epoch_seconds += report.seconds;
    clip_sum += report.clip_fraction;
    ++epoch_steps;
    if (t >= epoch_end || t == total) {
      const auto eval_start = std::chrono::steady_clock::now();
      const Evaluation e = evaluate(model, state.params, data);
      if (config.timing == TimingMode::kWall) {
        epoch_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                       eval_start).count();
      }
      MetricsRow row;
      row.epoch = epoch;
      row.step = t;
      row.train_loss = e.loss;
      row.train_acc = e.train_acc;
      row.test_acc = e.test_acc;
      row.clip_fraction = clip_sum / static_cast<double>(epoch_steps);
      row.epoch_seconds = epoch_seconds;
      result.metrics.push_back(row);
      if (callbacks.on_epoch) callbacks.on_epoch(row);
      epoch_seconds = clip_sum = 0.0;
      epoch_steps = 0;
      ++epoch;
      epoch_end = std::max<std::int64_t>(t + 1, std::llround(epoch * per_epoch));
    }
  }
  result.final_params = state.params;
  return result;
}

}  // namespace dpjl

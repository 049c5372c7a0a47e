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

#ifndef DPJL_CONFIG_H_
#define DPJL_CONFIG_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpjl/data.h"
#include "dpjl/model.h"
#include "dpjl/optim.h"
#include "dpjl/pld.h"

namespace dpjl {

// Bad user input: unreadable or malformed config, unknown keys, invalid
// values. The CLI maps it to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Run configuration, one JSON document:
//   {
//     "seed": 0,
//     "data": {"source": "synthetic", "kind": "classification-gaussians",
//              "n": 10000, "num_classes": 2, "dim": 10, "margin": 4.0,
//              "vocab": 4, "length": 8, "min_length": 0,
//              "test_fraction": 0.2}
//           | {"source": "idx", "train_images": ..., "train_labels": ...,
//              "test_images": ..., "test_labels": ..., "limit": 0}
//           | {"source": "csv", "train": ..., "test": ...,
//              "feature_columns": [...], "label_column": "label"},
//     "model": {"layers": [{"kind": "dense", "in": 10, "out": 32}, ...],
//               "loss": "softmax_cross_entropy", "loss_scale": 1.0},
//     "train": {"optimizer": "dp-sgd-jl", "steps": 0, "epochs": 1,
//               "learning_rate": 0.1 | [...], "noise_scale": 1.0,
//               "batch_size": 128, "clip_norm": 1.0 | [...], "jl_dim": 5,
//               "beta1": 0.9, "beta2": 0.999, "adam_epsilon": 1e-8,
//               "sampling": "fixed-size-without-replacement",
//               "norm_oracle": false, "timing": "wall"},
//     "accountant": {"enabled": true, "delta": 1e-5, "delta_eps": 1e-3,
//                    "loss_clamp": 32, "quad_tol": 1e-9},
//     "output": {"dir": "run"}
//   }
// Omitted keys take the defaults shown; unknown keys are errors. Relative
// data paths resolve against the working directory.
struct DataConfig {
  std::string source = "synthetic";
  SyntheticKind kind = SyntheticKind::kClassificationGaussians;
  Eigen::Index n = 10000;
  SyntheticParams synthetic;
  std::string train_images, train_labels, test_images, test_labels;
  std::string train_csv, test_csv;
  CsvSchema csv;
  Eigen::Index limit = 0;  // idx: keep the first `limit` training rows, 0 keeps all
};

struct AccountantConfig {
  bool enabled = true;
  double delta = 1e-5;
  PldOptions options;
};

struct RunConfig {
  std::uint64_t seed = 0;
  DataConfig data;
  std::vector<LayerSpec> layers;
  LossHead loss = LossHead::kSoftmaxCrossEntropy;
  double loss_scale = 1.0;
  TrainConfig train;
  AccountantConfig accountant;
  std::string output_dir = "run";
};

RunConfig run_config_from_json(const nlohmann::json& doc);
// Every field, defaults included; run_config_from_json inverts it.
nlohmann::json to_json(const RunConfig& config);

// Reads a config file. A run manifest is accepted too; its "config" member
// is used.
nlohmann::json load_config_json(const std::string& path);

// "a.b.c=value": value is parsed as JSON when it parses, else taken as a
// string. Intermediate objects are created as needed.
void apply_override(nlohmann::json& doc, const std::string& assignment);

nlohmann::json layers_to_json(const std::vector<LayerSpec>& layers);
std::vector<LayerSpec> layers_from_json(const nlohmann::json& layers);

Model build_model(const RunConfig& config);
Dataset load_dataset(const RunConfig& config);

// Accountant view of a training config: sigma, r (exact for the exact-clip
// kinds and oracle mode), p = B / N and T.
MechanismSpec mechanism_for(const TrainConfig& train, Eigen::Index n_train);

const char* code_version();

inline constexpr const char* kManifestFormat = "dpjl-run-manifest";

// Resolved config, code version, output file names and accountant
// settings. Feeding it back through load_config_json reproduces the run.
nlohmann::json make_manifest(const RunConfig& config,
                             const std::vector<std::string>& outputs);

}  // namespace dpjl

#endif  // DPJL_CONFIG_H_

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

#ifndef DPJL_IO_H_
#define DPJL_IO_H_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dpjl/model.h"
#include "dpjl/optim.h"
#include "dpjl/pld.h"
#include "dpjl/tradeoff.h"

namespace dpjl {

// Floats are written with 17 significant digits ("%.17g"), so a reader
// recovers every double exactly. NaN is written as "nan".
std::string format_double(double x);
// Shortest decimal that parses back to x; used for echoed inputs and
// comment metadata.
std::string format_short(double x);

// Curve CSV: comment lines, a header row, then one row per point.
//   # spec sigma=<s> r=<r|exact> p=<p> T=<T> delta_eps=<de>
//   # accountant loss_clamp=<c> quad_tol=<tol>
//   alpha,beta            (or epsilon,delta)
struct CurveMetadata {
  MechanismSpec spec;
  PldOptions options;
};

std::string spec_comment(const CurveMetadata& meta);

void write_tradeoff_csv(const std::string& path, const TradeoffCurve& curve,
                        const CurveMetadata& meta);
void write_eps_delta_csv(const std::string& path, const Eigen::VectorXd& epsilons,
                         const Eigen::VectorXd& deltas, const CurveMetadata& meta);

struct CurveCsv {
  std::vector<std::string> comments;  // without the leading "# "
  std::string x_name;
  std::string y_name;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

// Throws std::runtime_error on IO failure or malformed rows.
CurveCsv read_curve_csv(const std::string& path);

inline constexpr const char* kMetricsHeader =
    "epoch,step,train_loss,train_acc,test_acc,clip_fraction,epoch_seconds";
std::string format_metrics_row(const MetricsRow& row);

inline constexpr const char* kDiagnosticsHeader = "sample_index,exact_norm,estimate,r,seed";

// Checkpoint: <stem>.json manifest and <stem>.bin holding param_count
// little-endian IEEE-754 doubles in segment-table order. The manifest names
// the blob by file name, relative to the manifest's directory.
inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const std::string& stem, const Model& model, const ParamVector& params);

struct Checkpoint {
  Model model;
  ParamVector params;
};

// Throws std::runtime_error on a missing file, a version or shape mismatch,
// or a blob of the wrong length.
Checkpoint load_checkpoint(const std::string& manifest_path);

// Writes `contents` to path via a temporary file in the same directory.
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace dpjl

#endif  // DPJL_IO_H_

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

#include "dpjl/io.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dpjl/config.h"

namespace dpjl {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string header_block(const CurveMetadata& meta, const char* columns) {
  char clamp[128];
  std::snprintf(clamp, sizeof clamp, "# accountant loss_clamp=%s quad_tol=%s\n",
                format_short(meta.options.loss_clamp).c_str(),
                format_short(meta.options.quad.relative_tolerance).c_str());
  return "# " + spec_comment(meta) + "\n" + clamp + columns + "\n";
}

double parse_cell(const std::string& text, const std::string& path, std::size_t line) {
  if (text == "nan") return std::nan("");
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": bad number '" + text + "'");
  }
  return v;
}

void write_le_doubles(std::ostream& out, const Eigen::VectorXd& values) {
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &values[i], sizeof bits);
    unsigned char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(bits >> (8 * k));
    out.write(reinterpret_cast<const char*>(b), 8);
  }
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_short(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string spec_comment(const CurveMetadata& meta) {
  const MechanismSpec& s = meta.spec;
  return "spec sigma=" + format_short(s.sigma) +
         " r=" + (s.exact() ? std::string("exact") : std::to_string(s.jl_dim)) +
         " p=" + format_short(s.sample_rate) + " T=" + std::to_string(s.steps) +
         " delta_eps=" + format_short(meta.options.delta_eps);
}

void write_text_file(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << contents;
    if (!out) throw std::runtime_error("write failed for " + path);
  }
  fs::rename(tmp, path);
}

void write_tradeoff_csv(const std::string& path, const TradeoffCurve& curve,
                        const CurveMetadata& meta) {
  std::string s = header_block(meta, "alpha,beta");
  for (Eigen::Index i = 0; i < curve.size(); ++i) {
    s += format_double(curve.alphas()[i]) + "," + format_double(curve.betas()[i]) + "\n";
  }
  write_text_file(path, s);
}

void write_eps_delta_csv(const std::string& path, const Eigen::VectorXd& epsilons,
                         const Eigen::VectorXd& deltas, const CurveMetadata& meta) {
  if (epsilons.size() != deltas.size()) {
    throw std::invalid_argument("write_eps_delta_csv: length mismatch");
  }
  std::string s = header_block(meta, "epsilon,delta");
  for (Eigen::Index i = 0; i < epsilons.size(); ++i) {
    s += format_double(epsilons[i]) + "," + format_double(deltas[i]) + "\n";
  }
  write_text_file(path, s);
}

CurveCsv read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CurveCsv out;
  std::vector<double> xs, ys;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      out.comments.push_back(line.size() > 2 ? line.substr(2) : "");
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected two columns");
    }
    if (!have_header) {
      out.x_name = line.substr(0, comma);
      out.y_name = line.substr(comma + 1);
      have_header = true;
      continue;
    }
    xs.push_back(parse_cell(line.substr(0, comma), path, line_no));
    ys.push_back(parse_cell(line.substr(comma + 1), path, line_no));
  }
  if (!have_header) throw std::runtime_error(path + ": missing header row");
  out.x = Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  out.y = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  return out;
}

std::string format_metrics_row(const MetricsRow& row) {
  return std::to_string(row.epoch) + "," + std::to_string(row.step) + "," +
         format_double(row.train_loss) + "," + format_double(row.train_acc) + "," +
         format_double(row.test_acc) + "," + format_double(row.clip_fraction) + "," +
         format_double(row.epoch_seconds);
}

void save_checkpoint(const std::string& stem, const Model& model, const ParamVector& params) {
  if (params.size() != model.param_count()) {
    throw std::invalid_argument("save_checkpoint: parameters do not match the model");
  }
  const std::string blob = stem + ".bin";
  json j;
  j["format"] = "dpjl-checkpoint";
  j["version"] = kCheckpointVersion;
  j["param_count"] = model.param_count();
  j["dtype"] = "float64";
  j["byte_order"] = "little-endian";
  j["blob"] = fs::path(blob).filename().string();
  j["layers"] = layers_to_json(model.layers());
  j["loss"] = loss_head_name(model.head());
  j["loss_scale"] = model.loss_scale();
  json segments = json::array();
  for (const Segment& s : model.segments()) {
    segments.push_back({{"name", s.name}, {"offset", s.offset}, {"rows", s.rows},
                        {"cols", s.cols}});
  }
  j["segments"] = segments;
  {
    std::ofstream out(blob + ".tmp", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + blob);
    write_le_doubles(out, params.values());
    if (!out) throw std::runtime_error("write failed for " + blob);
  }
  fs::rename(blob + ".tmp", blob);
  write_text_file(stem + ".json", j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open " + manifest_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(manifest_path + ": " + e.what());
  }
  if (j.value("format", "") != "dpjl-checkpoint" ||
      j.value("version", 0) != kCheckpointVersion) {
    throw std::runtime_error(manifest_path + ": not a version " +
                             std::to_string(kCheckpointVersion) + " checkpoint");
  }
  Model model(layers_from_json(j.at("layers")), parse_loss_head(j.at("loss")),
              j.at("loss_scale").get<double>());
  const auto d = j.at("param_count").get<Eigen::Index>();
  if (d != model.param_count()) {
    throw std::runtime_error(manifest_path + ": param_count " + std::to_string(d) +
                             " does not match the layers (" +
                             std::to_string(model.param_count()) + ")");
  }
  const fs::path blob = fs::path(manifest_path).parent_path() / j.at("blob").get<std::string>();
  std::ifstream bin(blob, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot open " + blob.string());
  std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(bin),
                                   std::istreambuf_iterator<char>()};
  if (bytes.size() != static_cast<std::size_t>(d) * 8) {
    throw std::runtime_error(blob.string() + ": expected " + std::to_string(d * 8) +
                             " bytes, got " + std::to_string(bytes.size()));
  }
  Eigen::VectorXd values(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= std::uint64_t{bytes[8 * i + k]} << (8 * k);
    std::memcpy(&values[i], &bits, sizeof bits);
  }
  ParamVector params(model.segments(), std::move(values));
  return {std::move(model), std::move(params)};
}

}  // namespace dpjl

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

#include "dpjl/config.h"

#include <fstream>
#include <set>
#include <sstream>

#ifndef DPJL_VERSION
#define DPJL_VERSION "unknown"
#endif

namespace dpjl {
namespace {

using nlohmann::json;

// Reads members of one JSON object and rejects members never asked for.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return fallback;
    try {
      return it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path(key) + ": expected " + type_name<T>() + ", got " +
                        it->dump());
    }
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::vector<double> schedule(const std::string& key, std::vector<double> fallback) {
    const json* v = child(key);
    if (!v) return fallback;
    if (v->is_number()) return {v->get<double>()};
    if (v->is_array() && !v->empty()) {
      std::vector<double> out;
      for (const json& x : *v) {
        if (!x.is_number()) throw ConfigError(path(key) + ": entries must be numbers");
        out.push_back(x.get<double>());
      }
      return out;
    }
    throw ConfigError(path(key) + ": expected a number or a non-empty array of numbers");
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown key " + path(it.key()));
    }
  }

 private:
  template <typename T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, bool>) return "a boolean";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else if constexpr (std::is_floating_point_v<T>) return "a number";
    else if constexpr (std::is_same_v<T, std::string>) return "a string";
    else return "a list of strings";
  }

  const json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

template <typename F>
auto wrap(const std::string& where, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

json schedule_json(const std::vector<double>& s) {
  return s.size() == 1 ? json(s[0]) : json(s);
}

DataConfig data_from_json(const json& doc) {
  DataConfig d;
  ObjectReader r(doc, "data");
  d.source = r.get<std::string>("source", d.source);
  if (d.source == "synthetic") {
    d.kind = wrap("data.kind", [&] {
      return parse_synthetic_kind(r.get<std::string>("kind", synthetic_kind_name(d.kind)));
    });
    d.n = r.get<Eigen::Index>("n", d.n);
    SyntheticParams& p = d.synthetic;
    p.num_classes = r.get("num_classes", p.num_classes);
    p.dim = r.get("dim", p.dim);
    p.margin = r.get("margin", p.margin);
    p.vocab = r.get("vocab", p.vocab);
    p.length = r.get("length", p.length);
    p.min_length = r.get("min_length", p.min_length);
    p.test_fraction = r.get("test_fraction", p.test_fraction);
  } else if (d.source == "idx") {
    d.train_images = r.get<std::string>("train_images", "");
    d.train_labels = r.get<std::string>("train_labels", "");
    d.test_images = r.get<std::string>("test_images", "");
    d.test_labels = r.get<std::string>("test_labels", "");
    d.limit = r.get<Eigen::Index>("limit", 0);
    if (d.train_images.empty() || d.train_labels.empty()) {
      throw ConfigError("data: idx source needs train_images and train_labels");
    }
    if (d.test_images.empty() != d.test_labels.empty()) {
      throw ConfigError("data: give both test_images and test_labels or neither");
    }
  } else if (d.source == "csv") {
    d.train_csv = r.get<std::string>("train", "");
    d.test_csv = r.get<std::string>("test", "");
    d.csv.feature_columns = r.get("feature_columns", d.csv.feature_columns);
    d.csv.label_column = r.get("label_column", d.csv.label_column);
    if (d.train_csv.empty()) throw ConfigError("data: csv source needs train");
  } else {
    throw ConfigError("data.source: expected synthetic, idx or csv, got " + d.source);
  }
  r.finish();
  return d;
}

json data_to_json(const DataConfig& d) {
  json j;
  j["source"] = d.source;
  if (d.source == "synthetic") {
    j["kind"] = synthetic_kind_name(d.kind);
    j["n"] = d.n;
    j["num_classes"] = d.synthetic.num_classes;
    j["dim"] = d.synthetic.dim;
    j["margin"] = d.synthetic.margin;
    j["vocab"] = d.synthetic.vocab;
    j["length"] = d.synthetic.length;
    j["min_length"] = d.synthetic.min_length;
    j["test_fraction"] = d.synthetic.test_fraction;
  } else if (d.source == "idx") {
    j["train_images"] = d.train_images;
    j["train_labels"] = d.train_labels;
    j["test_images"] = d.test_images;
    j["test_labels"] = d.test_labels;
    j["limit"] = d.limit;
  } else {
    j["train"] = d.train_csv;
    j["test"] = d.test_csv;
    j["feature_columns"] = d.csv.feature_columns;
    j["label_column"] = d.csv.label_column;
  }
  return j;
}

TrainConfig train_from_json(const json& doc) {
  TrainConfig t;
  ObjectReader r(doc, "train");
  t.optimizer = wrap("train.optimizer", [&] {
    return parse_optimizer(r.get<std::string>("optimizer", optimizer_name(t.optimizer)));
  });
  t.steps = r.get("steps", t.steps);
  t.epochs = r.get("epochs", t.epochs);
  t.learning_rates = r.schedule("learning_rate", t.learning_rates);
  t.noise_scale = r.get("noise_scale", t.noise_scale);
  t.batch_size = r.get("batch_size", t.batch_size);
  t.clip_norms = r.schedule("clip_norm", t.clip_norms);
  t.jl_dim = r.get("jl_dim", t.jl_dim);
  t.beta1 = r.get("beta1", t.beta1);
  t.beta2 = r.get("beta2", t.beta2);
  t.adam_epsilon = r.get("adam_epsilon", t.adam_epsilon);
  t.sampling = wrap("train.sampling", [&] {
    return parse_sampling(r.get<std::string>("sampling", sampling_name(t.sampling)));
  });
  t.norm_oracle = r.get("norm_oracle", t.norm_oracle);
  const std::string timing = r.get<std::string>("timing", "wall");
  if (timing != "wall" && timing != "none") {
    throw ConfigError("train.timing: expected wall or none, got " + timing);
  }
  t.timing = timing == "wall" ? TimingMode::kWall : TimingMode::kNone;
  r.finish();
  return t;
}

json train_to_json(const TrainConfig& t) {
  json j;
  j["optimizer"] = optimizer_name(t.optimizer);
  j["steps"] = t.steps;
  j["epochs"] = t.epochs;
  j["learning_rate"] = schedule_json(t.learning_rates);
  j["noise_scale"] = t.noise_scale;
  j["batch_size"] = t.batch_size;
  j["clip_norm"] = schedule_json(t.clip_norms);
  j["jl_dim"] = t.jl_dim;
  j["beta1"] = t.beta1;
  j["beta2"] = t.beta2;
  j["adam_epsilon"] = t.adam_epsilon;
  j["sampling"] = sampling_name(t.sampling);
  j["norm_oracle"] = t.norm_oracle;
  j["timing"] = t.timing == TimingMode::kWall ? "wall" : "none";
  return j;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

json layers_to_json(const std::vector<LayerSpec>& layers) {
  json out = json::array();
  for (const LayerSpec& l : layers) {
    json j;
    j["kind"] = layer_kind_name(l.kind);
    if (l.kind == LayerKind::kDense || l.kind == LayerKind::kEmbedding ||
        l.kind == LayerKind::kSimpleRnn) {
      j["in"] = l.in;
      j["out"] = l.out;
    }
    if (l.kind == LayerKind::kDense) j["bias"] = l.bias;
    out.push_back(j);
  }
  return out;
}

std::vector<LayerSpec> layers_from_json(const json& layers) {
  if (!layers.is_array() || layers.empty()) {
    throw ConfigError("model.layers: expected a non-empty array");
  }
  std::vector<LayerSpec> out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string where = "model.layers[" + std::to_string(i) + "]";
    ObjectReader r(layers[i], where);
    const LayerKind kind = wrap(where, [&] {
      return parse_layer_kind(r.get<std::string>("kind", ""));
    });
    LayerSpec l{kind, 0, 0, false};
    switch (kind) {
      case LayerKind::kDense:
        l = LayerSpec::dense(r.get("in", 0), r.get("out", 0), r.get("bias", true));
        break;
      case LayerKind::kEmbedding:
        l = LayerSpec::embedding(r.get("in", 0), r.get("out", 0));
        break;
      case LayerKind::kSimpleRnn:
        l = LayerSpec::simple_rnn(r.get("in", 0), r.get("out", 0));
        break;
      default:
        break;
    }
    r.finish();
    out.push_back(l);
  }
  return out;
}

RunConfig run_config_from_json(const json& doc) {
  RunConfig c;
  ObjectReader r(doc, "config");
  c.seed = r.get<std::uint64_t>("seed", c.seed);
  if (const json* d = r.child("data")) c.data = data_from_json(*d);
  const json* model = r.child("model");
  if (!model) throw ConfigError("config: missing model");
  {
    ObjectReader m(*model, "model");
    const json* layers = m.child("layers");
    if (!layers) throw ConfigError("model: missing layers");
    c.layers = layers_from_json(*layers);
    c.loss = wrap("model.loss", [&] {
      return parse_loss_head(m.get<std::string>("loss", loss_head_name(c.loss)));
    });
    c.loss_scale = m.get("loss_scale", c.loss_scale);
    m.finish();
  }
  if (const json* t = r.child("train")) c.train = train_from_json(*t);
  c.train.seed = c.seed;
  if (const json* a = r.child("accountant")) {
    ObjectReader ar(*a, "accountant");
    c.accountant.enabled = ar.get("enabled", c.accountant.enabled);
    c.accountant.delta = ar.get("delta", c.accountant.delta);
    c.accountant.options.delta_eps = ar.get("delta_eps", c.accountant.options.delta_eps);
    c.accountant.options.loss_clamp = ar.get("loss_clamp", c.accountant.options.loss_clamp);
    c.accountant.options.quad.relative_tolerance =
        ar.get("quad_tol", c.accountant.options.quad.relative_tolerance);
    ar.finish();
    wrap("accountant", [&] { c.accountant.options.validate(); });
    if (!(c.accountant.delta > 0.0 && c.accountant.delta < 1.0)) {
      throw ConfigError("accountant.delta must be in (0, 1)");
    }
  }
  if (const json* o = r.child("output")) {
    ObjectReader orr(*o, "output");
    c.output_dir = orr.get("dir", c.output_dir);
    orr.finish();
  }
  r.finish();
  return c;
}

json to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["data"] = data_to_json(c.data);
  j["model"] = {{"layers", layers_to_json(c.layers)},
                {"loss", loss_head_name(c.loss)},
                {"loss_scale", c.loss_scale}};
  j["train"] = train_to_json(c.train);
  j["accountant"] = {{"enabled", c.accountant.enabled},
                     {"delta", c.accountant.delta},
                     {"delta_eps", c.accountant.options.delta_eps},
                     {"loss_clamp", c.accountant.options.loss_clamp},
                     {"quad_tol", c.accountant.options.quad.relative_tolerance}};
  j["output"] = {{"dir", c.output_dir}};
  return j;
}

json load_config_json(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (doc.is_object() && doc.value("format", "") == kManifestFormat) {
    if (!doc.contains("config")) throw ConfigError(path + ": manifest without config");
    return doc["config"];
  }
  return doc;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like key=value, got " + assignment);
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw ConfigError("override key has an empty component: " + key);
    if (!node->is_object()) {
      if (!node->is_null()) throw ConfigError("override " + key + " goes through a non-object");
      *node = json::object();
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = value;
}

Model build_model(const RunConfig& config) {
  return wrap("model", [&] { return Model(config.layers, config.loss, config.loss_scale); });
}

Dataset load_dataset(const RunConfig& config) {
  const DataConfig& d = config.data;
  if (d.source == "synthetic") {
    return wrap("data", [&] { return gen_synthetic(d.kind, d.n, config.seed, d.synthetic); });
  }
  if (d.source == "idx") {
    Dataset train = load_idx(d.train_images, d.train_labels);
    if (d.limit > 0 && d.limit < train.size()) {
      std::vector<Eigen::Index> keep(d.limit);
      for (Eigen::Index i = 0; i < d.limit; ++i) keep[i] = i;
      const Batch b = train.gather(keep);
      train.features = b.features;
      train.labels = b.labels;
      train.n_train = d.limit;
    }
    if (d.test_images.empty()) return train;
    return concat_train_test(train, load_idx(d.test_images, d.test_labels));
  }
  Dataset train = load_csv(d.train_csv, d.csv);
  if (d.test_csv.empty()) return train;
  return concat_train_test(train, load_csv(d.test_csv, d.csv));
}

MechanismSpec mechanism_for(const TrainConfig& train, Eigen::Index n_train) {
  MechanismSpec spec;
  spec.sigma = train.noise_scale;
  spec.jl_dim = uses_jl(train.optimizer) && !train.norm_oracle ? train.jl_dim : kExactJl;
  spec.sample_rate = static_cast<double>(train.batch_size) / static_cast<double>(n_train);
  spec.steps = train.total_steps(n_train);
  return spec;
}

const char* code_version() { return DPJL_VERSION; }

json make_manifest(const RunConfig& config, const std::vector<std::string>& outputs) {
  json j;
  j["format"] = kManifestFormat;
  j["code_version"] = code_version();
  j["seed"] = config.seed;
  j["config"] = to_json(config);
  j["outputs"] = outputs;
  j["accountant"] = {{"delta_eps", config.accountant.options.delta_eps},
                     {"loss_clamp", config.accountant.options.loss_clamp},
                     {"quad_tol", config.accountant.options.quad.relative_tolerance},
                     {"subsampling", "poisson, rate B / N"}};
  return j;
}

}  // namespace dpjl

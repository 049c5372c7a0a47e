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

#include "dpjl/cli.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "dpjl/autodiff.h"
#include "dpjl/config.h"
#include "dpjl/io.h"
#include "dpjl/jl.h"
#include "dpjl/optim.h"
#include "dpjl/pld.h"
#include "dpjl/tradeoff.h"

namespace dpjl {
namespace {

namespace fs = std::filesystem;

constexpr int kEpsilonSweepPoints = 401;
constexpr int kBenchMinEpochs = 5;

// Config, model and data after every check that can fail on user input.
struct Prepared {
  RunConfig config;
  Model model;
  Dataset data;
};

Prepared prepare(const std::string& config_path, const std::vector<std::string>& overrides) {
  nlohmann::json doc = load_config_json(config_path);
  for (const std::string& o : overrides) apply_override(doc, o);
  RunConfig config = run_config_from_json(doc);
  Model model = build_model(config);
  Dataset data = [&] {
    try {
      return load_dataset(config);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(std::string("data: ") + e.what());
    }
  }();
  try {
    data.validate();
    if (data.n_train < 1) throw std::invalid_argument("data: no training rows");
    check_batch(model, data.slice(0, 1));
    if (model.head() == LossHead::kSoftmaxCrossEntropy &&
        data.num_classes > model.output_width()) {
      throw std::invalid_argument("data has " + std::to_string(data.num_classes) +
                                  " classes but the model emits " +
                                  std::to_string(model.output_width()) + " logits");
    }
    config.train.validate(data.n_train);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return {std::move(config), std::move(model), std::move(data)};
}

std::string tradeoff_path_for(const std::string& curve_path) {
  const fs::path p(curve_path);
  return (p.parent_path() / (p.stem().string() + ".tradeoff" + p.extension().string()))
      .string();
}

std::string describe(const MechanismSpec& s) {
  std::ostringstream o;
  o << "sigma=" << format_short(s.sigma)
    << " r=" << (s.exact() ? std::string("exact") : std::to_string(s.jl_dim))
    << " p=" << format_short(s.sample_rate) << " T=" << s.steps;
  return o.str();
}

struct AccountArgs {
  double sigma = 0.0;
  double sample_rate = 0.0;
  std::int64_t steps = 0;
  int jl_dim = 0;
  bool exact = false;
  double delta = 0.0;
  double delta_eps = PldOptions{}.delta_eps;
  std::string curve;
};

int run_account(const AccountArgs& a, std::ostream& out, std::ostream& err) {
  MechanismSpec spec;
  spec.sigma = a.sigma;
  spec.sample_rate = a.sample_rate;
  spec.steps = a.steps;
  spec.jl_dim = a.exact ? kExactJl : a.jl_dim;
  PldOptions options;
  options.delta_eps = a.delta_eps;
  try {
    if (!a.exact && a.jl_dim < 1) throw std::invalid_argument("--jl-dim must be >= 1");
    spec.validate();
    options.validate();
    if (!(a.delta > 0.0 && a.delta < 1.0)) throw std::invalid_argument("delta must be in (0, 1)");
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::optional<ComposedPair> pair;
  const AccountantResult r =
      epsilon_at_delta(spec, a.delta, options, a.curve.empty() ? nullptr : &pair);
  out << "epsilon=" << format_double(r.epsilon) << " delta=" << format_short(a.delta) << " "
      << describe(spec) << "\n";
  if (!a.curve.empty()) {
    const CurveMetadata meta{spec, options};
    const double top = std::max(1.0, 2.0 * r.epsilon);
    const Eigen::VectorXd eps = Eigen::VectorXd::LinSpaced(kEpsilonSweepPoints, 0.0, top);
    write_eps_delta_csv(a.curve, eps, delta_profile(*pair, eps), meta);
    const TradeoffCurve single =
        symmetrize(subsample_curve(jl_mechanism_curve(spec.sigma, spec.jl_dim, options.quad),
                                   spec.sample_rate));
    write_tradeoff_csv(tradeoff_path_for(a.curve), single, meta);
  }
  return kExitOk;
}

void print_accountant_note(const RunConfig& c, std::ostream& out) {
  out << "accountant: Poisson subsampling at rate B/N, both neighboring directions; "
      << "training samples " << sampling_name(c.train.sampling) << "\n";
}

int run_train(const std::string& config_path, const std::vector<std::string>& overrides,
              std::ostream& out, std::ostream& err) {
  Prepared p = prepare(config_path, overrides);
  const RunConfig& c = p.config;
  const fs::path dir(c.output_dir);
  const std::string metrics_path = (dir / "metrics.csv").string();
  const std::string stem = (dir / "model").string();
  const std::string manifest_path = (dir / "manifest.json").string();

  std::optional<AccountantResult> privacy;
  const MechanismSpec spec = mechanism_for(c.train, p.data.n_train);
  if (is_private(c.train.optimizer) && c.accountant.enabled) {
    if (c.train.noise_scale > 0.0) {
      print_accountant_note(c, out);
      privacy = epsilon_at_delta(spec, c.accountant.delta, c.accountant.options);
      out << "epsilon=" << format_double(privacy->epsilon)
          << " delta=" << format_short(c.accountant.delta) << " " << describe(spec) << "\n";
    } else {
      err << "warning: sigma = 0, no privacy guarantee; accountant skipped\n";
    }
  }

  fs::create_directories(dir);
  nlohmann::json manifest =
      make_manifest(c, {"metrics.csv", "model.json", "model.bin", "manifest.json"});
  if (privacy) {
    manifest["privacy"] = {{"epsilon", privacy->epsilon},
                           {"delta", c.accountant.delta},
                           {"mechanism", describe(spec)}};
  }
  write_text_file(manifest_path, manifest.dump(2) + "\n");

  std::ofstream metrics(metrics_path);
  if (!metrics) throw std::runtime_error("cannot write " + metrics_path);
  metrics << kMetricsHeader << "\n" << std::flush;
  TrainCallbacks callbacks;
  callbacks.on_epoch = [&](const MetricsRow& row) {
    metrics << format_metrics_row(row) << "\n" << std::flush;
    out << "epoch " << row.epoch << " step " << row.step
        << " train_loss=" << format_short(row.train_loss)
        << " test_acc=" << format_short(row.test_acc) << "\n";
  };
  const TrainResult result = train(c.train, p.model, p.data, callbacks);
  save_checkpoint(stem, p.model, result.final_params);
  out << "wrote " << metrics_path << ", " << stem << ".json, " << manifest_path << "\n";
  return kExitOk;
}

struct EstimateArgs {
  std::string config;
  std::vector<std::string> overrides;
  int r = 0;
  int trials = 0;
  Eigen::Index samples = 0;
  std::string checkpoint;
  std::string out_path;
};

int run_estimate_norms(const EstimateArgs& a, std::ostream& out) {
  if (a.r < 1 || a.trials < 1) throw ConfigError("--r and --trials must be >= 1");
  Prepared p = prepare(a.config, a.overrides);
  const RunConfig& c = p.config;
  ParamVector params;
  if (a.checkpoint.empty()) {
    RngStream init(c.seed, "init");
    params = init_params(p.model, init);
  } else {
    Checkpoint ck = load_checkpoint(a.checkpoint);
    if (ck.params.size() != p.model.param_count()) {
      throw ConfigError("checkpoint does not match the configured model");
    }
    params = std::move(ck.params);
  }
  const Eigen::Index n =
      std::min(p.data.n_train, a.samples > 0 ? a.samples : c.train.batch_size);
  const Batch batch = p.data.slice(0, n);
  const Eigen::VectorXd exact = exact_norms(p.model, params, batch);
  std::string csv = std::string(kDiagnosticsHeader) + "\n";
  for (int k = 0; k < a.trials; ++k) {
    const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(k);
    RngStream rng(seed, "estimate-norms");
    const NormEstimates e = estimate_norms(p.model, params, batch, a.r, rng);
    for (Eigen::Index i = 0; i < n; ++i) {
      csv += std::to_string(i) + "," + format_double(exact[i]) + "," +
             format_double(e.values[i]) + "," + std::to_string(a.r) + "," +
             std::to_string(seed) + "\n";
    }
  }
  const std::string path =
      a.out_path.empty() ? (fs::path(c.output_dir) / "norm_estimates.csv").string() : a.out_path;
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  write_text_file(path, csv);
  out << "wrote " << path << " (" << n << " samples x " << a.trials << " trials)\n";
  return kExitOk;
}

struct BenchArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string optimizers;
  int epochs = kBenchMinEpochs;
  std::string out_path;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

int run_bench(const BenchArgs& a, std::ostream& out) {
  if (a.epochs < kBenchMinEpochs) {
    throw ConfigError("--epochs must be >= " + std::to_string(kBenchMinEpochs));
  }
  std::vector<OptimizerKind> kinds;
  std::stringstream list(a.optimizers);
  for (std::string name; std::getline(list, name, ',');) {
    try {
      kinds.push_back(parse_optimizer(name));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (kinds.empty()) throw ConfigError("--optimizers is empty");
  Prepared p = prepare(a.config, a.overrides);
  std::string table = "optimizer,median_seconds_per_epoch,epochs,steps_per_epoch,jl_dim\n";
  for (OptimizerKind kind : kinds) {
    TrainConfig t = p.config.train;
    t.optimizer = kind;
    t.steps = 0;
    t.epochs = a.epochs + 1;  // first epoch is warmup
    t.timing = TimingMode::kWall;
    std::vector<double> per_epoch;
    double acc = 0.0;
    TrainCallbacks cb;
    cb.on_step = [&](const StepReport& r) { acc += r.seconds; };
    cb.on_epoch = [&](const MetricsRow&) {
      per_epoch.push_back(acc);
      acc = 0.0;
    };
    train(t, p.model, p.data, cb);
    per_epoch.erase(per_epoch.begin());
    std::ostringstream row;
    row << optimizer_name(kind) << "," << format_double(median(per_epoch)) << ","
        << per_epoch.size() << "," << t.steps_per_epoch(p.data.n_train) << ","
        << (uses_jl(kind) ? std::to_string(t.jl_dim) : std::string("")) << "\n";
    table += row.str();
    out << row.str() << std::flush;
  }
  if (!a.out_path.empty()) write_text_file(a.out_path, table);
  return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Differentially private training with JL norm sketches, and its accountant",
               "dpjl"};
  app.require_subcommand(1);

  std::string train_config;
  std::vector<std::string> train_overrides;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a model from a JSON config");
  train_cmd->add_option("--config", train_config, "JSON config or run manifest")->required();
  train_cmd->add_option("--override", train_overrides, "key=value, dotted keys");

  AccountArgs acc;
  CLI::App* account_cmd = app.add_subcommand("account", "Privacy of a JL or exact DP-SGD run");
  account_cmd->add_option("--sigma", acc.sigma, "Noise multiplier")->required();
  account_cmd->add_option("--sample-rate", acc.sample_rate, "Sampling rate p = B / N")
      ->required();
  account_cmd->add_option("--steps", acc.steps, "Number of steps T")->required();
  CLI::Option* jl_opt = account_cmd->add_option("--jl-dim", acc.jl_dim, "JL projections r");
  CLI::Option* exact_opt =
      account_cmd->add_flag("--exact", acc.exact, "Exact per-sample norms");
  jl_opt->excludes(exact_opt);
  account_cmd->add_option("--delta", acc.delta, "Target delta")->required();
  account_cmd->add_option("--curve", acc.curve,
                          "Write the (epsilon, delta) curve here and the single-step "
                          "tradeoff curve next to it as <stem>.tradeoff.csv");
  account_cmd->add_option("--delta-eps", acc.delta_eps, "PLD grid spacing");

  EstimateArgs est;
  CLI::App* estimate_cmd =
      app.add_subcommand("estimate-norms", "Dump JL norm estimates next to exact norms");
  estimate_cmd->add_option("--config", est.config, "JSON config")->required();
  estimate_cmd->add_option("--override", est.overrides, "key=value, dotted keys");
  estimate_cmd->add_option("--r", est.r, "JL projections")->required();
  estimate_cmd->add_option("--trials", est.trials, "Independent projection draws")->required();
  estimate_cmd->add_option("--samples", est.samples, "Training rows used (default B)");
  estimate_cmd->add_option("--checkpoint", est.checkpoint, "Checkpoint manifest");
  estimate_cmd->add_option("--out", est.out_path, "CSV path");

  BenchArgs bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Seconds per epoch for each optimizer");
  bench_cmd->add_option("--config", bench.config, "JSON config")->required();
  bench_cmd->add_option("--override", bench.overrides, "key=value, dotted keys");
  bench_cmd->add_option("--optimizers", bench.optimizers, "Comma-separated names")
      ->required();
  bench_cmd->add_option("--epochs", bench.epochs, "Timed epochs after one warmup epoch");
  bench_cmd->add_option("--out", bench.out_path, "CSV path");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*train_cmd) return run_train(train_config, train_overrides, out, err);
    if (*account_cmd) {
      if (!acc.exact && jl_opt->count() == 0) {
        err << "error: account needs --jl-dim r or --exact\n\n" << account_cmd->help();
        return kExitUsage;
      }
      return run_account(acc, out, err);
    }
    if (*estimate_cmd) return run_estimate_norms(est, out);
    if (*bench_cmd) return run_bench(bench, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace dpjl

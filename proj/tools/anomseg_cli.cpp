// Copyright 2026 The anomseg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// anomseg: score, evaluate, and render anomaly maps from exported tensors.
//
// Exit codes: 0 success, 2 configuration error, 3 data error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "anomseg/anomseg.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

// Flags shared by score/eval/render. Only flags the user actually passed
// override the config file.
struct CommonFlags {
  std::string config;
  std::optional<std::string> method;
  std::optional<double> alpha;
  std::optional<double> w;
  std::optional<double> temperature;
  std::optional<std::size_t> bins;
  std::optional<std::string> projection;
  std::optional<double> scale;
  std::optional<std::string> dataset;
  std::optional<std::string> out;
  std::vector<double> range;
  std::size_t jobs = 1;
  bool exact = false;

  void attach(CLI::App* app, bool metrics_flags) {
    app->add_option("--config", config, "JSON config file (flat keys)");
    app->add_option("--method", method,
                    "mmras | mmras_plus | msp | entropy | odin | max_logits | "
                    "mask2anomaly_logits");
    app->add_option("--alpha", alpha, "model-logit weight in the text fusion");
    app->add_option("--w", w, "ensemble weight of the fused score");
    app->add_option("--temperature", temperature, "ODIN softmax temperature");
    app->add_option("--projection", projection, "raw | cosine");
    app->add_option("--scale", scale, "cosine projection scale");
    app->add_option("--dataset", dataset, "dataset root directory");
    app->add_option("--out", out, "output directory");
    app->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    if (metrics_flags) {
      app->add_option("--bins", bins, "histogram bins for streaming metrics");
      app->add_flag("--exact", exact, "sort-based metrics instead of bins");
      app->add_option("--range", range,
                      "fixed score range LO HI (one-pass binning)")
          ->expected(2);
    }
  }

  anomseg::EvalConfig resolve() const {
    anomseg::EvalConfig cfg;
    if (!config.empty()) cfg = anomseg::load_eval_config(config);
    nlohmann::json j = nlohmann::json::object();
    if (method) j["method"] = *method;
    if (alpha) j["alpha"] = *alpha;
    if (w) j["w"] = *w;
    if (temperature) j["odin_temperature"] = *temperature;
    if (bins) j["bins"] = *bins;
    if (projection) j["projection"] = *projection;
    if (scale) j["scale"] = *scale;
    if (dataset) j["dataset_root"] = *dataset;
    if (out) j["output_dir"] = *out;
    if (exact) j["exact"] = true;
    if (range.size() == 2) j["score_range"] = range;
    return anomseg::eval_config_from_json(j, cfg);
  }
};

fs::path require_out(const anomseg::EvalConfig& cfg) {
  if (cfg.output_dir.empty()) throw anomseg::ConfigError("--out is required");
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) {
    throw anomseg::IoError("cannot create " + cfg.output_dir.string() + ": " +
                           ec.message());
  }
  return cfg.output_dir;
}

int run_score(const CommonFlags& flags) {
  const auto cfg = flags.resolve();
  cfg.check_paths();
  const fs::path out = require_out(cfg);
  const auto manifest = anomseg::load_manifest(cfg.dataset_root);
  const auto scored = anomseg::score_dataset(manifest, cfg, flags.jobs);
  for (const auto& s : scored) {
    anomseg::save_tensor(s.score, out / (s.image_id + ".npy"));
  }
  std::cout << "wrote " << scored.size() << " score maps to " << out << '\n';
  return 0;
}

int run_eval(const CommonFlags& flags) {
  const auto cfg = flags.resolve();
  cfg.check_paths();
  const auto manifest = anomseg::load_manifest(cfg.dataset_root);
  const auto report = anomseg::run_eval(manifest, cfg, flags.jobs);
  const auto j = anomseg::to_json(report);
  std::cout << j.dump(2) << '\n';
  if (!cfg.output_dir.empty()) {
    const fs::path out = require_out(cfg);
    std::ofstream(out / "report.json") << j.dump(2) << '\n';
    std::ofstream(out / "report.csv")
        << anomseg::kCsvHeader << '\n'
        << anomseg::to_csv_row(report) << '\n';
  }
  return 0;
}

int run_render(const CommonFlags& flags, const std::string& input) {
  if (!input.empty()) {
    if (!flags.out) throw anomseg::ConfigError("--out is required");
    anomseg::render_heatmap(anomseg::load_scores(input), *flags.out);
    return 0;
  }
  const auto cfg = flags.resolve();
  cfg.check_paths();
  const fs::path out = require_out(cfg);
  const auto manifest = anomseg::load_manifest(cfg.dataset_root);
  const auto scored = anomseg::score_dataset(manifest, cfg, flags.jobs);
  for (const auto& s : scored) {
    anomseg::render_heatmap(s.score, out / (s.image_id + ".png"));
  }
  std::cout << "wrote " << scored.size() << " heatmaps to " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anomaly segmentation scoring and evaluation engine"};
  app.require_subcommand(1);

  CommonFlags score_flags, eval_flags, render_flags;
  auto* score = app.add_subcommand("score", "write per-image score maps (.npy)");
  score_flags.attach(score, false);

  auto* eval = app.add_subcommand("eval", "pooled AuROC/AuPRC/FPR@95 report");
  eval_flags.attach(eval, true);

  auto* render = app.add_subcommand("render", "write heatmap PNGs");
  render_flags.attach(render, false);
  std::string render_input;
  render->add_option("--input", render_input,
                     "render a single score map file to --out instead");

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  anomseg::SynthSpec spec;
  std::uint64_t seed = 0;
  std::string synth_out;
  synth->add_option("--out", synth_out, "dataset root to create")->required();
  synth->add_option("--seed", seed, "random seed");
  synth->add_option("--images", spec.images);
  synth->add_option("--height", spec.height);
  synth->add_option("--width", spec.width);
  synth->add_option("--classes", spec.classes);
  synth->add_option("--dims", spec.dims, "feature/embedding width");
  synth->add_option("--anomaly-fraction", spec.anomaly_fraction);
  synth->add_option("--separation", spec.separation);
  synth->add_option("--noisy-fraction", spec.noisy_fraction,
                    "top band of inlier pixels with flat model logits");
  synth->add_option("--feature-noise", spec.feature_noise);

  auto* defaults = app.add_subcommand(
      "defaults", "write the per-benchmark configuration files");
  std::string defaults_out;
  defaults->add_option("--out", defaults_out, "directory for the configs")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*score) return run_score(score_flags);
    if (*eval) return run_eval(eval_flags);
    if (*render) return run_render(render_flags, render_input);
    if (*synth) {
      const auto m = anomseg::synth_fixture(seed, spec, synth_out);
      std::cout << "wrote " << m.records.size() << " images to " << synth_out
                << '\n';
      return 0;
    }
    if (*defaults) {
      for (const auto& p : anomseg::emit_benchmark_defaults(defaults_out)) {
        std::cout << p.string() << '\n';
      }
      return 0;
    }
  } catch (const anomseg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const anomseg::Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}

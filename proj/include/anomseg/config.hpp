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

// Evaluation configuration and its JSON form. The file format is a flat object;
// unknown keys and out-of-range values are rejected rather than ignored.

#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "anomseg/errors.hpp"
#include "anomseg/metrics.hpp"
#include "anomseg/scoring.hpp"
#include "anomseg/text_enhance.hpp"

namespace anomseg {

struct EvalConfig {
  ScoreMethod method = ScoreMethod::kMmrasPlus;
  FusionConfig fusion;
  EnsembleConfig ensemble;
  OdinConfig odin;
  ProjectionConfig projection;
  std::size_t bins = EvalAccumulator::kDefaultBins;
  std::filesystem::path dataset_root;
  std::filesystem::path output_dir;
  bool exact = false;  // sort-based metrics instead of the histogram
  std::optional<std::pair<double, double>> score_range;  // one-pass binning

  /// Value checks only; paths are checked by check_paths() at run start.
  void validate() const {
    fusion.validate();
    ensemble.validate();
    odin.validate();
    projection.validate();
    if (bins == 0) throw ConfigError("bins must be positive");
    if (score_range && !(score_range->first < score_range->second)) {
      throw ConfigError("score_range needs lo < hi");
    }
  }

  void check_paths() const {
    if (dataset_root.empty()) throw ConfigError("no dataset root given");
    if (!std::filesystem::is_directory(dataset_root)) {
      throw ConfigError("dataset root " + dataset_root.string() +
                        " is not a directory");
    }
  }
};

inline constexpr std::array<std::string_view, 11> kEvalConfigKeys = {
    "method", "alpha",        "w",          "odin_temperature",
    "projection", "scale",    "bins",       "dataset_root",
    "output_dir", "exact",    "score_range"};

inline nlohmann::json to_json(const EvalConfig& cfg) {
  nlohmann::json j;
  j["method"] = std::string(to_string(cfg.method));
  j["alpha"] = cfg.fusion.alpha;
  j["w"] = cfg.ensemble.w;
  j["odin_temperature"] = cfg.odin.temperature;
  j["projection"] = std::string(to_string(cfg.projection.mode));
  j["scale"] = cfg.projection.scale;
  j["bins"] = cfg.bins;
  if (!cfg.dataset_root.empty()) j["dataset_root"] = cfg.dataset_root.string();
  if (!cfg.output_dir.empty()) j["output_dir"] = cfg.output_dir.string();
  if (cfg.exact) j["exact"] = true;
  if (cfg.score_range) {
    j["score_range"] = {cfg.score_range->first, cfg.score_range->second};
  }
  return j;
}

namespace detail {

template <typename T>
T json_get(const nlohmann::json& j, std::string_view key) {
  try {
    return j.at(std::string(key)).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config key '" + std::string(key) +
                      "' has the wrong type: " + e.what());
  }
}

inline double json_number(const nlohmann::json& j, std::string_view key) {
  const auto& v = j.at(std::string(key));
  if (!v.is_number()) {
    throw ConfigError("config key '" + std::string(key) + "' must be a number");
  }
  return v.get<double>();
}

}  // namespace detail

/// Starts from defaults and overrides the keys present in `j`.
inline EvalConfig eval_config_from_json(const nlohmann::json& j,
                                        EvalConfig cfg = {}) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(kEvalConfigKeys.begin(), kEvalConfigKeys.end(), key) ==
        kEvalConfigKeys.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  if (j.contains("method")) {
    cfg.method = parse_score_method(detail::json_get<std::string>(j, "method"));
  }
  if (j.contains("alpha")) cfg.fusion.alpha = detail::json_number(j, "alpha");
  if (j.contains("w")) cfg.ensemble.w = detail::json_number(j, "w");
  if (j.contains("odin_temperature")) {
    cfg.odin.temperature = detail::json_number(j, "odin_temperature");
  }
  if (j.contains("projection")) {
    cfg.projection.mode =
        parse_projection_mode(detail::json_get<std::string>(j, "projection"));
  }
  if (j.contains("scale")) cfg.projection.scale = detail::json_number(j, "scale");
  if (j.contains("bins")) {
    const auto& b = j.at("bins");
    if (!b.is_number_integer() || b.get<std::int64_t>() <= 0) {
      throw ConfigError("config key 'bins' must be a positive integer");
    }
    cfg.bins = static_cast<std::size_t>(b.get<std::int64_t>());
  }
  if (j.contains("dataset_root")) {
    cfg.dataset_root = detail::json_get<std::string>(j, "dataset_root");
  }
  if (j.contains("output_dir")) {
    cfg.output_dir = detail::json_get<std::string>(j, "output_dir");
  }
  if (j.contains("exact")) cfg.exact = detail::json_get<bool>(j, "exact");
  if (j.contains("score_range")) {
    const auto r = detail::json_get<std::vector<double>>(j, "score_range");
    if (r.size() != 2) throw ConfigError("score_range must be [lo, hi]");
    cfg.score_range = std::make_pair(r[0], r[1]);
  }
  cfg.validate();
  return cfg;
}

inline EvalConfig load_eval_config(const std::filesystem::path& path,
                                   EvalConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return eval_config_from_json(j, std::move(base));
}

/// Named per-dataset settings used for the published benchmark runs.
struct NamedConfig {
  std::string name;
  EvalConfig config;
};

inline std::vector<NamedConfig> benchmark_defaults() {
  const auto make = [](std::string name, double alpha, double w) {
    EvalConfig cfg;
    cfg.method = ScoreMethod::kMmrasPlus;
    cfg.fusion.alpha = alpha;
    cfg.ensemble.w = w;
    cfg.odin.temperature = 3.0;
    return NamedConfig{std::move(name), cfg};
  };
  return {
      make("roadanomaly", 0.99, 0.7),
      make("smiyc_ra21", 0.9999999, 0.7),
      make("smiyc_ro21", 0.9999999, 0.7),
      make("fs_static", 0.98, 0.7),
      make("fs_lost_and_found", 0.7, 0.9),
  };
}

/// Writes one `<name>.json` per dataset into `dir`; returns the paths.
inline std::vector<std::filesystem::path> emit_benchmark_defaults(
    const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::vector<std::filesystem::path> written;
  for (const auto& [name, cfg] : benchmark_defaults()) {
    const auto path = dir / (name + ".json");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << to_json(cfg).dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
    written.push_back(path);
  }
  return written;
}

}  // namespace anomseg

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

// Per-pixel anomaly scores. Every function returns a map where a higher value
// means "more anomalous". Nothing is clamped: max-logit style scores can be
// negative or exceed 1 when logits do.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anomseg/errors.hpp"
#include "anomseg/tensor.hpp"

namespace anomseg {

/// Weight of the fused-logit score in the two-score ensemble.
struct EnsembleConfig {
  double w = 0.7;

  void validate() const {
    if (!(w >= 0.0 && w <= 1.0)) {
      throw ConfigError("ensemble weight w must lie in [0, 1], got " +
                        std::to_string(w));
    }
  }
};

struct OdinConfig {
  double temperature = 3.0;

  void validate() const {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
      throw ConfigError("ODIN temperature must be positive, got " +
                        std::to_string(temperature));
    }
  }
};

namespace detail {

struct ChannelMax {
  std::vector<float> value;
  std::vector<std::size_t> index;  // first channel attaining the max
};

inline ChannelMax channel_max(const LogitsMap& l) {
  const std::size_t pixels = l.pixels();
  ChannelMax out{std::vector<float>(l.channel(0).begin(), l.channel(0).end()),
                 std::vector<std::size_t>(pixels, 0)};
  for (std::size_t c = 1; c < l.classes(); ++c) {
    const auto plane = l.channel(c);
    for (std::size_t p = 0; p < pixels; ++p) {
      if (plane[p] > out.value[p]) {
        out.value[p] = plane[p];
        out.index[p] = c;
      }
    }
  }
  return out;
}

inline AnomalyScoreMap one_minus_max(const LogitsMap& l) {
  const std::size_t pixels = l.pixels();
  std::vector<float> best(l.channel(0).begin(), l.channel(0).end());
  for (std::size_t c = 1; c < l.classes(); ++c) {
    const auto plane = l.channel(c);
    for (std::size_t p = 0; p < pixels; ++p) {
      best[p] = std::max(best[p], plane[p]);
    }
  }
  std::vector<double> out(pixels);
  for (std::size_t p = 0; p < pixels; ++p) out[p] = 1.0 - double{best[p]};
  return AnomalyScoreMap(l.height(), l.width(), std::move(out));
}

// Softmax statistics of l / temperature, shifted by the per-pixel max so every
// exponent is <= 0. `rest` sums exp over all channels except the argmax, so
// the max softmax probability is 1 / (1 + rest) with no cancellation.
struct SoftmaxStats {
  std::vector<double> rest;
  std::vector<double> weighted;  // sum_c exp(z_c) * z_c
};

inline SoftmaxStats softmax_stats(const LogitsMap& l, double temperature,
                                  bool want_weighted) {
  const std::size_t pixels = l.pixels();
  const ChannelMax mx = channel_max(l);
  SoftmaxStats s{std::vector<double>(pixels, 0.0), {}};
  if (want_weighted) s.weighted.assign(pixels, 0.0);
  for (std::size_t c = 0; c < l.classes(); ++c) {
    const auto plane = l.channel(c);
    for (std::size_t p = 0; p < pixels; ++p) {
      if (mx.index[p] == c) continue;
      const double z = (double{plane[p]} - double{mx.value[p]}) / temperature;
      const double e = std::exp(z);
      s.rest[p] += e;
      if (want_weighted) s.weighted[p] += e * z;
    }
  }
  return s;
}

}  // namespace detail

/// 1 - max_c l_c on fused logits.
inline AnomalyScoreMap mmras(const LogitsMap& fused) {
  return detail::one_minus_max(fused);
}

/// Same formula as mmras, applied to the unfused model logits. Any strictly
/// increasing transform of -max (e.g. this 1 - max form) ranks pixels
/// identically.
inline AnomalyScoreMap max_logits(const LogitsMap& model) {
  return detail::one_minus_max(model);
}

/// w * mmras(fused) + (1 - w) * mmras(model).
inline AnomalyScoreMap mmras_plus(const LogitsMap& fused,
                                  const LogitsMap& model,
                                  const EnsembleConfig& cfg) {
  cfg.validate();
  if (fused.shape() != model.shape()) {
    throw ShapeError("fused and model logits differ in shape", fused.shape(),
                     model.shape());
  }
  const AnomalyScoreMap a = mmras(fused);
  const AnomalyScoreMap b = mmras(model);
  const double wa = cfg.w;
  const double wb = 1.0 - cfg.w;
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = wa * a.values()[i] + wb * b.values()[i];
  }
  return AnomalyScoreMap(a.height(), a.width(), std::move(out));
}

/// 1 - max softmax(l / T). Only temperature scaling; no input perturbation.
inline AnomalyScoreMap odin(const LogitsMap& l, const OdinConfig& cfg) {
  cfg.validate();
  const auto s = detail::softmax_stats(l, cfg.temperature, false);
  std::vector<double> out(s.rest.size());
  for (std::size_t p = 0; p < out.size(); ++p) {
    out[p] = s.rest[p] / (1.0 + s.rest[p]);
  }
  return AnomalyScoreMap(l.height(), l.width(), std::move(out));
}

/// 1 - max softmax(l).
inline AnomalyScoreMap msp(const LogitsMap& l) {
  return odin(l, OdinConfig{1.0});
}

/// Shannon entropy of softmax(l) in nats, not normalized by ln C.
inline AnomalyScoreMap entropy(const LogitsMap& l) {
  const auto s = detail::softmax_stats(l, 1.0, true);
  std::vector<double> out(s.rest.size());
  for (std::size_t p = 0; p < out.size(); ++p) {
    // H = log S - sum_c p_c z_c with S = 1 + rest and z_c <= 0.
    const double total = 1.0 + s.rest[p];
    out[p] = std::log1p(s.rest[p]) - s.weighted[p] / total;
  }
  return AnomalyScoreMap(l.height(), l.width(), std::move(out));
}

enum class ScoreMethod {
  kMmras,
  kMmrasPlus,
  kMsp,
  kEntropy,
  kOdin,
  kMaxLogits,
  kMask2AnomalyLogits,  // max_logits on the model logits
};

inline constexpr std::array<std::pair<ScoreMethod, std::string_view>, 7>
    kScoreMethodNames = {{
        {ScoreMethod::kMmras, "mmras"},
        {ScoreMethod::kMmrasPlus, "mmras_plus"},
        {ScoreMethod::kMsp, "msp"},
        {ScoreMethod::kEntropy, "entropy"},
        {ScoreMethod::kOdin, "odin"},
        {ScoreMethod::kMaxLogits, "max_logits"},
        {ScoreMethod::kMask2AnomalyLogits, "mask2anomaly_logits"},
    }};

inline std::string_view to_string(ScoreMethod m) {
  for (const auto& [method, name] : kScoreMethodNames) {
    if (method == m) return name;
  }
  return "unknown";
}

inline ScoreMethod parse_score_method(std::string_view name) {
  for (const auto& [method, n] : kScoreMethodNames) {
    if (n == name) return method;
  }
  std::string known;
  for (const auto& [method, n] : kScoreMethodNames) {
    if (!known.empty()) known += ", ";
    known += n;
  }
  throw ConfigError("unknown score method '" + std::string(name) +
                    "' (expected one of " + known + ")");
}

/// True for the methods that consume text-enhanced logits.
inline bool needs_text(ScoreMethod m) {
  return m == ScoreMethod::kMmras || m == ScoreMethod::kMmrasPlus;
}

}  // namespace anomseg

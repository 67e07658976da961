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

// Text enhancement: backbone features are projected through the class text
// embeddings (a 1x1 convolution whose weights are the embedding rows) and the
// resulting text-image logits are blended with the segmentation model's own
// logits.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "anomseg/errors.hpp"
#include "anomseg/tensor.hpp"

namespace anomseg {

enum class ProjectionMode {
  kRaw,     // plain dot product with the embedding rows
  kCosine,  // dot product of unit vectors, times `scale`
};

inline std::string_view to_string(ProjectionMode m) {
  return m == ProjectionMode::kRaw ? "raw" : "cosine";
}

inline ProjectionMode parse_projection_mode(std::string_view s) {
  if (s == "raw") return ProjectionMode::kRaw;
  if (s == "cosine") return ProjectionMode::kCosine;
  throw ConfigError("unknown projection mode '" + std::string(s) +
                    "' (expected raw or cosine)");
}

struct ProjectionConfig {
  ProjectionMode mode = ProjectionMode::kCosine;
  double scale = 100.0;  // cosine mode only

  void validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      throw ConfigError("projection scale must be a positive finite number, got " +
                        std::to_string(scale));
    }
  }
};

/// Weight of the model logits in the blend; 1 - alpha goes to the text logits.
struct FusionConfig {
  double alpha = 0.99;

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
      throw ConfigError("alpha must lie in [0, 1], got " +
                        std::to_string(alpha));
    }
  }
};

/// Text-image logits: out[c, p] = <t_c, f_p> (raw) or
/// scale * <t_c / |t_c|, f_p / |f_p|> (cosine). In cosine mode a pixel whose
/// feature vector is all zeros scores 0 in every channel.
inline LogitsMap project_text(const FeatureMap& features,
                              const EmbeddingMatrix& embeddings,
                              const ProjectionConfig& cfg = {}) {
  cfg.validate();
  const std::size_t n_dims = features.channels();
  if (embeddings.dims() != n_dims) {
    throw ShapeError("embedding width does not match feature channels",
                     embeddings.shape(), features.shape());
  }
  const std::size_t n_classes = embeddings.classes();
  const std::size_t pixels = features.pixels();

  std::vector<double> inv_pixel_norm;
  if (cfg.mode == ProjectionMode::kCosine) {
    std::vector<double> norm2(pixels, 0.0);
    for (std::size_t n = 0; n < n_dims; ++n) {
      const auto plane = features.channel(n);
      for (std::size_t p = 0; p < pixels; ++p) {
        const double v = plane[p];
        norm2[p] += v * v;
      }
    }
    inv_pixel_norm.resize(pixels);
    std::transform(norm2.begin(), norm2.end(), inv_pixel_norm.begin(),
                   [](double s) { return s > 0.0 ? 1.0 / std::sqrt(s) : 0.0; });
  }

  Tensor<float> out({n_classes, features.height(), features.width()});
  std::vector<double> acc(pixels);
  for (std::size_t c = 0; c < n_classes; ++c) {
    const auto row = embeddings.row(c);
    double row_scale = 1.0;
    if (cfg.mode == ProjectionMode::kCosine) {
      double s = 0.0;
      for (float x : row) s += double{x} * double{x};
      if (s == 0.0) {
        throw ValidationError("embedding row " + std::to_string(c) +
                              " is all zeros; cosine projection undefined");
      }
      row_scale = 1.0 / std::sqrt(s);
    }

    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t n = 0; n < n_dims; ++n) {
      const double weight = double{row[n]} * row_scale;
      if (weight == 0.0) continue;
      const auto plane = features.channel(n);
      for (std::size_t p = 0; p < pixels; ++p) acc[p] += weight * plane[p];
    }

    float* dst = out.values().data() + c * pixels;
    if (cfg.mode == ProjectionMode::kRaw) {
      for (std::size_t p = 0; p < pixels; ++p) {
        dst[p] = static_cast<float>(acc[p]);
      }
    } else {
      for (std::size_t p = 0; p < pixels; ++p) {
        const double cosine = std::clamp(acc[p] * inv_pixel_norm[p], -1.0, 1.0);
        dst[p] = static_cast<float>(cfg.scale * cosine);
      }
    }
  }
  return LogitsMap(std::move(out));
}

/// alpha * model + (1 - alpha) * text, elementwise.
inline LogitsMap fuse_logits(const LogitsMap& model, const LogitsMap& text,
                             const FusionConfig& cfg) {
  cfg.validate();
  if (model.shape() != text.shape()) {
    throw ShapeError("model and text logits differ in shape", model.shape(),
                     text.shape());
  }
  const double a = cfg.alpha;
  const double b = 1.0 - cfg.alpha;
  const auto m = model.values();
  const auto t = text.values();
  std::vector<float> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    out[i] = static_cast<float>(a * m[i] + b * t[i]);
  }
  return LogitsMap(Tensor<float>(model.shape(), std::move(out)));
}

}  // namespace anomseg

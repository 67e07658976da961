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

// Synthetic on-disk datasets with a known structure:
//
//  * A 2-pixel ignore border (label 255) around every mask.
//  * One rectangular anomaly region per image.
//  * Inlier pixels carry a dominant class (constant over 8x8 blocks): its
//    model logit is raised by `separation` above unit Gaussian noise.
//    Anomaly pixels get noise only (flat logits).
//  * Optionally a "noisy" inlier band along the top of the image where the
//    model logits are flat as well, so the model alone cannot tell it from an
//    anomaly.
//  * Features point along the text embedding of the pixel's class (plus
//    noise) on every inlier pixel, including the noisy band; anomaly pixels
//    get features in a random direction.
//
// Generation is deterministic for a given seed and spec.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "anomseg/errors.hpp"
#include "anomseg/io.hpp"
#include "anomseg/manifest.hpp"
#include "anomseg/tensor.hpp"

namespace anomseg {

struct SynthSpec {
  std::size_t images = 4;
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t classes = 19;
  std::size_t dims = 64;
  double anomaly_fraction = 0.1;  // of the non-border area
  double separation = 8.0;        // dominant-logit gap on inlier pixels
  double noisy_fraction = 0.0;    // top band of flat-logit inlier pixels
  double feature_noise = 0.5;     // expected norm of the feature noise

  void validate() const {
    if (images == 0 || height == 0 || width == 0 || dims == 0) {
      throw ConfigError("synthetic dataset dimensions must be >= 1");
    }
    if (classes < 2) throw ConfigError("synthetic datasets need >= 2 classes");
    if (!(anomaly_fraction > 0.0 && anomaly_fraction < 1.0)) {
      throw ConfigError("anomaly_fraction must lie in (0, 1)");
    }
    if (!(noisy_fraction >= 0.0 && noisy_fraction < 1.0)) {
      throw ConfigError("noisy_fraction must lie in [0, 1)");
    }
    if (!(separation >= 0.0) || !(feature_noise >= 0.0)) {
      throw ConfigError("separation and feature_noise must be non-negative");
    }
  }
};

inline constexpr std::size_t kIgnoreBorder = 2;
inline constexpr std::size_t kClassBlock = 8;

namespace detail {

// seed_seq consumes 32-bit words, so the 64-bit seed is split.
inline std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream,
                                  std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), purpose};
  return std::mt19937_64(seq);
}

struct SynthImage {
  Tensor<float> logits;
  Tensor<float> features;
  Tensor<std::uint8_t> mask;
};

inline SynthImage synth_image(const SynthSpec& spec,
                              const Tensor<float>& embeddings,
                              std::mt19937_64& rng) {
  const std::size_t H = spec.height, W = spec.width;
  const std::size_t C = spec.classes, N = spec.dims;
  const std::size_t P = H * W;
  std::normal_distribution<float> gauss(0.0f, 1.0f);

  // Interior (non-border) window; degenerate for tiny images.
  const std::size_t y0 = std::min(kIgnoreBorder, H), x0 = std::min(kIgnoreBorder, W);
  const std::size_t y1 = H > 2 * kIgnoreBorder ? H - kIgnoreBorder : y0;
  const std::size_t x1 = W > 2 * kIgnoreBorder ? W - kIgnoreBorder : x0;
  const std::size_t ih = y1 - y0, iw = x1 - x0;

  Tensor<std::uint8_t> mask({H, W}, label::kIgnore);
  std::vector<bool> noisy(P, false);
  if (ih > 0 && iw > 0) {
    const auto band = static_cast<std::size_t>(
        std::llround(spec.noisy_fraction * static_cast<double>(ih)));
    for (std::size_t y = y0; y < y1; ++y) {
      for (std::size_t x = x0; x < x1; ++x) {
        mask.at(y, x) = label::kInlier;
        noisy[y * W + x] = y < y0 + band;
      }
    }
    // Anomaly rectangle below the noisy band when there is room.
    const std::size_t free_top = band < ih ? y0 + band : y0;
    const std::size_t free_h = y1 - free_top;
    const double area = spec.anomaly_fraction * static_cast<double>(ih * iw);
    std::size_t ah = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(std::sqrt(area))), 1, free_h);
    std::size_t aw = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(area / static_cast<double>(ah))),
        1, iw);
    if (ah * aw >= ih * iw && ih * iw > 1) {
      // Keep at least one inlier pixel.
      if (aw > 1) --aw; else --ah;
    }
    std::uniform_int_distribution<std::size_t> py(free_top, y1 - ah);
    std::uniform_int_distribution<std::size_t> px(x0, x1 - aw);
    const std::size_t ay = py(rng), ax = px(rng);
    for (std::size_t y = ay; y < ay + ah; ++y) {
      for (std::size_t x = ax; x < ax + aw; ++x) {
        mask.at(y, x) = label::kAnomaly;
        noisy[y * W + x] = false;
      }
    }
  }

  // Dominant class per block.
  const std::size_t by = (H + kClassBlock - 1) / kClassBlock;
  const std::size_t bx = (W + kClassBlock - 1) / kClassBlock;
  std::uniform_int_distribution<std::size_t> pick(0, C - 1);
  std::vector<std::size_t> block_class(by * bx);
  for (auto& c : block_class) c = pick(rng);
  const auto class_of = [&](std::size_t p) {
    return block_class[(p / W / kClassBlock) * bx + (p % W) / kClassBlock];
  };

  Tensor<float> logits({C, H, W});
  for (auto& v : logits.values()) v = gauss(rng);
  for (std::size_t p = 0; p < P; ++p) {
    if (mask[p] == label::kAnomaly || noisy[p]) continue;
    logits[class_of(p) * P + p] += static_cast<float>(spec.separation);
  }

  Tensor<float> features({N, H, W});
  const float noise_sd =
      static_cast<float>(spec.feature_noise / std::sqrt(static_cast<double>(N)));
  const float random_sd = 1.0f / std::sqrt(static_cast<float>(N));
  for (std::size_t p = 0; p < P; ++p) {
    if (mask[p] == label::kAnomaly) {
      for (std::size_t n = 0; n < N; ++n) features[n * P + p] = random_sd * gauss(rng);
    } else {
      const std::size_t c = class_of(p);
      for (std::size_t n = 0; n < N; ++n) {
        features[n * P + p] = embeddings.at(c, n) + noise_sd * gauss(rng);
      }
    }
  }
  return {std::move(logits), std::move(features), std::move(mask)};
}

}  // namespace detail

/// Writes a complete dataset under `root` and returns its manifest.
inline DatasetManifest synth_fixture(std::uint64_t seed, const SynthSpec& spec,
                                     const std::filesystem::path& root) {
  spec.validate();
  std::error_code ec;
  for (const char* sub : {"logits", "features", "masks"}) {
    std::filesystem::create_directories(root / sub, ec);
    if (ec) throw IoError("cannot create " + (root / sub).string() + ": " +
                          ec.message());
  }

  // Unit-norm random class embeddings.
  std::mt19937_64 text_rng = detail::seeded_rng(seed, 0, 0);
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  Tensor<float> embeddings({spec.classes, spec.dims});
  for (std::size_t c = 0; c < spec.classes; ++c) {
    double norm2 = 0.0;
    for (std::size_t n = 0; n < spec.dims; ++n) {
      const float v = gauss(text_rng);
      embeddings.at(c, n) = v;
      norm2 += double{v} * v;
    }
    const double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 1.0;
    for (std::size_t n = 0; n < spec.dims; ++n) {
      embeddings.at(c, n) = static_cast<float>(embeddings.at(c, n) * inv);
    }
  }

  DatasetManifest m;
  m.root = root;
  m.dataset = "synthetic";
  m.embeddings = root / kEmbeddingsFile;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    names.push_back("class_" + std::to_string(c));
  }
  m.class_names = names;
  m.metadata = {
      {"generator", "synth"},
      {"seed", seed},
      {"images", spec.images},
      {"height", spec.height},
      {"width", spec.width},
      {"classes", spec.classes},
      {"dims", spec.dims},
      {"anomaly_fraction", spec.anomaly_fraction},
      {"separation", spec.separation},
      {"noisy_fraction", spec.noisy_fraction},
      {"feature_noise", spec.feature_noise},
  };
  save_tensor(EmbeddingMatrix(embeddings, names), m.embeddings);

  for (std::size_t i = 0; i < spec.images; ++i) {
    std::mt19937_64 rng = detail::seeded_rng(seed, i, 1);
    const auto img = detail::synth_image(spec, embeddings, rng);

    char id[32];
    std::snprintf(id, sizeof id, "img_%04zu", i);
    ManifestRecord rec;
    rec.image_id = id;
    rec.logits = root / "logits" / (rec.image_id + ".npy");
    rec.features = root / "features" / (rec.image_id + ".npy");
    rec.mask = root / "masks" / (rec.image_id + ".npy");
    save_tensor(img.logits, rec.logits);
    save_tensor(img.features, *rec.features);
    save_tensor(img.mask, rec.mask);
    m.records.push_back(std::move(rec));
  }
  save_manifest(m);
  return m;
}

}  // namespace anomseg

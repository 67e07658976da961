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

// Typed loading and saving of the domain tensors. The element type stored in
// the file must match the requested kind exactly; nothing is reinterpreted.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "anomseg/errors.hpp"
#include "anomseg/npy.hpp"
#include "anomseg/png.hpp"
#include "anomseg/tensor.hpp"

namespace anomseg {

using npy::AnyTensor;

/// Loads any supported NPY file; shape and dtype come from the header alone.
inline AnyTensor load_tensor(const std::filesystem::path& path) {
  return npy::read(path);
}

namespace detail {

template <typename T>
Tensor<T> load_as(const std::filesystem::path& path, const char* kind) {
  AnyTensor any = load_tensor(path);
  if (auto* t = std::get_if<Tensor<T>>(&any)) return std::move(*t);
  throw FormatError(path.string() + ": " + kind + " requires element type " +
                    (std::is_same_v<T, float> ? "'<f4'" : "'|u1'"));
}

// Re-labels a domain-invariant failure with the offending file.
template <typename Fn>
auto with_path(const std::filesystem::path& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace detail

inline LogitsMap load_logits(const std::filesystem::path& path) {
  return detail::with_path(path, [&] {
    return LogitsMap(detail::load_as<float>(path, "LogitsMap"));
  });
}

inline FeatureMap load_features(const std::filesystem::path& path) {
  return detail::with_path(path, [&] {
    return FeatureMap(detail::load_as<float>(path, "FeatureMap"));
  });
}

inline EmbeddingMatrix load_embeddings(
    const std::filesystem::path& path,
    std::optional<std::vector<std::string>> class_names = {}) {
  return detail::with_path(path, [&] {
    return EmbeddingMatrix(detail::load_as<float>(path, "EmbeddingMatrix"),
                           std::move(class_names));
  });
}

/// Score maps are stored as float32 and widened exactly to double.
inline AnomalyScoreMap load_scores(const std::filesystem::path& path) {
  return detail::with_path(path, [&] {
    const Tensor<float> t = detail::load_as<float>(path, "AnomalyScoreMap");
    const auto v = t.values();
    return AnomalyScoreMap(
        Tensor<double>(t.shape(), std::vector<double>(v.begin(), v.end())));
  });
}

/// Accepts '|u1' NPY or 8-bit grayscale PNG, chosen by extension.
inline LabelMask load_mask(const std::filesystem::path& path) {
  return detail::with_path(path, [&] {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") {
      png::Image img = png::read(path);
      if (img.channels != 1) {
        throw FormatError(path.string() +
                          ": label mask PNG must be 8-bit grayscale");
      }
      return LabelMask(img.height, img.width, std::move(img.pixels));
    }
    return LabelMask(detail::load_as<std::uint8_t>(path, "LabelMask"));
  });
}

template <typename T>
void save_tensor(const Tensor<T>& t, const std::filesystem::path& path) {
  npy::write(path, t);
}

template <typename Grid>
  requires requires(const Grid& g) { g.tensor(); }
void save_tensor(const Grid& grid, const std::filesystem::path& path) {
  npy::write(path, grid.tensor());
}

/// Narrows to float32. Scores outside the float range are rejected.
inline void save_tensor(const AnomalyScoreMap& score,
                        const std::filesystem::path& path) {
  const auto v = score.values();
  std::vector<float> narrowed(v.begin(), v.end());
  for (float x : narrowed) {
    if (!std::isfinite(x)) {
      throw ValidationError("score value does not fit in float32");
    }
  }
  npy::write(path, Tensor<float>(score.shape(), std::move(narrowed)));
}

}  // namespace anomseg

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

// Dense containers for the engine's data. All grids are row-major with the
// leftmost axis slowest, so a C×H×W map stores channel planes back to back.
// Domain types (LogitsMap, FeatureMap, ...) validate once at construction and
// are immutable afterwards.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "anomseg/errors.hpp"

namespace anomseg {

inline std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>{});
}

/// Owning n-dimensional array. No invariants beyond size == prod(shape).
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T{})
      : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

  Tensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_)) {
      throw ShapeError("payload size does not match shape", shape_,
                       Shape{data_.size()});
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

  std::span<const T> values() const noexcept { return data_; }
  std::span<T> values() noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  T& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  const T& at(std::size_t i, std::size_t j) const {
    return data_[i * shape_[1] + j];
  }
  T& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  const T& at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

namespace detail {

template <typename T>
void require_rank(const Tensor<T>& t, std::size_t rank, const char* kind) {
  if (t.rank() != rank) {
    throw ValidationError(std::string(kind) + " must have rank " +
                          std::to_string(rank) + ", got shape " +
                          shape_to_string(t.shape()));
  }
  for (std::size_t d : t.shape()) {
    if (d == 0) {
      throw ValidationError(std::string(kind) + " has an empty axis: " +
                            shape_to_string(t.shape()));
    }
  }
}

template <typename T>
void require_finite(const Tensor<T>& t, const char* kind) {
  const auto v = t.values();
  const auto bad = std::find_if(v.begin(), v.end(),
                                [](T x) { return !std::isfinite(x); });
  if (bad != v.end()) {
    throw ValidationError(std::string(kind) + " contains a non-finite value at "
                          "flat index " +
                          std::to_string(bad - v.begin()));
  }
}

/// Shared read-only surface of the validated grid types.
template <typename T, std::size_t Rank>
class ValidatedGrid {
 public:
  using value_type = T;
  static constexpr std::size_t kRank = Rank;

  const Tensor<T>& tensor() const noexcept { return tensor_; }
  const Shape& shape() const noexcept { return tensor_.shape(); }
  std::size_t size() const noexcept { return tensor_.size(); }
  std::span<const T> values() const noexcept { return tensor_.values(); }

  friend bool operator==(const ValidatedGrid&, const ValidatedGrid&) = default;

 protected:
  ValidatedGrid() = default;
  explicit ValidatedGrid(Tensor<T> t) : tensor_(std::move(t)) {}
  Tensor<T> tensor_;
};

}  // namespace detail

/// Per-pixel class logits, C×H×W with C ≥ 2.
class LogitsMap : public detail::ValidatedGrid<float, 3> {
 public:
  explicit LogitsMap(Tensor<float> t) : ValidatedGrid(std::move(t)) {
    detail::require_rank(tensor_, 3, "LogitsMap");
    if (classes() < 2) {
      throw ValidationError("LogitsMap needs at least two class channels, got " +
                            std::to_string(classes()));
    }
    detail::require_finite(tensor_, "LogitsMap");
  }

  std::size_t classes() const { return tensor_.dim(0); }
  std::size_t height() const { return tensor_.dim(1); }
  std::size_t width() const { return tensor_.dim(2); }
  std::size_t pixels() const { return height() * width(); }

  /// Channel plane c as a flat H*W span.
  std::span<const float> channel(std::size_t c) const {
    return values().subspan(c * pixels(), pixels());
  }
  float at(std::size_t c, std::size_t h, std::size_t w) const {
    return tensor_.at(c, h, w);
  }
};

/// Backbone feature volume, N×H×W.
class FeatureMap : public detail::ValidatedGrid<float, 3> {
 public:
  explicit FeatureMap(Tensor<float> t) : ValidatedGrid(std::move(t)) {
    detail::require_rank(tensor_, 3, "FeatureMap");
    detail::require_finite(tensor_, "FeatureMap");
  }

  std::size_t channels() const { return tensor_.dim(0); }
  std::size_t height() const { return tensor_.dim(1); }
  std::size_t width() const { return tensor_.dim(2); }
  std::size_t pixels() const { return height() * width(); }

  std::span<const float> channel(std::size_t n) const {
    return values().subspan(n * pixels(), pixels());
  }
};

/// Text embeddings, one C×N row per class. Zero rows are rejected.
class EmbeddingMatrix : public detail::ValidatedGrid<float, 2> {
 public:
  explicit EmbeddingMatrix(Tensor<float> t,
                           std::optional<std::vector<std::string>> names = {})
      : ValidatedGrid(std::move(t)), class_names_(std::move(names)) {
    detail::require_rank(tensor_, 2, "EmbeddingMatrix");
    detail::require_finite(tensor_, "EmbeddingMatrix");
    if (class_names_ && class_names_->size() != classes()) {
      throw ValidationError("EmbeddingMatrix has " + std::to_string(classes()) +
                            " rows but " +
                            std::to_string(class_names_->size()) +
                            " class names");
    }
    for (std::size_t c = 0; c < classes(); ++c) {
      const auto r = row(c);
      if (std::all_of(r.begin(), r.end(), [](float x) { return x == 0.0f; })) {
        throw ValidationError("EmbeddingMatrix row " + std::to_string(c) +
                              " is all zeros");
      }
    }
  }

  std::size_t classes() const { return tensor_.dim(0); }
  std::size_t dims() const { return tensor_.dim(1); }
  std::span<const float> row(std::size_t c) const {
    return values().subspan(c * dims(), dims());
  }
  const std::optional<std::vector<std::string>>& class_names() const {
    return class_names_;
  }

 private:
  std::optional<std::vector<std::string>> class_names_;
};

/// Per-pixel anomaly score, H×W. Higher means more anomalous.
///
/// Held in double precision in memory; files carry 32-bit reals.
class AnomalyScoreMap : public detail::ValidatedGrid<double, 2> {
 public:
  explicit AnomalyScoreMap(Tensor<double> t) : ValidatedGrid(std::move(t)) {
    detail::require_rank(tensor_, 2, "AnomalyScoreMap");
    detail::require_finite(tensor_, "AnomalyScoreMap");
  }
  AnomalyScoreMap(std::size_t height, std::size_t width,
                  std::vector<double> data)
      : AnomalyScoreMap(Tensor<double>({height, width}, std::move(data))) {}

  std::size_t height() const { return tensor_.dim(0); }
  std::size_t width() const { return tensor_.dim(1); }
  double at(std::size_t h, std::size_t w) const { return tensor_.at(h, w); }
};

namespace label {
inline constexpr std::uint8_t kInlier = 0;
inline constexpr std::uint8_t kAnomaly = 1;
inline constexpr std::uint8_t kIgnore = 255;
}  // namespace label

/// Ground truth, H×W with values in {0 = inlier, 1 = anomaly, 255 = ignore}.
class LabelMask : public detail::ValidatedGrid<std::uint8_t, 2> {
 public:
  explicit LabelMask(Tensor<std::uint8_t> t) : ValidatedGrid(std::move(t)) {
    detail::require_rank(tensor_, 2, "LabelMask");
    const auto v = values();
    const auto bad = std::find_if(v.begin(), v.end(), [](std::uint8_t x) {
      return x != label::kInlier && x != label::kAnomaly &&
             x != label::kIgnore;
    });
    if (bad != v.end()) {
      throw ValidationError("LabelMask value " + std::to_string(*bad) +
                            " at flat index " +
                            std::to_string(bad - v.begin()) +
                            " is not one of {0, 1, 255}");
    }
  }
  LabelMask(std::size_t height, std::size_t width,
            std::vector<std::uint8_t> data)
      : LabelMask(Tensor<std::uint8_t>({height, width}, std::move(data))) {}

  std::size_t height() const { return tensor_.dim(0); }
  std::size_t width() const { return tensor_.dim(1); }
  std::uint8_t at(std::size_t h, std::size_t w) const {
    return tensor_.at(h, w);
  }
};

/// Succeeds iff score and mask cover the same H×W grid.
inline void validate_pair(const AnomalyScoreMap& score, const LabelMask& mask) {
  if (score.shape() != mask.shape()) {
    throw ShapeError("score map and label mask differ in shape", score.shape(),
                     mask.shape());
  }
}

}  // namespace anomseg

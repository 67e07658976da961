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

// Pixel-level binary detection metrics with anomaly (label 1) as the positive
// class and larger scores meaning "more anomalous":
//
//   AuROC   trapezoidal area under TPR(FPR), each distinct score one step.
//   AuPRC   step-wise average precision, sum_k (R_k - R_{k-1}) * P_k.
//   FPR@95  FPR at the first descending threshold with TPR >= 0.95.
//
// exact_metrics() sorts every score. EvalAccumulator is the streaming
// counterpart: fixed bins, integer counters, mergeable across shards, and each
// bin is treated as one tie group when finalized.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "anomseg/errors.hpp"
#include "anomseg/tensor.hpp"

namespace anomseg {

struct MetricsReport {
  double auroc = 0.0;
  double auprc = 0.0;
  double fpr_at_95tpr = 0.0;
  std::uint64_t positives = 0;
  std::uint64_t negatives = 0;
  std::uint64_t ignored = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

inline constexpr double kTargetTpr = 0.95;

namespace detail {

// Walks tie groups from the highest score to the lowest.
class CurveSweep {
 public:
  CurveSweep(std::uint64_t positives, std::uint64_t negatives)
      : total_pos_(positives), total_neg_(negatives) {
    if (positives == 0 || negatives == 0) {
      throw DegenerateError(
          "metrics need at least one anomaly and one inlier pixel (got " +
          std::to_string(positives) + " positives, " +
          std::to_string(negatives) + " negatives)");
    }
  }

  void add_group(std::uint64_t pos, std::uint64_t neg) {
    if (pos == 0 && neg == 0) return;
    const std::uint64_t tp_prev = tp_;
    tp_ += pos;
    fp_ += neg;
    // Twice the trapezoid area in count units; long double keeps the
    // products exact well past 10^9 pixels per class.
    twice_area_ += static_cast<long double>(neg) *
                   static_cast<long double>(tp_prev + tp_);
    if (pos > 0) {
      const double recall_step = static_cast<double>(pos) / total_pos_;
      const double precision = static_cast<double>(tp_) / (tp_ + fp_);
      ap_ += recall_step * precision;
    }
    if (!fpr95_found_ &&
        static_cast<double>(tp_) / total_pos_ >= kTargetTpr) {
      fpr95_ = static_cast<double>(fp_) / total_neg_;
      fpr95_found_ = true;
    }
  }

  MetricsReport finish(std::uint64_t ignored) const {
    MetricsReport r;
    r.auroc = static_cast<double>(
        twice_area_ / (2.0L * static_cast<long double>(total_pos_) *
                       static_cast<long double>(total_neg_)));
    r.auprc = ap_;
    r.fpr_at_95tpr = fpr95_found_ ? fpr95_ : 1.0;
    r.positives = total_pos_;
    r.negatives = total_neg_;
    r.ignored = ignored;
    return r;
  }

 private:
  std::uint64_t total_pos_;
  std::uint64_t total_neg_;
  std::uint64_t tp_ = 0;
  std::uint64_t fp_ = 0;
  long double twice_area_ = 0.0L;
  double ap_ = 0.0;
  double fpr95_ = 1.0;
  bool fpr95_found_ = false;
};

}  // namespace detail

/// Reference metrics by full sort. Labels may include 255 (ignored).
inline MetricsReport exact_metrics(std::span<const double> scores,
                                   std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("scores and labels differ in length", Shape{scores.size()},
                     Shape{labels.size()});
  }
  std::vector<std::pair<double, bool>> kept;
  kept.reserve(scores.size());
  std::uint64_t pos = 0, neg = 0, ignored = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const std::uint8_t y = labels[i];
    if (y == label::kIgnore) {
      ++ignored;
      continue;
    }
    if (y != label::kInlier && y != label::kAnomaly) {
      throw ValidationError("label " + std::to_string(y) + " at index " +
                            std::to_string(i) + " is not one of {0, 1, 255}");
    }
    if (!std::isfinite(scores[i])) {
      throw ValidationError("non-finite score at index " + std::to_string(i));
    }
    kept.emplace_back(scores[i], y == label::kAnomaly);
    (y == label::kAnomaly ? pos : neg) += 1;
  }

  detail::CurveSweep sweep(pos, neg);
  std::sort(kept.begin(), kept.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  std::size_t i = 0;
  while (i < kept.size()) {
    std::uint64_t gp = 0, gn = 0;
    const double s = kept[i].first;
    for (; i < kept.size() && kept[i].first == s; ++i) {
      (kept[i].second ? gp : gn) += 1;
    }
    sweep.add_group(gp, gn);
  }
  return sweep.finish(ignored);
}

/// Convenience overload pooling one score map with its mask.
inline MetricsReport exact_metrics(const AnomalyScoreMap& score,
                                   const LabelMask& mask) {
  validate_pair(score, mask);
  return exact_metrics(score.values(), mask.values());
}

/// Mergeable histogram of scores per class.
///
/// Bin i covers [edges[i], edges[i+1]); the last bin also includes its right
/// edge. Scores below edges.front() or above edges.back() are counted in
/// per-class underflow/overflow groups, which finalize() treats as the least
/// and most anomalous groups respectively.
class EvalAccumulator {
 public:
  static constexpr std::size_t kDefaultBins = 4096;

  explicit EvalAccumulator(std::vector<double> edges)
      : edges_(std::move(edges)) {
    if (edges_.size() < 2) {
      throw ConfigError("an accumulator needs at least one bin (two edges)");
    }
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      if (!std::isfinite(edges_[i]) || (i > 0 && !(edges_[i] > edges_[i - 1]))) {
        throw ConfigError("bin edges must be finite and strictly increasing");
      }
    }
    pos_.assign(bins(), 0);
    neg_.assign(bins(), 0);
  }

  /// `bins` equal-width bins over [lo, hi].
  static EvalAccumulator uniform(double lo, double hi,
                                 std::size_t bins = kDefaultBins) {
    if (bins == 0) throw ConfigError("bin count must be positive");
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
      throw ConfigError("uniform bin range needs finite lo < hi, got [" +
                        std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    std::vector<double> edges(bins + 1);
    const double width = hi - lo;
    for (std::size_t i = 0; i <= bins; ++i) {
      edges[i] = lo + width * (static_cast<double>(i) / bins);
    }
    edges[bins] = hi;
    EvalAccumulator acc(std::move(edges));
    acc.uniform_ = true;
    acc.inv_width_ = static_cast<double>(bins) / width;
    return acc;
  }

  std::size_t bins() const noexcept { return edges_.size() - 1; }
  const std::vector<double>& edges() const noexcept { return edges_; }
  const std::vector<std::uint64_t>& positive_counts() const noexcept {
    return pos_;
  }
  const std::vector<std::uint64_t>& negative_counts() const noexcept {
    return neg_;
  }
  std::uint64_t positive_underflow() const noexcept { return pos_under_; }
  std::uint64_t positive_overflow() const noexcept { return pos_over_; }
  std::uint64_t negative_underflow() const noexcept { return neg_under_; }
  std::uint64_t negative_overflow() const noexcept { return neg_over_; }
  std::uint64_t ignored() const noexcept { return ignored_; }

  std::uint64_t positives() const noexcept {
    return sum(pos_) + pos_under_ + pos_over_;
  }
  std::uint64_t negatives() const noexcept {
    return sum(neg_) + neg_under_ + neg_over_;
  }

  /// Index of the bin holding `s`; -1 for underflow, bins() for overflow.
  std::ptrdiff_t locate(double s) const noexcept {
    const std::size_t n = bins();
    if (s < edges_.front()) return -1;
    if (s > edges_.back()) return static_cast<std::ptrdiff_t>(n);
    std::size_t k;
    if (uniform_) {
      const double guess = (s - edges_.front()) * inv_width_;
      k = guess >= static_cast<double>(n) ? n - 1
                                          : static_cast<std::size_t>(guess);
      // Arithmetic guess may be off by one near an edge; the edges decide.
      while (k > 0 && s < edges_[k]) --k;
      while (k + 1 < n && s >= edges_[k + 1]) ++k;
    } else {
      const auto it = std::upper_bound(edges_.begin(), edges_.end(), s);
      k = std::min<std::size_t>(static_cast<std::size_t>(it - edges_.begin()) - 1,
                                n - 1);
    }
    return static_cast<std::ptrdiff_t>(k);
  }

  void add(double score, std::uint8_t y) {
    if (y == label::kIgnore) {
      ++ignored_;
      return;
    }
    const bool positive = y == label::kAnomaly;
    if (!positive && y != label::kInlier) {
      throw ValidationError("label " + std::to_string(y) +
                            " is not one of {0, 1, 255}");
    }
    const std::ptrdiff_t k = locate(score);
    if (k < 0) {
      ++(positive ? pos_under_ : neg_under_);
    } else if (static_cast<std::size_t>(k) == bins()) {
      ++(positive ? pos_over_ : neg_over_);
    } else {
      ++(positive ? pos_ : neg_)[static_cast<std::size_t>(k)];
    }
  }

  void accumulate(std::span<const double> scores,
                  std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) {
      throw ShapeError("scores and labels differ in length",
                       Shape{scores.size()}, Shape{labels.size()});
    }
    for (std::size_t i = 0; i < scores.size(); ++i) add(scores[i], labels[i]);
  }

  void accumulate(const AnomalyScoreMap& score, const LabelMask& mask) {
    validate_pair(score, mask);
    accumulate(score.values(), mask.values());
  }

  /// Counterwise sum. Both sides must share identical edges.
  EvalAccumulator& merge(const EvalAccumulator& other) {
    if (edges_ != other.edges_) {
      throw ConfigError("cannot merge accumulators with different bin edges");
    }
    for (std::size_t i = 0; i < bins(); ++i) {
      pos_[i] += other.pos_[i];
      neg_[i] += other.neg_[i];
    }
    pos_under_ += other.pos_under_;
    pos_over_ += other.pos_over_;
    neg_under_ += other.neg_under_;
    neg_over_ += other.neg_over_;
    ignored_ += other.ignored_;
    return *this;
  }

  /// Empty accumulator with the same edges.
  EvalAccumulator empty_like() const {
    EvalAccumulator out = *this;
    std::fill(out.pos_.begin(), out.pos_.end(), 0);
    std::fill(out.neg_.begin(), out.neg_.end(), 0);
    out.pos_under_ = out.pos_over_ = out.neg_under_ = out.neg_over_ = 0;
    out.ignored_ = 0;
    return out;
  }

  MetricsReport finalize() const {
    detail::CurveSweep sweep(positives(), negatives());
    sweep.add_group(pos_over_, neg_over_);
    for (std::size_t i = bins(); i-- > 0;) sweep.add_group(pos_[i], neg_[i]);
    sweep.add_group(pos_under_, neg_under_);
    return sweep.finish(ignored_);
  }

  bool counters_equal(const EvalAccumulator& o) const {
    return edges_ == o.edges_ && pos_ == o.pos_ && neg_ == o.neg_ &&
           pos_under_ == o.pos_under_ && pos_over_ == o.pos_over_ &&
           neg_under_ == o.neg_under_ && neg_over_ == o.neg_over_ &&
           ignored_ == o.ignored_;
  }

 private:
  static std::uint64_t sum(const std::vector<std::uint64_t>& v) {
    std::uint64_t s = 0;
    for (auto x : v) s += x;
    return s;
  }

  std::vector<double> edges_;
  std::vector<std::uint64_t> pos_;
  std::vector<std::uint64_t> neg_;
  std::uint64_t pos_under_ = 0;
  std::uint64_t pos_over_ = 0;
  std::uint64_t neg_under_ = 0;
  std::uint64_t neg_over_ = 0;
  std::uint64_t ignored_ = 0;
  bool uniform_ = false;
  double inv_width_ = 0.0;
};

inline EvalAccumulator merge(EvalAccumulator a, const EvalAccumulator& b) {
  a.merge(b);
  return a;
}

/// Min and max score over non-ignored pixels; empty() if there are none.
struct ScoreRange {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  bool empty() const { return lo > hi; }
  void include(double s) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  void include(const ScoreRange& r) {
    lo = std::min(lo, r.lo);
    hi = std::max(hi, r.hi);
  }
};

inline ScoreRange scan_range(const AnomalyScoreMap& score,
                             const LabelMask& mask) {
  validate_pair(score, mask);
  ScoreRange r;
  const auto s = score.values();
  const auto y = mask.values();
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != label::kIgnore) r.include(s[i]);
  }
  return r;
}

/// Uniform accumulator spanning `range`. A single-valued range is widened to
/// one unit so the edges stay strictly increasing.
inline EvalAccumulator accumulator_for(const ScoreRange& range,
                                       std::size_t bins) {
  if (range.empty()) {
    throw DegenerateError("no scored pixels to derive a bin range from");
  }
  const double hi = range.hi > range.lo ? range.hi : range.lo + 1.0;
  return EvalAccumulator::uniform(range.lo, hi, bins);
}

}  // namespace anomseg

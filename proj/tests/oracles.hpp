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

// Slow, obviously-correct reference implementations used only by tests. None
// of these call into the library's numeric code.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace oracle {

struct Metrics {
  double auroc = 0.0;
  double auprc = 0.0;
  double fpr95 = 1.0;
};

// O(n * t) sweep: for every distinct score t (descending), count TP/FP with
// score >= t by a fresh linear scan. Label 255 entries are skipped.
inline Metrics threshold_sweep(const std::vector<double>& s,
                               const std::vector<std::uint8_t>& y) {
  std::set<double, std::greater<>> thresholds;
  double P = 0, N = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] == 255) continue;
    thresholds.insert(s[i]);
    (y[i] == 1 ? P : N) += 1;
  }
  Metrics m;
  double prev_tpr = 0, prev_fpr = 0, prev_recall = 0;
  bool found = false;
  for (double t : thresholds) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (y[i] == 255 || s[i] < t) continue;
      (y[i] == 1 ? tp : fp) += 1;
    }
    const double tpr = tp / P, fpr = fp / N;
    m.auroc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2;
    m.auprc += (tpr - prev_recall) * (tp / (tp + fp));
    if (!found && tpr >= 0.95) {
      m.fpr95 = fpr;
      found = true;
    }
    prev_tpr = tpr;
    prev_fpr = fpr;
    prev_recall = tpr;
  }
  return m;
}

// P(score of random positive > random negative) + 0.5 P(tie).
inline double pair_count_auroc(const std::vector<double>& s,
                               const std::vector<std::uint8_t>& y) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1;
      if (s[i] > s[j]) wins += 1;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

// Direct exp-normalize, no max shift. Fine for small logits.
inline std::vector<double> naive_softmax(const std::vector<double>& z) {
  double sum = 0;
  for (double v : z) sum += std::exp(v);
  std::vector<double> p;
  for (double v : z) p.push_back(std::exp(v) / sum);
  return p;
}

inline double naive_entropy(const std::vector<double>& z) {
  double h = 0;
  for (double p : naive_softmax(z)) {
    if (p > 0) h -= p * std::log(p);
  }
  return h;
}

// Linear scan of the edges for the bin holding s: -1 under, B over.
inline long naive_bin(const std::vector<double>& edges, double s) {
  const long B = static_cast<long>(edges.size()) - 1;
  if (s < edges.front()) return -1;
  if (s > edges.back()) return B;
  for (long i = 0; i < B; ++i) {
    const bool last = i == B - 1;
    if (s >= edges[i] && (s < edges[i + 1] || (last && s <= edges[i + 1]))) {
      return i;
    }
  }
  return B;
}

// Standard normal CDF.
inline double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace oracle

namespace testutil {

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("anomseg_test_" + name + "_" +
                    std::to_string(std::random_device{}()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil

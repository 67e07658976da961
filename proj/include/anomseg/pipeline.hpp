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

// Dataset-level orchestration: score every record of a manifest and pool all
// pixels into one global ROC/PR evaluation.
//
// Images are independent work units. Each worker owns its own accumulator;
// shards are merged in worker order, and since the counters are integers the
// result does not depend on the number of workers.

#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "anomseg/config.hpp"
#include "anomseg/errors.hpp"
#include "anomseg/io.hpp"
#include "anomseg/manifest.hpp"
#include "anomseg/metrics.hpp"
#include "anomseg/scoring.hpp"
#include "anomseg/tensor.hpp"
#include "anomseg/text_enhance.hpp"

namespace anomseg {

inline constexpr const char* kPooling = "pixel-pooled";

struct EvalReport {
  std::string method;
  std::string dataset;
  MetricsReport metrics;
  std::size_t bins = 0;  // 0 when the exact backend was used
  std::string pooling = kPooling;
};

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["method"] = r.method;
  j["dataset"] = r.dataset;
  j["auroc"] = r.metrics.auroc;
  j["auprc"] = r.metrics.auprc;
  j["fpr_at_95tpr"] = r.metrics.fpr_at_95tpr;
  j["positives"] = r.metrics.positives;
  j["negatives"] = r.metrics.negatives;
  j["ignored"] = r.metrics.ignored;
  j["bins"] = r.bins;
  j["pooling"] = r.pooling;
  return j;
}

inline constexpr const char* kCsvHeader =
    "method,dataset,auroc,auprc,fpr_at_95tpr,positives,negatives,ignored,bins,"
    "pooling";

inline std::string to_csv_row(const EvalReport& r) {
  const auto num = [](double x) { return nlohmann::json(x).dump(); };
  std::ostringstream os;
  os << r.method << ',' << r.dataset << ',' << num(r.metrics.auroc) << ','
     << num(r.metrics.auprc) << ',' << num(r.metrics.fpr_at_95tpr) << ','
     << r.metrics.positives << ',' << r.metrics.negatives << ','
     << r.metrics.ignored << ',' << r.bins << ',' << r.pooling;
  return os.str();
}

/// Runs fn(i) for i in [0, n) on `jobs` threads, worker k taking indices
/// k, k + jobs, ... The first exception in index order is rethrown.
inline void parallel_for(std::size_t n, std::size_t jobs,
                         const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  std::vector<std::exception_ptr> errors(n);
  const auto worker = [&](std::size_t k) {
    for (std::size_t i = k; i < n; i += jobs) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (std::size_t k = 0; k < jobs; ++k) pool.emplace_back(worker, k);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Score map for one image under `cfg.method`. Text-dependent methods need
/// both `features` and `embeddings`.
inline AnomalyScoreMap score_image(const LogitsMap& logits,
                                   const FeatureMap* features,
                                   const EmbeddingMatrix* embeddings,
                                   const EvalConfig& cfg) {
  switch (cfg.method) {
    case ScoreMethod::kMsp:
      return msp(logits);
    case ScoreMethod::kEntropy:
      return entropy(logits);
    case ScoreMethod::kOdin:
      return odin(logits, cfg.odin);
    case ScoreMethod::kMaxLogits:
    case ScoreMethod::kMask2AnomalyLogits:
      return max_logits(logits);
    case ScoreMethod::kMmras:
    case ScoreMethod::kMmrasPlus:
      break;
  }
  if (features == nullptr || embeddings == nullptr) {
    throw ConfigError(std::string(to_string(cfg.method)) +
                      " needs backbone features and text embeddings");
  }
  if (features->height() != logits.height() ||
      features->width() != logits.width()) {
    throw ShapeError("features and logits differ in spatial size",
                     features->shape(), logits.shape());
  }
  if (embeddings->classes() != logits.classes()) {
    throw ShapeError("embedding classes do not match logit channels",
                     embeddings->shape(), logits.shape());
  }
  const LogitsMap text = project_text(*features, *embeddings, cfg.projection);
  const LogitsMap fused = fuse_logits(logits, text, cfg.fusion);
  if (cfg.method == ScoreMethod::kMmras) return mmras(fused);
  return mmras_plus(fused, logits, cfg.ensemble);
}

/// One scored image ready for evaluation.
struct ScoredImage {
  std::string image_id;
  AnomalyScoreMap score;
  LabelMask mask;
};

/// Pooled metrics over already-scored images.
///
/// Binned mode scans the global min/max first (unless cfg.score_range fixes
/// it), then fills one accumulator per worker and merges them.
inline MetricsReport evaluate_pooled(std::span<const AnomalyScoreMap> scores,
                                     std::span<const LabelMask> masks,
                                     const EvalConfig& cfg,
                                     std::size_t jobs = 1) {
  if (scores.size() != masks.size()) {
    throw ShapeError("score and mask lists differ in length",
                     Shape{scores.size()}, Shape{masks.size()});
  }
  if (scores.empty()) throw DegenerateError("no images to evaluate");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    validate_pair(scores[i], masks[i]);
  }

  if (cfg.exact) {
    std::size_t total = 0;
    for (const auto& s : scores) total += s.size();
    std::vector<double> flat_scores;
    std::vector<std::uint8_t> flat_labels;
    flat_scores.reserve(total);
    flat_labels.reserve(total);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const auto s = scores[i].values();
      const auto y = masks[i].values();
      flat_scores.insert(flat_scores.end(), s.begin(), s.end());
      flat_labels.insert(flat_labels.end(), y.begin(), y.end());
    }
    return exact_metrics(flat_scores, flat_labels);
  }

  ScoreRange range;
  if (cfg.score_range) {
    range.lo = cfg.score_range->first;
    range.hi = cfg.score_range->second;
  } else {
    std::vector<ScoreRange> partial(scores.size());
    parallel_for(scores.size(), jobs, [&](std::size_t i) {
      partial[i] = scan_range(scores[i], masks[i]);
    });
    for (const auto& r : partial) {
      if (!r.empty()) range.include(r);
    }
  }
  const EvalAccumulator proto = accumulator_for(range, cfg.bins);

  const std::size_t shards =
      std::max<std::size_t>(1, std::min(jobs, scores.size()));
  std::vector<EvalAccumulator> acc(shards, proto);
  std::vector<std::jthread> pool;
  std::vector<std::exception_ptr> errors(shards);
  const auto worker = [&](std::size_t k) {
    try {
      for (std::size_t i = k; i < scores.size(); i += shards) {
        acc[k].accumulate(scores[i], masks[i]);
      }
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  if (shards == 1) {
    worker(0);
  } else {
    for (std::size_t k = 0; k < shards; ++k) pool.emplace_back(worker, k);
    pool.clear();  // joins
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  EvalAccumulator total = proto;
  for (const auto& a : acc) total.merge(a);
  return total.finalize();
}

namespace detail {

inline std::optional<EmbeddingMatrix> load_text_inputs(
    const DatasetManifest& manifest, const EvalConfig& cfg) {
  if (!needs_text(cfg.method)) return std::nullopt;
  if (!std::filesystem::exists(manifest.embeddings)) {
    throw ConfigError(std::string(to_string(cfg.method)) +
                      " needs text embeddings but " +
                      manifest.embeddings.string() + " does not exist");
  }
  for (const auto& r : manifest.records) {
    if (!r.features) {
      throw ConfigError(std::string(to_string(cfg.method)) +
                        " needs features but record '" + r.image_id +
                        "' has none");
    }
  }
  return load_embeddings(manifest.embeddings, manifest.class_names);
}

}  // namespace detail

/// Loads and scores record i of the manifest.
inline ScoredImage score_record(const DatasetManifest& manifest, std::size_t i,
                                const EmbeddingMatrix* embeddings,
                                const EvalConfig& cfg) {
  const ManifestRecord& rec = manifest.records.at(i);
  const LogitsMap logits = load_logits(rec.logits);
  std::optional<FeatureMap> features;
  if (needs_text(cfg.method)) features = load_features(*rec.features);
  LabelMask mask = load_mask(rec.mask);
  AnomalyScoreMap score = score_image(
      logits, features ? &*features : nullptr, embeddings, cfg);
  validate_pair(score, mask);
  return ScoredImage{rec.image_id, std::move(score), std::move(mask)};
}

/// Scores every record, in manifest order.
inline std::vector<ScoredImage> score_dataset(const DatasetManifest& manifest,
                                              const EvalConfig& cfg,
                                              std::size_t jobs = 1) {
  cfg.validate();
  if (manifest.records.empty()) {
    throw DegenerateError("manifest has no records");
  }
  const auto embeddings = detail::load_text_inputs(manifest, cfg);
  std::vector<std::optional<ScoredImage>> slots(manifest.records.size());
  parallel_for(slots.size(), jobs, [&](std::size_t i) {
    slots[i] = score_record(manifest, i, embeddings ? &*embeddings : nullptr,
                            cfg);
  });
  std::vector<ScoredImage> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

/// Full evaluation of a manifest: score, pool, and report.
inline EvalReport run_eval(const DatasetManifest& manifest,
                           const EvalConfig& cfg, std::size_t jobs = 1) {
  std::vector<ScoredImage> scored = score_dataset(manifest, cfg, jobs);
  std::vector<AnomalyScoreMap> scores;
  std::vector<LabelMask> masks;
  scores.reserve(scored.size());
  masks.reserve(scored.size());
  for (auto& s : scored) {
    scores.push_back(std::move(s.score));
    masks.push_back(std::move(s.mask));
  }
  EvalReport report;
  report.method = std::string(to_string(cfg.method));
  report.dataset = manifest.dataset;
  report.metrics = evaluate_pooled(scores, masks, cfg, jobs);
  report.bins = cfg.exact ? 0 : cfg.bins;
  return report;
}

}  // namespace anomseg

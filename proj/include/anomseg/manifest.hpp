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

// Dataset manifests. On disk a dataset looks like
//
//   <root>/manifest.json
//   <root>/text_embeddings.npy
//   <root>/logits/<id>.npy
//   <root>/features/<id>.npy
//   <root>/masks/<id>.npy   (or <id>.png)
//
// manifest.json lists the records; per-record paths are optional and default
// to the layout above. Relative paths resolve against <root>.

#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "anomseg/errors.hpp"

namespace anomseg {

struct ManifestRecord {
  std::string image_id;
  std::filesystem::path logits;
  std::optional<std::filesystem::path> features;
  std::filesystem::path mask;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::string dataset;  // display name used in reports
  std::filesystem::path embeddings;
  std::optional<std::vector<std::string>> class_names;
  std::vector<ManifestRecord> records;
  nlohmann::json metadata = nlohmann::json::object();
};

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kEmbeddingsFile = "text_embeddings.npy";

namespace detail {

inline std::filesystem::path resolve(const std::filesystem::path& root,
                                     const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : root / path;
}

inline std::string manifest_string(const nlohmann::json& j, const char* key,
                                   const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_string()) {
    throw FormatError(where + ": '" + key + "' must be a string");
  }
  return v.get<std::string>();
}

}  // namespace detail

inline DatasetManifest parse_manifest(const nlohmann::json& j,
                                      const std::filesystem::path& root) {
  const std::string where = (root / kManifestFile).string();
  if (!j.is_object()) throw FormatError(where + ": manifest must be an object");
  static const std::set<std::string> kTop = {
      "dataset", "embeddings", "class_names", "records", "metadata"};
  for (const auto& [key, value] : j.items()) {
    if (!kTop.count(key)) {
      throw FormatError(where + ": unknown manifest key '" + key + "'");
    }
  }

  DatasetManifest m;
  m.root = root;
  m.dataset = j.contains("dataset")
                  ? detail::manifest_string(j, "dataset", where)
                  : root.filename().string();
  m.embeddings =
      j.contains("embeddings")
          ? detail::resolve(root, detail::manifest_string(j, "embeddings", where))
          : root / kEmbeddingsFile;
  if (j.contains("class_names")) {
    try {
      m.class_names = j.at("class_names").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception&) {
      throw FormatError(where + ": 'class_names' must be a list of strings");
    }
  }
  if (j.contains("metadata")) m.metadata = j.at("metadata");

  if (!j.contains("records") || !j.at("records").is_array()) {
    throw FormatError(where + ": 'records' must be a list");
  }
  static const std::set<std::string> kRecordKeys = {"image_id", "logits",
                                                    "features", "mask"};
  std::set<std::string> seen;
  for (const auto& r : j.at("records")) {
    if (!r.is_object() || !r.contains("image_id")) {
      throw FormatError(where + ": every record needs an 'image_id'");
    }
    for (const auto& [key, value] : r.items()) {
      if (!kRecordKeys.count(key)) {
        throw FormatError(where + ": unknown record key '" + key + "'");
      }
    }
    ManifestRecord rec;
    rec.image_id = detail::manifest_string(r, "image_id", where);
    if (!seen.insert(rec.image_id).second) {
      throw FormatError(where + ": duplicate image_id '" + rec.image_id + "'");
    }
    rec.logits = r.contains("logits")
                     ? detail::resolve(root,
                                       detail::manifest_string(r, "logits", where))
                     : root / "logits" / (rec.image_id + ".npy");
    if (r.contains("features")) {
      rec.features =
          detail::resolve(root, detail::manifest_string(r, "features", where));
    } else {
      const auto p = root / "features" / (rec.image_id + ".npy");
      if (std::filesystem::exists(p)) rec.features = p;
    }
    if (r.contains("mask")) {
      rec.mask = detail::resolve(root, detail::manifest_string(r, "mask", where));
    } else {
      const auto npy = root / "masks" / (rec.image_id + ".npy");
      const auto png = root / "masks" / (rec.image_id + ".png");
      rec.mask = std::filesystem::exists(npy) || !std::filesystem::exists(png)
                     ? npy
                     : png;
    }
    m.records.push_back(std::move(rec));
  }
  return m;
}

inline DatasetManifest load_manifest(const std::filesystem::path& root) {
  const auto path = root / kManifestFile;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return parse_manifest(j, root);
}

/// Serializes with paths relative to the manifest root where possible.
inline nlohmann::json to_json(const DatasetManifest& m) {
  const auto rel = [&](const std::filesystem::path& p) {
    return p.lexically_relative(m.root).generic_string();
  };
  nlohmann::json j;
  j["dataset"] = m.dataset;
  j["embeddings"] = rel(m.embeddings);
  if (m.class_names) j["class_names"] = *m.class_names;
  if (!m.metadata.empty()) j["metadata"] = m.metadata;
  j["records"] = nlohmann::json::array();
  for (const auto& r : m.records) {
    nlohmann::json jr;
    jr["image_id"] = r.image_id;
    jr["logits"] = rel(r.logits);
    if (r.features) jr["features"] = rel(*r.features);
    jr["mask"] = rel(r.mask);
    j["records"].push_back(std::move(jr));
  }
  return j;
}

inline void save_manifest(const DatasetManifest& m) {
  const auto path = m.root / kManifestFile;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(m).dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace anomseg

/*
 * Copyright 2026 The AutoDC Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "autodc/error.hpp"
#include "autodc/io.hpp"

namespace autodc {

enum class Origin { Original, Augmented };

inline std::string_view origin_name(Origin origin) {
  return origin == Origin::Original ? "original" : "augmented";
}

struct ImageRecord {
  std::string id;
  std::string path;  // relative to the manifest's directory
  std::string label;
  Origin origin = Origin::Original;
  std::optional<std::string> source_id;  // present iff origin == Augmented

  bool operator==(const ImageRecord&) const = default;
};

struct DatasetManifest {
  std::string name;
  std::vector<std::string> classes;
  std::vector<ImageRecord> records;

  bool operator==(const DatasetManifest&) const = default;

  bool has_class(const std::string& label) const {
    return std::find(classes.begin(), classes.end(), label) != classes.end();
  }

  /// Index of the record with `id`, if any. Linear; use ManifestIndex for
  /// repeated lookups.
  std::optional<std::size_t> find(const std::string& id) const {
    for (std::size_t i = 0; i < records.size(); ++i)
      if (records[i].id == id) return i;
    return std::nullopt;
  }
};

class ManifestIndex {
 public:
  explicit ManifestIndex(const DatasetManifest& manifest) {
    by_id_.reserve(manifest.records.size());
    for (std::size_t i = 0; i < manifest.records.size(); ++i)
      by_id_.emplace(manifest.records[i].id, i);
  }
  std::optional<std::size_t> find(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::unordered_map<std::string, std::size_t> by_id_;
};

namespace detail {

// Class names and ids become path components of the export layout.
inline bool is_path_safe(const std::string& s) {
  if (s.empty() || s == "." || s == "..") return false;
  return s.find_first_of("/\\") == std::string::npos &&
         s.find('\0') == std::string::npos;
}

}  // namespace detail

/// Checks every manifest invariant; throws the first violation found.
inline void validate_manifest(const DatasetManifest& m) {
  if (m.classes.empty()) fail(ErrorCode::EmptyClassList, "manifest has no classes");
  std::unordered_set<std::string> classes;
  for (const auto& c : m.classes) {
    if (!detail::is_path_safe(c))
      fail(ErrorCode::MalformedDocument, "class name not usable as a path component: '" + c + "'");
    if (!classes.insert(c).second)
      fail(ErrorCode::MalformedDocument, "duplicate class '" + c + "'");
  }
  std::unordered_set<std::string> ids;
  for (const auto& r : m.records) {
    if (!detail::is_path_safe(r.id))
      fail(ErrorCode::MalformedDocument, "record id not usable as a path component: '" + r.id + "'");
    if (!ids.insert(r.id).second) fail(ErrorCode::DuplicateId, r.id);
    if (!classes.contains(r.label))
      fail(ErrorCode::UnknownLabel, r.id + ", " + r.label);
    if ((r.origin == Origin::Augmented) != r.source_id.has_value())
      fail(ErrorCode::MalformedDocument,
           "record " + r.id + ": source_id must be present exactly for augmented records");
  }
}

inline json manifest_to_json(const DatasetManifest& m) {
  json records = json::array();
  for (const auto& r : m.records) {
    json j = {{"id", r.id}, {"path", r.path}, {"label", r.label},
              {"origin", origin_name(r.origin)}};
    if (r.source_id) j["source_id"] = *r.source_id;
    records.push_back(std::move(j));
  }
  return {{"name", m.name}, {"classes", m.classes}, {"records", std::move(records)}};
}

inline DatasetManifest manifest_from_json(const json& doc) {
  DatasetManifest m;
  try {
    if (!doc.is_object()) fail(ErrorCode::MalformedDocument, "manifest must be an object");
    m.name = doc.value("name", std::string{});
    m.classes = doc.at("classes").get<std::vector<std::string>>();
    for (const auto& jr : doc.at("records")) {
      ImageRecord r;
      r.id = jr.at("id").get<std::string>();
      r.path = jr.at("path").get<std::string>();
      r.label = jr.at("label").get<std::string>();
      const std::string origin = jr.value("origin", std::string("original"));
      if (origin == "original") {
        r.origin = Origin::Original;
      } else if (origin == "augmented") {
        r.origin = Origin::Augmented;
      } else {
        fail(ErrorCode::MalformedDocument, "record " + r.id + ": unknown origin '" + origin + "'");
      }
      if (jr.contains("source_id") && !jr.at("source_id").is_null())
        r.source_id = jr.at("source_id").get<std::string>();
      m.records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedDocument, std::string("manifest: ") + e.what());
  }
  validate_manifest(m);
  return m;
}

inline DatasetManifest load_manifest(const fs::path& path) {
  return manifest_from_json(read_json_file(path));
}

inline void save_manifest(const DatasetManifest& m, const fs::path& path) {
  write_file_atomic(path, manifest_to_json(m).dump(2) + "\n");
}

}  // namespace autodc

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

#include <string>
#include <unordered_map>
#include <vector>

#include "autodc/error.hpp"
#include "autodc/manifest.hpp"

namespace autodc {

/// One relabeling decision. The correction list is an append-only history;
/// the latest entry per record is the active one.
struct LabelCorrection {
  std::string record_id;
  std::string old_label;
  std::string new_label;

  bool operator==(const LabelCorrection&) const = default;
};

inline std::string effective_label(const DatasetManifest& manifest,
                                   const std::vector<LabelCorrection>& corrections,
                                   const std::string& id) {
  const auto index = manifest.find(id);
  if (!index) fail(ErrorCode::UnknownRecord, id);
  for (auto it = corrections.rbegin(); it != corrections.rend(); ++it)
    if (it->record_id == id) return it->new_label;
  return manifest.records[*index].label;
}

/// Effective label of every manifest record, in manifest order.
inline std::vector<std::string> effective_labels(
    const DatasetManifest& manifest, const std::vector<LabelCorrection>& corrections) {
  std::unordered_map<std::string, const std::string*> latest;
  for (const auto& c : corrections) latest[c.record_id] = &c.new_label;
  std::vector<std::string> out;
  out.reserve(manifest.records.size());
  for (const auto& r : manifest.records) {
    auto it = latest.find(r.id);
    out.push_back(it == latest.end() ? r.label : *it->second);
  }
  return out;
}

/// Appends a correction moving `record_id` to `new_label`. Returns false and
/// leaves the history untouched when the record already carries that label,
/// which makes repeated submissions idempotent.
inline bool apply_correction(std::vector<LabelCorrection>& corrections,
                             const DatasetManifest& manifest,
                             const std::string& record_id,
                             const std::string& new_label) {
  const std::string current = effective_label(manifest, corrections, record_id);
  if (!manifest.has_class(new_label))
    fail(ErrorCode::InvalidCorrection, "unknown class '" + new_label + "'");
  if (current == new_label) return false;
  corrections.push_back({record_id, current, new_label});
  return true;
}

/// Restores the manifest label by appending an inverse correction.
inline void revert_correction(std::vector<LabelCorrection>& corrections,
                              const DatasetManifest& manifest,
                              const std::string& record_id) {
  const std::string current = effective_label(manifest, corrections, record_id);
  const std::string& original = manifest.records[*manifest.find(record_id)].label;
  if (current == original) fail(ErrorCode::NoActiveCorrection, record_id);
  corrections.push_back({record_id, current, original});
}

/// Fraction of records whose effective label differs from the manifest.
inline double observed_correction_ratio(const DatasetManifest& manifest,
                                        const std::vector<LabelCorrection>& corrections) {
  if (manifest.records.empty()) return 0.0;
  const auto labels = effective_labels(manifest, corrections);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    changed += labels[i] != manifest.records[i].label;
  return static_cast<double>(changed) / static_cast<double>(labels.size());
}

}  // namespace autodc

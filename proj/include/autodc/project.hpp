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

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "autodc/aug_config.hpp"
#include "autodc/corrections.hpp"
#include "autodc/error.hpp"
#include "autodc/iforest.hpp"
#include "autodc/io.hpp"
#include "autodc/manifest.hpp"
#include "autodc/tsne.hpp"

namespace autodc {

inline constexpr int kProjectSchemaVersion = 1;

/// Workflow stages. Transitions only move to the immediate successor.
enum class Stage { Initialized, Analyzed, LabelReview, EdgeSelection, AugConfig, Exported };

inline constexpr std::array kAllStages = {Stage::Initialized,   Stage::Analyzed,
                                          Stage::LabelReview,   Stage::EdgeSelection,
                                          Stage::AugConfig,     Stage::Exported};

constexpr std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::Initialized: return "initialized";
    case Stage::Analyzed: return "analyzed";
    case Stage::LabelReview: return "label_review";
    case Stage::EdgeSelection: return "edge_selection";
    case Stage::AugConfig: return "aug_config";
    case Stage::Exported: return "exported";
  }
  return "";
}

inline std::optional<Stage> parse_stage(std::string_view name) {
  for (Stage s : kAllStages)
    if (stage_name(s) == name) return s;
  return std::nullopt;
}

struct AnalysisConfig {
  TsneConfig tsne;
  IForestConfig forest;
  std::size_t max_class_size = 5000;

  bool operator==(const AnalysisConfig&) const = default;

  void validate() const {
    tsne.validate();
    forest.validate();
    if (max_class_size < 2) fail(ErrorCode::InvalidConfig, "max class size must be at least 2");
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(AnalysisConfig, tsne, forest, max_class_size)

/// Pointer to one class's analysis artifact plus the facts the workflow needs
/// without reopening it.
struct ArtifactRef {
  std::string label;
  std::string path;  // relative to the project file's directory; empty when skipped
  std::size_t size = 0;
  bool skipped = false;     // class had no members
  bool degenerate = false;  // too few points for t-SNE
  std::vector<std::string> candidates;

  bool operator==(const ArtifactRef&) const = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ArtifactRef, label, path, size, skipped,
                                                degenerate, candidates)

struct ExportRecord {
  std::string output_dir;
  std::size_t original_count = 0;
  std::size_t augmented_count = 0;

  bool operator==(const ExportRecord&) const = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ExportRecord, output_dir, original_count,
                                                augmented_count)

struct ProjectState {
  std::string manifest_path;
  std::string embeddings_path;
  Stage stage = Stage::Initialized;
  std::uint64_t master_seed = 0;
  AnalysisConfig analysis_config;
  std::vector<LabelCorrection> corrections;  // full history, latest wins
  std::set<std::string> edge_selection;
  AugConfig aug_config;
  std::vector<ArtifactRef> artifacts;
  std::optional<ExportRecord> last_export;

  bool operator==(const ProjectState&) const = default;

  std::set<std::string> all_candidates() const {
    std::set<std::string> out;
    for (const auto& a : artifacts) out.insert(a.candidates.begin(), a.candidates.end());
    return out;
  }

  const ArtifactRef* artifact(const std::string& label) const {
    for (const auto& a : artifacts)
      if (a.label == label) return &a;
    return nullptr;
  }
};

inline std::string effective_label(const ProjectState& state, const DatasetManifest& manifest,
                                   const std::string& id) {
  return effective_label(manifest, state.corrections, id);
}

inline void check_edge_selection(const ProjectState& state) {
  const auto candidates = state.all_candidates();
  for (const auto& id : state.edge_selection)
    if (!candidates.contains(id))
      fail(ErrorCode::MissingPrerequisite, "edge case '" + id + "' is not an analysis candidate");
}

/// Moves to `target`, which must be the immediate successor of the current
/// stage, after checking that stage's prerequisites.
inline ProjectState advance_stage(ProjectState state, Stage target) {
  const auto from = static_cast<int>(state.stage);
  const auto to = static_cast<int>(target);
  if (to != from + 1)
    fail(ErrorCode::IllegalTransition,
         std::string(stage_name(state.stage)) + " -> " + std::string(stage_name(target)));
  switch (target) {
    case Stage::Analyzed:
      if (state.artifacts.empty())
        fail(ErrorCode::MissingPrerequisite, "no analysis artifacts");
      for (const auto& a : state.artifacts)
        if (!a.skipped && a.path.empty())
          fail(ErrorCode::MissingPrerequisite, "class '" + a.label + "' has no analysis artifact");
      break;
    case Stage::AugConfig:
      check_edge_selection(state);
      break;
    case Stage::Exported:
      state.aug_config.validate();
      if (!state.last_export) fail(ErrorCode::MissingPrerequisite, "no export has been written");
      break;
    default:
      break;
  }
  state.stage = target;
  return state;
}

/// Applies successive advance_stage calls until `target` is reached. No-op
/// when already there; IllegalTransition when `target` lies behind.
inline ProjectState advance_to(ProjectState state, Stage target) {
  if (static_cast<int>(target) < static_cast<int>(state.stage))
    fail(ErrorCode::IllegalTransition,
         std::string(stage_name(state.stage)) + " -> " + std::string(stage_name(target)));
  while (state.stage != target)
    state = advance_stage(std::move(state), static_cast<Stage>(static_cast<int>(state.stage) + 1));
  return state;
}

inline json project_to_json(const ProjectState& s) {
  json corrections = json::array();
  for (const auto& c : s.corrections)
    corrections.push_back(
        {{"record_id", c.record_id}, {"old_label", c.old_label}, {"new_label", c.new_label}});
  json doc = {
      {"schema_version", kProjectSchemaVersion},
      {"manifest_path", s.manifest_path},
      {"embeddings_path", s.embeddings_path},
      {"stage", stage_name(s.stage)},
      {"master_seed", s.master_seed},
      {"analysis_config", s.analysis_config},
      {"corrections", std::move(corrections)},
      {"edge_selection", s.edge_selection},
      {"aug_config", aug_config_to_json(s.aug_config)},
      {"artifacts", s.artifacts},
      {"last_export", nullptr},
  };
  if (s.last_export) doc["last_export"] = *s.last_export;
  return doc;
}

inline ProjectState project_from_json(const json& doc) {
  ProjectState s;
  try {
    if (!doc.is_object()) fail(ErrorCode::MalformedDocument, "project must be an object");
    const int version = doc.at("schema_version").get<int>();
    if (version != kProjectSchemaVersion)
      fail(ErrorCode::SchemaVersionMismatch, "expected " + std::to_string(kProjectSchemaVersion) +
                                                 ", got " + std::to_string(version));
    s.manifest_path = doc.at("manifest_path").get<std::string>();
    s.embeddings_path = doc.at("embeddings_path").get<std::string>();
    const auto stage = parse_stage(doc.at("stage").get<std::string>());
    if (!stage) fail(ErrorCode::MalformedDocument, "unknown stage");
    s.stage = *stage;
    s.master_seed = doc.at("master_seed").get<std::uint64_t>();
    s.analysis_config = doc.at("analysis_config").get<AnalysisConfig>();
    for (const auto& c : doc.at("corrections"))
      s.corrections.push_back({c.at("record_id").get<std::string>(),
                               c.at("old_label").get<std::string>(),
                               c.at("new_label").get<std::string>()});
    s.edge_selection = doc.at("edge_selection").get<std::set<std::string>>();
    s.aug_config = aug_config_from_json(doc.at("aug_config"));
    s.artifacts = doc.at("artifacts").get<std::vector<ArtifactRef>>();
    if (const auto& e = doc.at("last_export"); !e.is_null()) s.last_export = e.get<ExportRecord>();
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedDocument, std::string("project: ") + e.what());
  }
  return s;
}

inline void save_project(const ProjectState& state, const fs::path& path) {
  write_file_atomic(path, project_to_json(state).dump(2) + "\n");
}

inline ProjectState load_project(const fs::path& path) {
  return project_from_json(read_json_file(path));
}

}  // namespace autodc

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

// Project owner behind the review API.
//
// Workbench holds the single in-memory ProjectState. Every mutation builds a
// new state from a copy, persists it to the project file, and only then
// replaces the in-memory state, so an acknowledged request survives a
// restart. All access is serialized by one mutex.

#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "autodc/analysis.hpp"
#include "autodc/corrections.hpp"
#include "autodc/error.hpp"
#include "autodc/export.hpp"
#include "autodc/io.hpp"
#include "autodc/manifest.hpp"
#include "autodc/project.hpp"

namespace autodc {

class Workbench {
 public:
  explicit Workbench(fs::path project_path, std::size_t workers = default_worker_count())
      : project_path_(std::move(project_path)), workers_(workers) {
    state_ = load_project(project_path_);
    manifest_ = load_manifest(manifest_path());
  }

  ~Workbench() { wait_for_export(); }

  Workbench(const Workbench&) = delete;
  Workbench& operator=(const Workbench&) = delete;

  ProjectState snapshot() const {
    std::lock_guard lock(mu_);
    return state_;
  }

  const DatasetManifest& manifest() const noexcept { return manifest_; }
  const fs::path& project_path() const noexcept { return project_path_; }

  json project() const {
    std::lock_guard lock(mu_);
    json doc = project_to_json(state_);
    doc["observed_correction_ratio"] = observed_correction_ratio(manifest_, state_.corrections);
    doc["candidate_total"] = state_.all_candidates().size();
    return doc;
  }

  json advance(const json& body) {
    std::lock_guard lock(mu_);
    const auto target = parse_stage(require_string(body, "target"));
    if (!target) fail(ErrorCode::BadRequest, "unknown stage");
    commit(advance_stage(state_, *target));
    return project_to_json(state_);
  }

  json classes() const {
    std::lock_guard lock(mu_);
    json out = json::array();
    for (const auto& a : state_.artifacts)
      out.push_back({{"label", a.label},
                     {"size", a.size},
                     {"skipped", a.skipped},
                     {"degenerate", a.degenerate},
                     {"candidates", a.candidates.size()}});
    return out;
  }

  json scatter(const std::string& label) const {
    std::lock_guard lock(mu_);
    const ArtifactRef& ref = artifact_ref(label);
    json points = json::array();
    if (ref.skipped) return points;
    const AnalysisArtifact art = load_artifact(resolve_path(project_dir(), ref.path));
    const std::set<std::string> flagged(art.candidates.candidates.begin(),
                                        art.candidates.candidates.end());
    for (std::size_t i = 0; i < art.size(); ++i) {
      const std::string& id = art.embedding.ids[i];
      points.push_back({{"id", id},
                        {"x", art.embedding.coords[2 * i]},
                        {"y", art.embedding.coords[2 * i + 1]},
                        {"score", art.scores[i].score},
                        {"candidate", flagged.contains(id)},
                        {"label", effective_label(manifest_, state_.corrections, id)},
                        {"thumbnail_url", "/api/records/" + id + "/image"}});
    }
    return points;
  }

  json candidates(const std::string& label) const {
    std::lock_guard lock(mu_);
    const ArtifactRef& ref = artifact_ref(label);
    json out = json::array();
    for (const auto& id : ref.candidates)
      out.push_back({{"id", id}, {"selected", state_.edge_selection.contains(id)}});
    return out;
  }

  /// Image bytes and content type for a manifest record.
  std::pair<std::string, std::string> record_image(const std::string& id) const {
    const auto where = manifest_.find(id);
    if (!where) fail(ErrorCode::UnknownRecord, id);
    const fs::path path =
        resolve_path(manifest_path().parent_path(), manifest_.records[*where].path);
    return {read_text_file(path), content_type_for(path)};
  }

  json post_correction(const json& body) {
    std::lock_guard lock(mu_);
    const std::string id = require_string(body, "record_id");
    const std::string label = require_string(body, "new_label");
    ProjectState next = enter(Stage::LabelReview, "label corrections");
    apply_correction(next.corrections, manifest_, id, label);
    commit(std::move(next));
    return correction_view(id);
  }

  json delete_correction(const std::string& id) {
    std::lock_guard lock(mu_);
    ProjectState next = enter(Stage::LabelReview, "label corrections");
    revert_correction(next.corrections, manifest_, id);
    commit(std::move(next));
    return correction_view(id);
  }

  /// Re-runs the per-class analysis with corrections applied.
  json reanalyze_classes() {
    std::lock_guard lock(mu_);
    commit(reanalyze(state_, project_path_, workers_));
    return project_to_json(state_);
  }

  /// {ids: [...]} replaces the selection; {select_all: true} selects every
  /// candidate of every class.
  json post_edge_cases(const json& body) {
    std::lock_guard lock(mu_);
    ProjectState next = enter(Stage::EdgeSelection, "edge-case selection");
    if (body.is_object() && body.value("select_all", false)) {
      next.edge_selection = next.all_candidates();
    } else if (body.is_object() && body.contains("ids") && body.at("ids").is_array()) {
      std::set<std::string> ids;
      for (const auto& v : body.at("ids")) {
        if (!v.is_string()) fail(ErrorCode::BadRequest, "ids must be strings");
        ids.insert(v.get<std::string>());
      }
      next.edge_selection = std::move(ids);
      try {
        check_edge_selection(next);
      } catch (const Error& e) {
        fail(ErrorCode::BadRequest, e.detail());
      }
    } else {
      fail(ErrorCode::BadRequest, "expected {ids:[...]} or {select_all:true}");
    }
    commit(std::move(next));
    return {{"edge_selection", state_.edge_selection}};
  }

  json put_aug_config(const json& body) {
    std::lock_guard lock(mu_);
    if (!body.is_object()) fail(ErrorCode::BadRequest, "expected an object");
    if (state_.stage != Stage::EdgeSelection && state_.stage != Stage::AugConfig)
      fail(ErrorCode::IllegalTransition,
           "augmentation is configured after edge-case selection (stage is " +
               std::string(stage_name(state_.stage)) + ")");
    ProjectState next = state_;
    next.aug_config = aug_config_from_json(body, state_.aug_config);
    if (next.stage == Stage::EdgeSelection) next = advance_stage(std::move(next), Stage::AugConfig);
    commit(std::move(next));
    return aug_config_to_json(state_.aug_config);
  }

  /// Starts an export on a background thread. Prerequisites are checked
  /// before returning.
  json start_export(const json& body) {
    std::lock_guard lock(mu_);
    const std::string out = require_string(body, "output_dir");
    if (export_running_) fail(ErrorCode::ExportInProgress, export_status_.value("output_dir", ""));
    ProjectState next = state_;
    if (next.stage == Stage::EdgeSelection) next = advance_stage(std::move(next), Stage::AugConfig);
    if (next.stage != Stage::AugConfig && next.stage != Stage::Exported)
      fail(ErrorCode::IllegalTransition,
           "export requires a completed edge-case selection (stage is " +
               std::string(stage_name(state_.stage)) + ")");
    next.aug_config.validate();
    if (next.aug_config.ratio > 0.0 && next.edge_selection.empty())
      fail(ErrorCode::EmptyEdgeSelection, "augmentation ratio is positive but no edge case is selected");
    commit(next);
    export_running_ = true;
    export_status_ = {{"state", "running"}, {"output_dir", out}};
    if (export_thread_.joinable()) export_thread_.join();
    export_thread_ = std::thread([this, snapshot = std::move(next), out] { run_export(snapshot, out); });
    return export_status_;
  }

  json export_status() const {
    std::lock_guard lock(mu_);
    return export_status_;
  }

  void wait_for_export() {
    if (export_thread_.joinable()) export_thread_.join();
  }

  /// Synchronous export used by the CLI.
  ExportResult export_now(const fs::path& output_dir) {
    start_export({{"output_dir", output_dir.string()}});
    wait_for_export();
    std::lock_guard lock(mu_);
    if (last_error_) throw *last_error_;
    return std::move(*last_result_);
  }

 private:
  fs::path project_dir() const { return project_path_.parent_path(); }
  fs::path manifest_path() const { return resolve_path(project_dir(), state_.manifest_path); }

  static std::string content_type_for(const fs::path& path) {
    std::string ext = path.extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".png") return "image/png";
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".gif") return "image/gif";
    if (ext == ".bmp") return "image/bmp";
    if (ext == ".webp") return "image/webp";
    return "application/octet-stream";
  }

  static std::string require_string(const json& body, const char* key) {
    if (!body.is_object() || !body.contains(key) || !body.at(key).is_string())
      fail(ErrorCode::BadRequest, std::string("missing string field '") + key + "'");
    return body.at(key).get<std::string>();
  }

  const ArtifactRef& artifact_ref(const std::string& label) const {
    if (!manifest_.has_class(label)) fail(ErrorCode::UnknownClass, label);
    const ArtifactRef* ref = state_.artifact(label);
    if (!ref) fail(ErrorCode::MissingPrerequisite, "class '" + label + "' has not been analyzed");
    return *ref;
  }

  /// Copy of the state moved forward to `stage`; rejects requests that
  /// arrive before analysis or after the stage has passed.
  ProjectState enter(Stage stage, const std::string& what) const {
    if (state_.stage == Stage::Initialized || static_cast<int>(state_.stage) > static_cast<int>(stage))
      fail(ErrorCode::IllegalTransition,
           what + " not accepted at stage " + std::string(stage_name(state_.stage)));
    return advance_to(state_, stage);
  }

  json correction_view(const std::string& id) const {
    return {{"record_id", id},
            {"label", effective_label(manifest_, state_.corrections, id)},
            {"corrections", state_.corrections.size()}};
  }

  /// Persists then publishes. Caller holds the mutex.
  void commit(ProjectState next) {
    save_project(next, project_path_);
    state_ = std::move(next);
  }

  void run_export(ProjectState snapshot, const std::string& out) {
    try {
      ExportResult result = compose_export(snapshot, snapshot.aug_config, out, project_dir(), workers_);
      std::lock_guard lock(mu_);
      ProjectState next = state_;
      next.last_export = ExportRecord{out, result.original_count, result.augmented_count};
      if (next.stage == Stage::AugConfig) next = advance_stage(std::move(next), Stage::Exported);
      commit(std::move(next));
      export_status_ = {{"state", "done"},
                        {"output_dir", out},
                        {"original_count", result.original_count},
                        {"augmented_count", result.augmented_count}};
      last_result_ = std::move(result);
      last_error_.reset();
      export_running_ = false;
    } catch (const Error& e) {
      std::lock_guard lock(mu_);
      export_status_ = {{"state", "failed"}, {"output_dir", out},
                        {"code", code_name(e.code())}, {"message", e.detail()}};
      last_error_ = e;
      export_running_ = false;
    } catch (const std::exception& e) {
      std::lock_guard lock(mu_);
      export_status_ = {{"state", "failed"}, {"output_dir", out},
                        {"code", code_name(ErrorCode::IoFailure)}, {"message", e.what()}};
      last_error_ = Error(ErrorCode::IoFailure, e.what());
      export_running_ = false;
    }
  }

  fs::path project_path_;
  std::size_t workers_;
  mutable std::mutex mu_;
  ProjectState state_;
  DatasetManifest manifest_;
  std::thread export_thread_;
  bool export_running_ = false;
  json export_status_ = {{"state", "idle"}};
  std::optional<ExportResult> last_result_;
  std::optional<Error> last_error_;
};

}  // namespace autodc

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

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "autodc/embeddings.hpp"
#include "autodc/error.hpp"
#include "autodc/iforest.hpp"
#include "autodc/io.hpp"
#include "autodc/manifest.hpp"
#include "autodc/parallel.hpp"
#include "autodc/project.hpp"
#include "autodc/rng.hpp"
#include "autodc/tsne.hpp"

namespace autodc {

/// Everything the reviewer sees for one class: the 2-D map, anomaly scores
/// and the ranked edge-case candidates, all over the same ids.
struct AnalysisArtifact {
  std::string label;
  Embedding2D embedding;
  std::vector<AnomalyScore> scores;
  CandidateSet candidates;
  IForestConfig forest_config;
  bool skipped = false;
  bool degenerate = false;

  std::size_t size() const noexcept { return embedding.size(); }
};

/// Paths stored in a project are resolved against the project file's
/// directory when relative.
inline fs::path resolve_path(const fs::path& base_dir, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

inline AnalysisArtifact analyze_class(const ClassPartition& partition,
                                      const AnalysisConfig& config, std::uint64_t master_seed) {
  AnalysisArtifact art;
  art.label = partition.label;
  art.forest_config = config.forest;
  art.candidates = {partition.label, {}, config.forest.contamination};
  art.embedding.config = config.tsne;
  if (partition.size() == 0) {
    art.skipped = true;
    return art;
  }
  Stream sub_rng = derive_stream(master_seed, "subsample/" + partition.label);
  const ClassPartition sample = deterministic_subsample(partition, config.max_class_size, sub_rng);

  Stream tsne_rng = derive_stream(master_seed, "tsne/" + partition.label);
  art.embedding = run_tsne(sample.matrix, config.tsne, tsne_rng);
  art.degenerate = art.embedding.degenerate;

  if (sample.size() >= 2) {
    const IsolationForest forest =
        build_forest(sample.matrix, config.forest, master_seed, "iforest/" + partition.label);
    art.scores = score_all(forest, sample.matrix);
  } else {
    // A lone record cannot be isolated from anything; report the neutral score.
    art.scores = {{sample.matrix.ids.front(), 0.5, 0.0}};
  }
  art.candidates = rank_candidates(art.scores, config.forest.contamination, partition.label);
  return art;
}

inline json artifact_to_json(const AnalysisArtifact& a) {
  std::set<std::string> flagged(a.candidates.candidates.begin(), a.candidates.candidates.end());
  json points = json::array();
  for (std::size_t i = 0; i < a.embedding.size(); ++i) {
    const auto& s = a.scores[i];
    points.push_back({{"id", a.embedding.ids[i]},
                      {"x", round_significant(a.embedding.coords[2 * i])},
                      {"y", round_significant(a.embedding.coords[2 * i + 1])},
                      {"score", round_significant(s.score)},
                      {"mean_path_length", round_significant(s.mean_path_length)},
                      {"candidate", flagged.contains(s.record_id)}});
  }
  json trace = json::array();
  for (const auto& k : a.embedding.kl_trace) trace.push_back({k.iteration, round_significant(k.kl)});
  return {{"label", a.label},
          {"n", a.embedding.size()},
          {"skipped", a.skipped},
          {"degenerate", a.degenerate},
          {"final_kl", round_significant(a.embedding.final_kl)},
          {"effective_perplexity", round_significant(a.embedding.effective_perplexity)},
          {"kl_trace", std::move(trace)},
          {"config", {{"tsne", a.embedding.config}, {"forest", a.forest_config}}},
          {"points", std::move(points)},
          {"candidates", a.candidates.candidates}};
}

inline AnalysisArtifact artifact_from_json(const json& j) {
  AnalysisArtifact a;
  try {
    a.label = j.at("label").get<std::string>();
    a.skipped = j.at("skipped").get<bool>();
    a.degenerate = j.at("degenerate").get<bool>();
    a.embedding.final_kl = j.at("final_kl").get<double>();
    a.embedding.effective_perplexity = j.at("effective_perplexity").get<double>();
    a.embedding.degenerate = a.degenerate;
    for (const auto& k : j.at("kl_trace"))
      a.embedding.kl_trace.push_back({k.at(0).get<int>(), k.at(1).get<double>()});
    a.embedding.config = j.at("config").at("tsne").get<TsneConfig>();
    a.forest_config = j.at("config").at("forest").get<IForestConfig>();
    for (const auto& p : j.at("points")) {
      const auto id = p.at("id").get<std::string>();
      a.embedding.ids.push_back(id);
      a.embedding.coords.push_back(p.at("x").get<double>());
      a.embedding.coords.push_back(p.at("y").get<double>());
      a.scores.push_back({id, p.at("score").get<double>(), p.at("mean_path_length").get<double>()});
    }
    a.candidates = {a.label, j.at("candidates").get<std::vector<std::string>>(),
                    a.forest_config.contamination};
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedDocument, std::string("artifact: ") + e.what());
  }
  return a;
}

inline AnalysisArtifact load_artifact(const fs::path& path) {
  return artifact_from_json(read_json_file(path));
}

/// Directory holding per-class artifacts for the project at `project_path`.
inline fs::path artifact_dir_for(const fs::path& project_path) {
  return project_path.parent_path() / (project_path.filename().string() + ".artifacts");
}

/// Runs the per-class analysis with the current corrections applied, writes
/// one artifact file per class and returns refs to them in class order.
inline std::vector<ArtifactRef> run_analysis(const ProjectState& state,
                                             const fs::path& project_path,
                                             std::size_t workers = default_worker_count()) {
  state.analysis_config.validate();
  const fs::path base = project_path.parent_path();
  const DatasetManifest manifest = load_manifest(resolve_path(base, state.manifest_path));
  const EmbeddingMatrix matrix =
      parse_embeddings(resolve_path(base, state.embeddings_path), manifest);
  const auto partitions = partition_by_class(matrix, manifest, state.corrections);

  const fs::path dir = artifact_dir_for(project_path);
  std::vector<ArtifactRef> refs(partitions.size());
  parallel_for(
      partitions.size(),
      [&](std::size_t i) {
        const auto& part = partitions[i];
        AnalysisArtifact art;
        try {
          art = analyze_class(part, state.analysis_config, state.master_seed);
        } catch (const Error& e) {
          throw Error(e.code(), "class '" + part.label + "': " + e.detail());
        }
        ArtifactRef& ref = refs[i];
        ref.label = part.label;
        ref.size = part.size();
        ref.skipped = art.skipped;
        ref.degenerate = art.degenerate;
        ref.candidates = art.candidates.candidates;
        if (!art.skipped) {
          const fs::path file = dir / (part.label + ".json");
          write_file_atomic(file, artifact_to_json(art).dump(1) + "\n");
          ref.path = fs::relative(file, base.empty() ? fs::path(".") : base).generic_string();
        }
      },
      workers);
  return refs;
}

/// First analysis pass: Initialized -> Analyzed.
inline ProjectState analyze(ProjectState state, const fs::path& project_path,
                            std::size_t workers = default_worker_count()) {
  if (state.stage != Stage::Initialized)
    fail(ErrorCode::IllegalTransition,
         std::string(stage_name(state.stage)) + " -> " + std::string(stage_name(Stage::Analyzed)));
  state.artifacts = run_analysis(state, project_path, workers);
  return advance_stage(std::move(state), Stage::Analyzed);
}

/// Recomputes artifacts after label corrections without changing the stage.
/// Only allowed before edge-case selection has started.
inline ProjectState reanalyze(ProjectState state, const fs::path& project_path,
                              std::size_t workers = default_worker_count()) {
  if (state.stage != Stage::Analyzed && state.stage != Stage::LabelReview)
    fail(ErrorCode::IllegalTransition,
         "re-analysis is only possible during label review (stage is " +
             std::string(stage_name(state.stage)) + ")");
  state.artifacts = run_analysis(state, project_path, workers);
  const auto candidates = state.all_candidates();
  std::erase_if(state.edge_selection, [&](const std::string& id) { return !candidates.contains(id); });
  return state;
}

}  // namespace autodc

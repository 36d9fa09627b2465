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

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "autodc/corrections.hpp"
#include "autodc/manifest.hpp"
#include "autodc/project.hpp"
#include "gtest/gtest.h"
#include "test_support.hpp"

namespace autodc {
namespace {

using testing::TempDir;

DatasetManifest roman() {
  return manifest_from_json(json::parse(R"({
    "name": "roman", "classes": ["i", "ii", "iii"],
    "records": [
      {"id": "r1", "path": "a.png", "label": "i"},
      {"id": "r2", "path": "b.png", "label": "ii"},
      {"id": "r3", "path": "c.png", "label": "iii", "origin": "original"}
    ]})"));
}

TEST(Manifest, MinimalManifestLoads) {
  TempDir dir;
  std::ofstream(dir / "m.json")
      << R"({"classes":["i"],"records":[{"id":"r1","path":"a.png","label":"i","origin":"original"}]})";
  const auto m = load_manifest(dir / "m.json");
  ASSERT_EQ(m.records.size(), 1u);
  EXPECT_EQ(m.records[0].id, "r1");
  EXPECT_EQ(m.records[0].origin, Origin::Original);
  EXPECT_FALSE(m.records[0].source_id.has_value());
}

TEST(Manifest, OriginDefaultsToOriginal) {
  EXPECT_EQ(roman().records[0].origin, Origin::Original);
}

TEST(Manifest, DuplicateIdRejected) {
  EXPECT_ERROR(manifest_from_json(json::parse(R"({"classes":["i"],"records":[
      {"id":"r1","path":"a.png","label":"i"},{"id":"r1","path":"b.png","label":"i"}]})")),
               ErrorCode::DuplicateId);
}

TEST(Manifest, UnknownLabelRejected) {
  try {
    manifest_from_json(json::parse(
        R"({"classes":["i","ii"],"records":[{"id":"r1","path":"a.png","label":"v"}]})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownLabel);
    EXPECT_EQ(e.detail(), "r1, v");
  }
}

TEST(Manifest, EmptyClassListRejected) {
  EXPECT_ERROR(manifest_from_json(json::parse(R"({"classes":[],"records":[]})")),
               ErrorCode::EmptyClassList);
}

TEST(Manifest, SourceIdRequiredExactlyForAugmented) {
  EXPECT_ERROR(manifest_from_json(json::parse(R"({"classes":["i"],"records":[
      {"id":"r1","path":"a.png","label":"i","origin":"augmented"}]})")),
               ErrorCode::MalformedDocument);
  EXPECT_ERROR(manifest_from_json(json::parse(R"({"classes":["i"],"records":[
      {"id":"r1","path":"a.png","label":"i","source_id":"r0"}]})")),
               ErrorCode::MalformedDocument);
}

TEST(Manifest, MissingAndMalformedFiles) {
  TempDir dir;
  EXPECT_ERROR(load_manifest(dir / "absent.json"), ErrorCode::MissingFile);
  std::ofstream(dir / "bad.json") << R"({"classes":["i"],"recor)";
  EXPECT_ERROR(load_manifest(dir / "bad.json"), ErrorCode::MalformedDocument);
}

TEST(Manifest, PathUnsafeNamesRejected) {
  EXPECT_ERROR(manifest_from_json(json::parse(R"({"classes":["../x"],"records":[]})")),
               ErrorCode::MalformedDocument);
}

TEST(Manifest, JsonRoundTrip) {
  DatasetManifest m = roman();
  m.records.push_back({"r1__aug0", "x.png", "i", Origin::Augmented, "r1"});
  EXPECT_EQ(manifest_from_json(manifest_to_json(m)), m);
}

TEST(EffectiveLabel, NoCorrectionIsManifestLabel) {
  EXPECT_EQ(effective_label(roman(), {}, "r1"), "i");
}

TEST(EffectiveLabel, SingleCorrection) {
  EXPECT_EQ(effective_label(roman(), {{"r1", "i", "ii"}}, "r1"), "ii");
}

TEST(EffectiveLabel, LatestCorrectionWins) {
  const std::vector<LabelCorrection> history = {{"r1", "i", "ii"}, {"r1", "ii", "iii"}};
  EXPECT_EQ(effective_label(roman(), history, "r1"), "iii");
}

TEST(EffectiveLabel, UnknownRecord) {
  EXPECT_ERROR(effective_label(roman(), {}, "nope"), ErrorCode::UnknownRecord);
}

TEST(EffectiveLabel, TotalOverManifestAndInClasses) {
  const auto m = roman();
  Stream rng(77);
  std::vector<LabelCorrection> history;
  for (int step = 0; step < 200; ++step) {
    const auto& rec = m.records[rng.below(m.records.size())];
    apply_correction(history, m, rec.id, m.classes[rng.below(m.classes.size())]);
    for (const auto& r : m.records) ASSERT_TRUE(m.has_class(effective_label(m, history, r.id)));
  }
  const auto all = effective_labels(m, history);
  for (std::size_t i = 0; i < m.records.size(); ++i)
    EXPECT_EQ(all[i], effective_label(m, history, m.records[i].id));
}

TEST(Corrections, RepeatedCorrectionIsIdempotent) {
  const auto m = roman();
  std::vector<LabelCorrection> history;
  EXPECT_TRUE(apply_correction(history, m, "r1", "ii"));
  EXPECT_FALSE(apply_correction(history, m, "r1", "ii"));
  ASSERT_EQ(history.size(), 1u);
  EXPECT_EQ(history[0], (LabelCorrection{"r1", "i", "ii"}));
}

TEST(Corrections, TargetMustBeManifestClass) {
  std::vector<LabelCorrection> history;
  EXPECT_ERROR(apply_correction(history, roman(), "r1", "iv"), ErrorCode::InvalidCorrection);
}

TEST(Corrections, RevertAppendsInverseAndKeepsHistory) {
  const auto m = roman();
  std::vector<LabelCorrection> history;
  apply_correction(history, m, "r2", "iii");
  revert_correction(history, m, "r2");
  EXPECT_EQ(history.size(), 2u);
  EXPECT_EQ(effective_label(m, history, "r2"), "ii");
  EXPECT_ERROR(revert_correction(history, m, "r2"), ErrorCode::NoActiveCorrection);
}

TEST(Corrections, ObservedRatioCountsChangedRecords) {
  const auto m = roman();
  std::vector<LabelCorrection> history;
  EXPECT_EQ(observed_correction_ratio(m, history), 0.0);
  apply_correction(history, m, "r1", "ii");
  EXPECT_DOUBLE_EQ(observed_correction_ratio(m, history), 1.0 / 3.0);
}

ProjectState analyzed_state() {
  ProjectState s;
  s.manifest_path = "/data/m.json";
  s.embeddings_path = "/data/e.csv";
  s.artifacts = {{"i", "a/i.json", 10, false, false, {"r1", "r3"}},
                 {"ii", "a/ii.json", 10, false, false, {"r2"}}};
  return s;
}

TEST(AdvanceStage, InitializedToAnalyzedWithArtifacts) {
  const auto s = advance_stage(analyzed_state(), Stage::Analyzed);
  EXPECT_EQ(s.stage, Stage::Analyzed);
}

TEST(AdvanceStage, AnalyzedRequiresArtifacts) {
  EXPECT_ERROR(advance_stage(ProjectState{}, Stage::Analyzed), ErrorCode::MissingPrerequisite);
}

TEST(AdvanceStage, SkippingAStageIsIllegal) {
  try {
    advance_stage(analyzed_state(), Stage::EdgeSelection);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IllegalTransition);
    EXPECT_EQ(e.detail(), "initialized -> edge_selection");
  }
}

TEST(AdvanceStage, LabelReviewToEdgeSelectionWithoutCorrections) {
  auto s = advance_to(analyzed_state(), Stage::LabelReview);
  ASSERT_TRUE(s.corrections.empty());
  s = advance_stage(s, Stage::EdgeSelection);
  EXPECT_EQ(s.stage, Stage::EdgeSelection);
}

TEST(AdvanceStage, SelectionMustBeCandidates) {
  auto s = advance_to(analyzed_state(), Stage::EdgeSelection);
  s.edge_selection = {"r1", "r9"};
  EXPECT_ERROR(advance_stage(s, Stage::AugConfig), ErrorCode::MissingPrerequisite);
  s.edge_selection = {"r1", "r2"};
  EXPECT_EQ(advance_stage(s, Stage::AugConfig).stage, Stage::AugConfig);
}

TEST(AdvanceStage, ExportedRequiresExportRecord) {
  auto s = advance_to(analyzed_state(), Stage::AugConfig);
  EXPECT_ERROR(advance_stage(s, Stage::Exported), ErrorCode::MissingPrerequisite);
  s.last_export = ExportRecord{"/out", 10, 2};
  EXPECT_EQ(advance_stage(s, Stage::Exported).stage, Stage::Exported);
}

TEST(AdvanceStage, NeverMovesBackward) {
  auto s = advance_to(analyzed_state(), Stage::LabelReview);
  EXPECT_ERROR(advance_stage(s, Stage::Analyzed), ErrorCode::IllegalTransition);
  EXPECT_ERROR(advance_stage(s, Stage::LabelReview), ErrorCode::IllegalTransition);
}

TEST(AdvanceStage, SuccessfulSequencesAreStrictlyIncreasing) {
  Stream rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    ProjectState s = analyzed_state();
    s.last_export = ExportRecord{"/out", 1, 0};
    std::vector<int> seen{static_cast<int>(s.stage)};
    for (int step = 0; step < 12; ++step) {
      const Stage target = kAllStages[rng.below(kAllStages.size())];
      try {
        s = advance_stage(s, target);
        seen.push_back(static_cast<int>(s.stage));
      } catch (const Error&) {
      }
    }
    for (std::size_t i = 1; i < seen.size(); ++i) ASSERT_EQ(seen[i], seen[i - 1] + 1);
  }
}

TEST(ProjectFile, FreshStateRoundTrips) {
  TempDir dir;
  ProjectState s;
  s.manifest_path = "m.json";
  s.embeddings_path = "e.csv";
  s.master_seed = 0xfedcba9876543210ULL;
  save_project(s, dir / "p.json");
  EXPECT_EQ(load_project(dir / "p.json"), s);
}

TEST(ProjectFile, CorrectionsAndSelectionsRoundTrip) {
  TempDir dir;
  ProjectState s = analyzed_state();
  s.stage = Stage::EdgeSelection;
  s.corrections = {{"r1", "i", "ii"}, {"r2", "ii", "i"}, {"r1", "ii", "iii"}};
  for (int i = 0; i < 40; ++i) s.edge_selection.insert("rec" + std::to_string(i));
  s.artifacts[0].candidates.assign(s.edge_selection.begin(), s.edge_selection.end());
  save_project(s, dir / "p.json");
  EXPECT_EQ(load_project(dir / "p.json"), s);
}

ProjectState random_state(Stream& rng) {
  ProjectState s;
  s.manifest_path = "m" + std::to_string(rng.below(1000)) + ".json";
  s.embeddings_path = "e" + std::to_string(rng.below(1000)) + ".csv";
  s.stage = kAllStages[rng.below(kAllStages.size())];
  s.master_seed = rng.next();
  s.analysis_config.tsne.perplexity = rng.uniform(1.0, 80.0);
  s.analysis_config.tsne.learning_rate = rng.uniform(10.0, 1000.0);
  s.analysis_config.tsne.iters = static_cast<int>(rng.below(2000));
  s.analysis_config.forest.trees = 1 + static_cast<int>(rng.below(300));
  s.analysis_config.forest.subsample = 2 + rng.below(500);
  s.analysis_config.forest.contamination = rng.uniform(0.01, 0.5);
  s.analysis_config.max_class_size = 2 + rng.below(10000);
  const std::size_t n_corr = rng.below(6);
  for (std::size_t i = 0; i < n_corr; ++i)
    s.corrections.push_back({"r" + std::to_string(rng.below(50)), "a", "b"});
  std::vector<std::string> cands;
  for (std::size_t i = 0, n = rng.below(30); i < n; ++i) cands.push_back("c" + std::to_string(i));
  for (const auto& c : cands)
    if (rng.coin()) s.edge_selection.insert(c);
  s.artifacts.push_back({"i", "x/i.json", rng.below(100), rng.coin(), rng.coin(), cands});
  s.aug_config.ratio = rng.uniform(0.0, 0.5);
  s.aug_config.enabled.clear();
  for (Technique t : kAllTechniques)
    if (rng.coin()) s.aug_config.enabled.push_back(t);
  if (s.aug_config.enabled.empty()) s.aug_config.enabled.push_back(Technique::Flip);
  s.aug_config.range(Technique::GaussianNoise) = {rng.uniform(0, 10), rng.uniform(10, 80)};
  s.aug_config.range(Technique::Rotation) = {-rng.uniform(0, 90), rng.uniform(0, 90)};
  if (rng.coin()) s.last_export = ExportRecord{"/o" + std::to_string(rng.below(9)), rng.below(99), rng.below(9)};
  return s;
}

TEST(ProjectFile, RandomStatesRoundTrip) {
  TempDir dir;
  Stream rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const ProjectState s = random_state(rng);
    save_project(s, dir / "p.json");
    ASSERT_EQ(load_project(dir / "p.json"), s) << "trial " << trial;
  }
}

TEST(ProjectFile, TruncatedFileIsMalformed) {
  TempDir dir;
  save_project(analyzed_state(), dir / "p.json");
  const std::string text = read_text_file(dir / "p.json");
  std::ofstream(dir / "p.json", std::ios::trunc) << text.substr(0, text.size() / 2);
  EXPECT_ERROR(load_project(dir / "p.json"), ErrorCode::MalformedDocument);
}

TEST(ProjectFile, SchemaVersionMismatch) {
  TempDir dir;
  json doc = project_to_json(analyzed_state());
  doc["schema_version"] = 2;
  std::ofstream(dir / "p.json") << doc.dump();
  EXPECT_ERROR(load_project(dir / "p.json"), ErrorCode::SchemaVersionMismatch);
}

TEST(ProjectFile, MissingFile) {
  TempDir dir;
  EXPECT_ERROR(load_project(dir / "nothing.json"), ErrorCode::MissingFile);
}

}  // namespace
}  // namespace autodc

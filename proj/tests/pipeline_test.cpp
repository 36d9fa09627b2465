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

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "autodc/analysis.hpp"
#include "autodc/cli.hpp"
#include "autodc/http.hpp"
#include "autodc/workbench.hpp"
#include "gtest/gtest.h"
#include "httplib.h"
#include "test_support.hpp"

namespace autodc {
namespace {

using testing::TempDir;

const fs::path kToy = fs::path(AUTODC_FIXTURE_DIR) / "toy";

int cli(std::vector<std::string> args, std::string* out_text = nullptr,
        std::string* err_text = nullptr) {
  args.insert(args.begin(), "autodc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return rc;
}

/// A project over the toy fixture, initialized and optionally analyzed.
class ToyProject : public ::testing::Test {
 protected:
  void init(bool analyze_it = true) {
    ASSERT_EQ(cli({"init", "--manifest", (kToy / "dataset.json").string(), "--embeddings",
                   (kToy / "embeddings.csv").string(), "--project", project().string(),
                   "--seed", "17"}),
              0);
    if (analyze_it) ASSERT_EQ(cli({"analyze", "--project", project().string()}), 0);
  }
  fs::path project() const { return dir / "toy.autodc.json"; }

  TempDir dir;
};

TEST_F(ToyProject, InitCreatesInitializedProject) {
  init(false);
  const auto state = load_project(project());
  EXPECT_EQ(state.stage, Stage::Initialized);
  EXPECT_EQ(state.master_seed, 17u);
  EXPECT_TRUE(fs::path(state.manifest_path).is_absolute());
  EXPECT_TRUE(state.artifacts.empty());
}

TEST_F(ToyProject, AnalysisFlagsMislabeledRecord) {
  init();
  const auto state = load_project(project());
  EXPECT_EQ(state.stage, Stage::Analyzed);
  ASSERT_EQ(state.artifacts.size(), 2u);
  for (const auto& a : state.artifacts) {
    EXPECT_EQ(a.size, 20u);
    EXPECT_EQ(a.candidates.size(), 3u);
    EXPECT_FALSE(a.skipped);
    EXPECT_TRUE(fs::exists(project().parent_path() / a.path));
  }
  const auto& cands = state.artifact("i")->candidates;
  EXPECT_NE(std::find(cands.begin(), cands.end(), "ii_20"), cands.end());
}

TEST_F(ToyProject, ArtifactRoundTrips) {
  init();
  const auto state = load_project(project());
  const auto art = load_artifact(project().parent_path() / state.artifacts[0].path);
  EXPECT_EQ(art.label, "i");
  EXPECT_EQ(art.size(), 20u);
  EXPECT_EQ(art.embedding.kl_trace.size(), 20u);
  EXPECT_EQ(art.candidates.candidates, state.artifacts[0].candidates);
  const auto again = artifact_from_json(artifact_to_json(art));
  EXPECT_EQ(artifact_to_json(again).dump(), artifact_to_json(art).dump());
}

TEST_F(ToyProject, AnalysisIsDeterministic) {
  init();
  const auto first = read_text_file(artifact_dir_for(project()) / "i.json");
  TempDir other;
  const fs::path p2 = other / "p.json";
  ASSERT_EQ(cli({"init", "--manifest", (kToy / "dataset.json").string(), "--embeddings",
                 (kToy / "embeddings.csv").string(), "--project", p2.string(), "--seed", "17"}),
            0);
  ASSERT_EQ(cli({"analyze", "--project", p2.string()}), 0);
  EXPECT_EQ(read_text_file(artifact_dir_for(p2) / "i.json"), first);
}

TEST_F(ToyProject, SecondAnalyzeIsIllegal) {
  init();
  std::string err;
  EXPECT_EQ(cli({"analyze", "--project", project().string()}, nullptr, &err), 1);
  EXPECT_NE(err.find("illegal_transition"), std::string::npos) << err;
}

TEST_F(ToyProject, EmptiedClassIsSkipped) {
  init();
  Workbench bench(project());
  for (const auto& r : bench.manifest().records)
    if (r.label == "ii") bench.post_correction({{"record_id", r.id}, {"new_label", "i"}});
  bench.reanalyze_classes();
  const auto state = bench.snapshot();
  EXPECT_TRUE(state.artifact("ii")->skipped);
  EXPECT_EQ(state.artifact("i")->size, 40u);
  EXPECT_EQ(state.artifact("i")->candidates.size(), 5u);
  EXPECT_TRUE(bench.scatter("ii").empty());
}

TEST_F(ToyProject, CorrectionsAreIdempotentAndDurable) {
  init();
  {
    Workbench bench(project());
    const json body = {{"record_id", "ii_20"}, {"new_label", "ii"}};
    const json a = bench.post_correction(body);
    const json b = bench.post_correction(body);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.at("corrections"), 1);
    EXPECT_EQ(bench.snapshot().stage, Stage::LabelReview);
  }
  Workbench reopened(project());
  const auto state = reopened.snapshot();
  ASSERT_EQ(state.corrections.size(), 1u);
  EXPECT_EQ(effective_label(state, reopened.manifest(), "ii_20"), "ii");
  EXPECT_DOUBLE_EQ(reopened.project().at("observed_correction_ratio").get<double>(), 1.0 / 40.0);
  reopened.delete_correction("ii_20");
  EXPECT_EQ(effective_label(reopened.snapshot(), reopened.manifest(), "ii_20"), "i");
  EXPECT_ERROR(reopened.delete_correction("ii_20"), ErrorCode::NoActiveCorrection);
}

TEST_F(ToyProject, CorrectionRequiresAnalysis) {
  init(false);
  Workbench bench(project());
  EXPECT_ERROR(bench.post_correction({{"record_id", "i_00"}, {"new_label", "ii"}}),
               ErrorCode::IllegalTransition);
}

TEST_F(ToyProject, SelectAllIsUnionOfCandidates) {
  init();
  std::string out;
  ASSERT_EQ(cli({"select-all-candidates", "--project", project().string()}, &out), 0);
  const auto state = load_project(project());
  EXPECT_EQ(state.stage, Stage::EdgeSelection);
  EXPECT_EQ(state.edge_selection, state.all_candidates());
  EXPECT_EQ(state.edge_selection.size(), 6u);
  EXPECT_NE(out.find("selected 6"), std::string::npos);
}

TEST_F(ToyProject, EdgeCaseIdsMustBeCandidates) {
  init();
  Workbench bench(project());
  EXPECT_ERROR(bench.post_edge_cases({{"ids", std::vector<std::string>{"i_00", "not-a-record"}}}),
               ErrorCode::BadRequest);
  EXPECT_ERROR(bench.post_edge_cases(json::object()), ErrorCode::BadRequest);
  const auto cands = bench.snapshot().artifact("ii")->candidates;
  const json res = bench.post_edge_cases({{"ids", std::vector<std::string>{cands[0]}}});
  EXPECT_EQ(res.at("edge_selection").size(), 1u);
}

TEST_F(ToyProject, AugConfigOnlyAfterSelection) {
  init();
  Workbench bench(project());
  EXPECT_ERROR(bench.put_aug_config({{"ratio", 0.3}}), ErrorCode::IllegalTransition);
  bench.post_edge_cases({{"select_all", true}});
  EXPECT_ERROR(bench.put_aug_config({{"ratio", 0.9}}), ErrorCode::RatioOutOfRange);
  const json cfg = bench.put_aug_config({{"ratio", 0.3}, {"enabled", {"flip", "rotation"}}});
  EXPECT_EQ(cfg.at("ratio"), 0.3);
  EXPECT_EQ(bench.snapshot().stage, Stage::AugConfig);
}

TEST_F(ToyProject, ExportThroughWorkbench) {
  init();
  Workbench bench(project());
  bench.post_edge_cases({{"select_all", true}});
  const auto r = bench.export_now(dir / "out");
  EXPECT_EQ(r.original_count, 40u);
  EXPECT_EQ(r.augmented_count, 10u);
  EXPECT_EQ(bench.snapshot().stage, Stage::Exported);
  EXPECT_EQ(bench.export_status().at("state"), "done");
  // re-export is allowed
  EXPECT_EQ(bench.export_now(dir / "out2").augmented_count, 10u);
}

class HttpFixture : public ToyProject {
 protected:
  void start() {
    init();
    bench = std::make_unique<Workbench>(project());
    service = std::make_unique<HttpService>(*bench);
    port = service->bind("127.0.0.1", 0);
    server = std::thread([this] { service->run(); });
    service->wait_until_ready();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
  }
  void TearDown() override {
    if (service) service->stop();
    if (server.joinable()) server.join();
  }

  static json body(const httplib::Result& res) { return json::parse(res->body); }

  std::unique_ptr<Workbench> bench;
  std::unique_ptr<HttpService> service;
  std::thread server;
  std::unique_ptr<httplib::Client> client;
  int port = 0;
};

TEST_F(HttpFixture, ReviewFlow) {
  start();
  auto res = client->Get("/api/project");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(body(res).at("stage"), "analyzed");

  res = client->Get("/api/classes");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(body(res).size(), 2u);

  res = client->Get("/api/classes/i/scatter");
  ASSERT_EQ(res->status, 200);
  const json points = body(res);
  ASSERT_EQ(points.size(), 20u);
  for (const auto& p : points) {
    EXPECT_TRUE(p.contains("x") && p.contains("y") && p.contains("score"));
    EXPECT_EQ(p.at("thumbnail_url"), "/api/records/" + p.at("id").get<std::string>() + "/image");
  }

  res = client->Get("/api/records/i_00/image");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(res->body, read_text_file(kToy / "images/i_00.png"));

  res = client->Post("/api/corrections", R"({"record_id":"ii_20","new_label":"ii"})",
                     "application/json");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(body(res).at("label"), "ii");
  res = client->Delete("/api/corrections/ii_20");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(body(res).at("label"), "i");

  res = client->Post("/api/edge-cases", R"({"select_all":true})", "application/json");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(body(res).at("edge_selection").size(), 6u);

  res = client->Get("/api/classes/ii/candidates");
  ASSERT_EQ(res->status, 200);
  for (const auto& c : body(res)) EXPECT_TRUE(c.at("selected").get<bool>());

  res = client->Put("/api/augmentation/config", R"({"ratio":0.2})", "application/json");
  ASSERT_EQ(res->status, 200);

  const std::string out = (dir / "exported").string();
  res = client->Post("/api/export", json{{"output_dir", out}}.dump(), "application/json");
  ASSERT_EQ(res->status, 200);
  bench->wait_for_export();
  res = client->Get("/api/export/status");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(body(res).at("state"), "done");
  EXPECT_EQ(body(res).at("augmented_count"), 10);
  EXPECT_TRUE(fs::exists(fs::path(out) / "dataset.json"));
  EXPECT_EQ(body(client->Get("/api/project")).at("stage"), "exported");
}

TEST_F(HttpFixture, CorrectionShowsUpAfterReanalysis) {
  start();
  auto res = client->Post("/api/corrections", R"({"record_id":"ii_20","new_label":"ii"})",
                          "application/json");
  ASSERT_EQ(res->status, 200);
  res = client->Post("/api/analyze", "", "application/json");
  ASSERT_EQ(res->status, 200);
  res = client->Get("/api/classes/ii/scatter");
  ASSERT_EQ(res->status, 200);
  const json points = body(res);
  EXPECT_EQ(points.size(), 21u);
  bool found = false;
  for (const auto& p : points) found = found || p.at("id") == "ii_20";
  EXPECT_TRUE(found);
  EXPECT_EQ(body(client->Get("/api/classes/i/scatter")).size(), 19u);
}

TEST_F(HttpFixture, MutationsSurviveRestart) {
  start();
  client->Post("/api/corrections", R"({"record_id":"i_03","new_label":"ii"})", "application/json");
  client->Post("/api/edge-cases", R"({"select_all":true})", "application/json");
  service->stop();
  server.join();
  service.reset();
  bench.reset();
  Workbench reopened(project());
  const auto state = reopened.snapshot();
  EXPECT_EQ(state.stage, Stage::EdgeSelection);
  EXPECT_EQ(state.corrections.size(), 1u);
  EXPECT_EQ(state.edge_selection, state.all_candidates());
}

TEST_F(HttpFixture, ErrorsMapToStatusCodes) {
  start();
  auto res = client->Get("/api/classes/nope/scatter");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  EXPECT_EQ(body(res).at("code"), "unknown_class");

  res = client->Get("/api/records/nope/image");
  EXPECT_EQ(res->status, 404);
  EXPECT_EQ(body(res).at("code"), "unknown_record");

  res = client->Post("/api/project/advance", R"({"target":"aug_config"})", "application/json");
  EXPECT_EQ(res->status, 409);
  EXPECT_EQ(body(res).at("code"), "illegal_transition");

  res = client->Post("/api/corrections", "{not json", "application/json");
  EXPECT_EQ(res->status, 400);

  res = client->Post("/api/corrections", R"({"record_id":"i_00","new_label":"zz"})",
                     "application/json");
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(body(res).at("code"), "invalid_correction");

  res = client->Post("/api/export", R"({"output_dir":"/tmp/x"})", "application/json");
  EXPECT_EQ(res->status, 409);

  res = client->Delete("/api/corrections/i_00");
  EXPECT_EQ(res->status, 404);
  EXPECT_EQ(body(res).at("code"), "no_active_correction");
}

TEST_F(HttpFixture, AdvanceEndpoint) {
  start();
  auto res = client->Post("/api/project/advance", R"({"target":"label_review"})", "application/json");
  ASSERT_EQ(res->status, 200);
  res = client->Post("/api/project/advance", R"({"target":"edge_selection"})", "application/json");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(load_project(project()).stage, Stage::EdgeSelection);
  res = client->Post("/api/project/advance", R"({"target":"warp"})", "application/json");
  EXPECT_EQ(res->status, 400);
}

TEST_F(HttpFixture, PortInUse) {
  start();
  HttpService second(*bench);
  EXPECT_ERROR(second.bind("127.0.0.1", port), ErrorCode::PortInUse);
}

TEST_F(ToyProject, CliUsageAndStageErrors) {
  std::string err;
  EXPECT_EQ(cli({"export", "--project", "x.json"}, nullptr, &err), 2);
  EXPECT_EQ(cli({"frobnicate"}), 2);
  EXPECT_EQ(cli({"--help"}), 0);
  init();
  EXPECT_EQ(cli({"export", "--project", project().string(), "--out", (dir / "o").string()},
                nullptr, &err),
            1);
  EXPECT_NE(err.find("illegal_transition"), std::string::npos) << err;
  EXPECT_EQ(cli({"init", "--manifest", (kToy / "dataset.json").string(), "--embeddings",
                 (kToy / "embeddings.csv").string(), "--project", project().string()},
                nullptr, &err),
            1);
  EXPECT_EQ(cli({"analyze", "--project", (dir / "missing.json").string()}, nullptr, &err), 1);
  EXPECT_NE(err.find("missing_file"), std::string::npos) << err;
}

TEST_F(ToyProject, CliInitValidatesInputs) {
  TempDir bad;
  std::ofstream(bad / "e.csv") << "id,d0\ni_00,1\n";
  std::string err;
  EXPECT_EQ(cli({"init", "--manifest", (kToy / "dataset.json").string(), "--embeddings",
                 (bad / "e.csv").string(), "--project", project().string()},
                nullptr, &err),
            1);
  EXPECT_NE(err.find("missing_row"), std::string::npos) << err;
  EXPECT_FALSE(fs::exists(project()));
}

TEST(CliBinary, RunsEndToEnd) {
  TempDir dir;
  const std::string bin = AUTODC_CLI_PATH;
  const auto run = [&](const std::string& args) {
    return std::system((bin + " " + args + " > " + (dir / "log.txt").string() + " 2>&1").c_str());
  };
  const std::string p = (dir / "p.json").string();
  ASSERT_EQ(run("init --manifest " + (kToy / "dataset.json").string() + " --embeddings " +
                (kToy / "embeddings.csv").string() + " --project " + p),
            0);
  ASSERT_EQ(run("analyze --project " + p), 0);
  ASSERT_EQ(run("select-all-candidates --project " + p), 0);
  ASSERT_EQ(run("export --project " + p + " --out " + (dir / "out").string() + " --aug-ratio 0.2"), 0);
  const auto out = load_manifest(dir / "out/dataset.json");
  ASSERT_EQ(out.records.size(), 50u);
  std::size_t augmented = 0;
  for (const auto& r : out.records) augmented += r.origin == Origin::Augmented;
  EXPECT_DOUBLE_EQ(static_cast<double>(augmented) / static_cast<double>(out.records.size()), 0.2);
  EXPECT_NE(run("export --project " + p), 0);
}

}  // namespace
}  // namespace autodc

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

// `autodc` command line: init, analyze, serve, select-all-candidates, export.
// Exit status is 0 on success, 1 on operational errors and 2 on usage errors.

#include <csignal>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "autodc/analysis.hpp"
#include "autodc/embeddings.hpp"
#include "autodc/error.hpp"
#include "autodc/http.hpp"
#include "autodc/io.hpp"
#include "autodc/manifest.hpp"
#include "autodc/project.hpp"
#include "autodc/workbench.hpp"

namespace autodc {

inline constexpr std::uint64_t kDefaultMasterSeed = 0;

namespace detail {

inline HttpService* g_active_service = nullptr;

inline void stop_active_service(int) {
  if (g_active_service) g_active_service->stop();
}

inline std::vector<Technique> parse_technique_list(const std::string& spec) {
  if (spec == "all") return {kAllTechniques.begin(), kAllTechniques.end()};
  std::vector<Technique> out;
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    const auto t = parse_technique(item);
    if (!t) fail(ErrorCode::InvalidConfig, "unknown augmentation technique '" + item + "'");
    out.push_back(*t);
  }
  return out;
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Dataset-quality workbench: embedding analysis, label review, edge-case "
               "selection and augmentation export",
               "autodc"};
  app.require_subcommand(1);

  std::string manifest, embeddings, project, output;
  std::uint64_t seed = kDefaultMasterSeed;
  bool force = false;
  auto* init = app.add_subcommand("init", "Create a project from a manifest and an embeddings file");
  init->add_option("--manifest", manifest, "Dataset manifest (JSON)")->required();
  init->add_option("--embeddings", embeddings, "Embeddings CSV")->required();
  init->add_option("--project", project, "Project file to create")->required();
  init->add_option("--seed", seed, "Master seed for every random stream");
  init->add_flag("--force", force, "Overwrite an existing project file");

  std::optional<double> perplexity, contamination;
  std::optional<int> trees, iters;
  std::optional<std::size_t> subsample, max_class_size;
  bool rerun = false;
  auto* analyze_cmd = app.add_subcommand("analyze", "Run t-SNE and Isolation Forest per class");
  analyze_cmd->add_option("--project", project)->required();
  analyze_cmd->add_option("--perplexity", perplexity);
  analyze_cmd->add_option("--trees", trees);
  analyze_cmd->add_option("--subsample", subsample, "Isolation Forest subsample size");
  analyze_cmd->add_option("--contamination", contamination, "Fraction of each class flagged");
  analyze_cmd->add_option("--max-class-size", max_class_size);
  analyze_cmd->add_option("--iters", iters, "t-SNE iterations");
  analyze_cmd->add_flag("--rerun", rerun, "Recompute artifacts after label corrections");

  int port = 8080;
  std::string host = "127.0.0.1";
  std::string static_dir;
  auto* serve = app.add_subcommand("serve", "Serve the review API");
  serve->add_option("--project", project)->required();
  serve->add_option("--port", port);
  serve->add_option("--host", host);
  serve->add_option("--static", static_dir, "Directory of UI assets to serve at /");

  auto* select_all = app.add_subcommand("select-all-candidates",
                                        "Accept every edge-case candidate of every class");
  select_all->add_option("--project", project)->required();

  std::optional<double> aug_ratio;
  std::optional<std::string> techniques;
  auto* export_cmd = app.add_subcommand("export", "Write the improved dataset");
  export_cmd->add_option("--project", project)->required();
  export_cmd->add_option("--out", output)->required();
  export_cmd->add_option("--aug-ratio", aug_ratio, "Fraction of the output that is augmented");
  export_cmd->add_option("--techniques", techniques, "all, or a comma-separated list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (*init) {
      if (fs::exists(project) && !force)
        fail(ErrorCode::IoFailure, project + " exists (use --force to overwrite)");
      const DatasetManifest m = load_manifest(manifest);
      const EmbeddingMatrix e = parse_embeddings(embeddings, m);
      ProjectState state;
      state.manifest_path = fs::absolute(manifest).lexically_normal().string();
      state.embeddings_path = fs::absolute(embeddings).lexically_normal().string();
      state.master_seed = seed;
      save_project(state, project);
      out << "initialized " << project << ": " << m.records.size() << " records, "
          << m.classes.size() << " classes, " << e.dim << "-dim embeddings\n";
    } else if (*analyze_cmd) {
      ProjectState state = load_project(project);
      auto& cfg = state.analysis_config;
      if (perplexity) cfg.tsne.perplexity = *perplexity;
      if (iters) cfg.tsne.iters = *iters;
      if (trees) cfg.forest.trees = *trees;
      if (subsample) cfg.forest.subsample = *subsample;
      if (contamination) cfg.forest.contamination = *contamination;
      if (max_class_size) cfg.max_class_size = *max_class_size;
      state = rerun ? reanalyze(std::move(state), project) : analyze(std::move(state), project);
      save_project(state, project);
      for (const auto& a : state.artifacts) {
        out << a.label << ": ";
        if (a.skipped) {
          out << "empty, skipped\n";
        } else {
          out << a.size << " records, " << a.candidates.size() << " candidates"
              << (a.degenerate ? " (degenerate layout)" : "") << "\n";
        }
      }
    } else if (*serve) {
      Workbench bench(project);
      if (bench.snapshot().stage == Stage::Initialized)
        fail(ErrorCode::MissingPrerequisite, "run `autodc analyze` before serving");
      HttpService service(bench, static_dir);
      const int bound = service.bind(host, port);
      out << "listening on http://" << host << ":" << bound << std::endl;
      detail::g_active_service = &service;
      std::signal(SIGINT, detail::stop_active_service);
      std::signal(SIGTERM, detail::stop_active_service);
      service.run();
      detail::g_active_service = nullptr;
    } else if (*select_all) {
      Workbench bench(project);
      const json res = bench.post_edge_cases({{"select_all", true}});
      out << "selected " << res.at("edge_selection").size() << " edge cases\n";
    } else if (*export_cmd) {
      Workbench bench(project);
      if (aug_ratio || techniques) {
        json body = json::object();
        if (aug_ratio) body["ratio"] = *aug_ratio;
        if (techniques) body["enabled"] = technique_list_to_json(detail::parse_technique_list(*techniques));
        bench.put_aug_config(body);
      }
      const ExportResult r = bench.export_now(output);
      out << "exported " << r.original_count << " original + " << r.augmented_count
          << " augmented records to " << output << "\n";
    }
  } catch (const Error& e) {
    err << "autodc: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "autodc: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace autodc

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

// Composition of the improved dataset.
//
// Layout under the output directory:
//   images/<class>/<record_id>.png   every record, re-encoded losslessly
//   dataset.json                     manifest with origin/source_id filled in
//   augmentation_log.csv             new_id,source_id,copy_index,plan_json,stream_domain
//
// n_aug = round_half_up(r / (1 - r) * n_orig) augmented copies are generated by
// cycling over the selected edge cases in ascending id order; the copy index
// grows by one per full cycle. Copy k of record s is "<s>__aug<k>" and draws
// its plan from the stream "augment/<s>/<k>".

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "autodc/analysis.hpp"
#include "autodc/aug_config.hpp"
#include "autodc/augment.hpp"
#include "autodc/corrections.hpp"
#include "autodc/error.hpp"
#include "autodc/image.hpp"
#include "autodc/io.hpp"
#include "autodc/manifest.hpp"
#include "autodc/parallel.hpp"
#include "autodc/project.hpp"

namespace autodc {

struct AugmentationLogRow {
  std::string new_id;
  std::string source_id;
  std::size_t copy_index = 0;
  std::string plan_json;
  std::string stream_domain;

  bool operator==(const AugmentationLogRow&) const = default;
};

struct ExportResult {
  DatasetManifest manifest;
  std::vector<AugmentationLogRow> log;
  std::size_t original_count = 0;
  std::size_t augmented_count = 0;
};

inline std::size_t augmented_count_for(double ratio, std::size_t n_orig) {
  if (!(ratio >= 0.0 && ratio <= kMaxAugRatio))
    fail(ErrorCode::RatioOutOfRange, std::to_string(ratio));
  return static_cast<std::size_t>(round_half_up(ratio / (1.0 - ratio) * static_cast<double>(n_orig)));
}

inline std::string augmented_id(const std::string& source_id, std::size_t copy_index) {
  return source_id + "__aug" + std::to_string(copy_index);
}

inline std::string augment_stream_domain(const std::string& source_id, std::size_t copy_index) {
  return "augment/" + source_id + "/" + std::to_string(copy_index);
}

namespace detail {

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

/// RFC 4180 style record splitting; quoted fields may contain commas,
/// doubled quotes and newlines.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    any = true;
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) fail(ErrorCode::MalformedDocument, "unterminated quoted CSV field");
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

inline constexpr std::string_view kLogHeader = "new_id,source_id,copy_index,plan_json,stream_domain";

inline std::string format_augmentation_log(const std::vector<AugmentationLogRow>& rows) {
  std::string out(kLogHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += detail::csv_field(r.new_id) + ',' + detail::csv_field(r.source_id) + ',' +
           std::to_string(r.copy_index) + ',' + detail::csv_field(r.plan_json) + ',' +
           detail::csv_field(r.stream_domain) + '\n';
  }
  return out;
}

inline std::vector<AugmentationLogRow> parse_augmentation_log(std::string_view text) {
  const auto rows = detail::parse_csv(text);
  if (rows.empty()) fail(ErrorCode::MalformedDocument, "augmentation log is empty");
  std::vector<AugmentationLogRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 5) fail(ErrorCode::MalformedDocument, "log row " + std::to_string(i));
    out.push_back({r[0], r[1], std::stoul(r[2]), r[3], r[4]});
  }
  return out;
}

inline std::string image_relpath(const std::string& label, const std::string& id) {
  return "images/" + label + "/" + id + ".png";
}

/// Writes the improved dataset for `state` with augmentation settings
/// `config` into `output_dir`. The manifest path in `state` is resolved
/// against `project_dir`.
inline ExportResult compose_export(const ProjectState& state, const AugConfig& config,
                                   const fs::path& output_dir, const fs::path& project_dir,
                                   std::size_t workers = default_worker_count()) {
  if (state.stage != Stage::AugConfig && state.stage != Stage::Exported)
    fail(ErrorCode::IllegalTransition,
         "export requires stage aug_config (stage is " + std::string(stage_name(state.stage)) + ")");
  config.validate();
  if (config.ratio > 0.0 && state.edge_selection.empty())
    fail(ErrorCode::EmptyEdgeSelection, "augmentation ratio is positive but no edge case is selected");
  check_edge_selection(state);

  const fs::path manifest_path = resolve_path(project_dir, state.manifest_path);
  const DatasetManifest input = load_manifest(manifest_path);
  const fs::path source_dir = manifest_path.parent_path();
  const auto labels = effective_labels(input, state.corrections);
  const ManifestIndex index(input);

  ExportResult result;
  result.original_count = input.records.size();
  result.augmented_count = augmented_count_for(config.ratio, result.original_count);
  result.manifest.name = input.name;
  result.manifest.classes = input.classes;
  for (std::size_t i = 0; i < input.records.size(); ++i) {
    ImageRecord r = input.records[i];
    r.label = labels[i];
    r.path = image_relpath(r.label, r.id);
    result.manifest.records.push_back(std::move(r));
  }

  const std::vector<std::string> selection(state.edge_selection.begin(), state.edge_selection.end());
  for (std::size_t k = 0; k < result.augmented_count; ++k) {
    const std::string& source = selection[k % selection.size()];
    const std::size_t copy = k / selection.size();
    const auto where = index.find(source);
    if (!where) fail(ErrorCode::UnknownRecord, source);
    const std::string id = augmented_id(source, copy);
    if (index.find(id)) fail(ErrorCode::DuplicateId, id);
    result.manifest.records.push_back(
        {id, image_relpath(labels[*where], id), labels[*where], Origin::Augmented, source});
    result.log.push_back({id, source, copy, {}, augment_stream_domain(source, copy)});
  }
  validate_manifest(result.manifest);

  // Stale files from an earlier export into the same directory would break
  // the one-log-row-per-file property.
  const fs::path images_dir = output_dir / "images";
  if (fs::exists(images_dir)) {
    if (!fs::exists(output_dir / "dataset.json"))
      fail(ErrorCode::IoFailure, output_dir.string() + " holds an images/ directory not written by an export");
    std::error_code ec;
    fs::remove_all(images_dir, ec);
    if (ec) fail(ErrorCode::IoFailure, "cannot clear " + images_dir.string() + ": " + ec.message());
  }
  for (const auto& c : result.manifest.classes) fs::create_directories(images_dir / c);

  parallel_for(
      input.records.size(),
      [&](std::size_t i) {
        const ImageBuf img = read_png(resolve_path(source_dir, input.records[i].path));
        write_png(img, output_dir / result.manifest.records[i].path);
      },
      workers);

  parallel_for(
      result.log.size(),
      [&](std::size_t k) {
        AugmentationLogRow& row = result.log[k];
        Stream rng = derive_stream(state.master_seed, row.stream_domain);
        const AugPlan plan = sample_plan(row.source_id, row.copy_index, config, rng);
        row.plan_json = plan_to_json(plan).dump();
        const auto& src = input.records[*index.find(row.source_id)];
        const ImageBuf img = read_png(resolve_path(source_dir, src.path));
        write_png(apply_plan(img, plan),
                  output_dir / result.manifest.records[result.original_count + k].path);
      },
      workers);

  save_manifest(result.manifest, output_dir / "dataset.json");
  write_file_atomic(output_dir / "augmentation_log.csv", format_augmentation_log(result.log));
  return result;
}

}  // namespace autodc

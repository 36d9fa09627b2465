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

#include <charconv>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "autodc/corrections.hpp"
#include "autodc/error.hpp"
#include "autodc/io.hpp"
#include "autodc/manifest.hpp"
#include "autodc/rng.hpp"

namespace autodc {

/// Dense row-major n x dim matrix of per-record embedding vectors.
struct EmbeddingMatrix {
  std::vector<std::string> ids;
  std::size_t dim = 0;
  std::vector<double> data;

  std::size_t rows() const noexcept { return ids.size(); }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data.data() + i * dim, dim};
  }

  bool operator==(const EmbeddingMatrix&) const = default;
};

struct ClassPartition {
  std::string label;
  EmbeddingMatrix matrix;

  std::size_t size() const noexcept { return matrix.rows(); }
  bool operator==(const ClassPartition&) const = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace detail

/// Parses the embeddings CSV (`id,d0,...,d{D-1}` header, one row per record)
/// and returns one row per original manifest record, in manifest order. Rows
/// for augmented manifest records are accepted and ignored.
inline EmbeddingMatrix parse_embeddings_text(std::string_view text,
                                             const DatasetManifest& manifest) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos <= text.size();) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    if (auto line = detail::trim(text.substr(pos, nl - pos)); !line.empty())
      lines.push_back(line);
    pos = nl + 1;
  }
  if (lines.empty()) fail(ErrorCode::MalformedDocument, "embeddings file is empty");
  const auto header = detail::split_commas(lines.front());
  if (header.size() < 2 || header.front() != "id")
    fail(ErrorCode::MalformedDocument, "embeddings header must be id,d0,...");
  const std::size_t dim = header.size() - 1;

  const ManifestIndex index(manifest);
  std::unordered_map<std::string, std::vector<double>> rows;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = detail::split_commas(lines[r]);
    const std::string id(fields.front());
    const auto where = index.find(id);
    if (!where) fail(ErrorCode::UnknownRow, id);
    if (fields.size() - 1 != dim)
      fail(ErrorCode::DimensionMismatch, "row " + std::to_string(r) + ": expected " +
                                             std::to_string(dim) + ", got " +
                                             std::to_string(fields.size() - 1));
    std::vector<double> values(dim);
    for (std::size_t c = 0; c < dim; ++c) {
      const std::string_view field = fields[c + 1];
      const char* end = field.data() + field.size();
      auto [ptr, ec] = std::from_chars(field.data(), end, values[c]);
      if (ec != std::errc{} || ptr != end)
        fail(ErrorCode::MalformedDocument, "row " + std::to_string(r) + ", column " +
                                               std::to_string(c) + ": '" +
                                               std::string(field) + "' is not a number");
      if (!std::isfinite(values[c]))
        fail(ErrorCode::NonFiniteValue,
             "row " + std::to_string(r) + ", column " + std::to_string(c));
    }
    if (manifest.records[*where].origin != Origin::Original) continue;
    if (!rows.emplace(id, std::move(values)).second) fail(ErrorCode::DuplicateId, id);
  }

  EmbeddingMatrix m;
  m.dim = dim;
  for (const auto& rec : manifest.records) {
    if (rec.origin != Origin::Original) continue;
    auto it = rows.find(rec.id);
    if (it == rows.end()) fail(ErrorCode::MissingRow, rec.id);
    m.ids.push_back(rec.id);
    m.data.insert(m.data.end(), it->second.begin(), it->second.end());
  }
  return m;
}

inline EmbeddingMatrix parse_embeddings(const fs::path& path, const DatasetManifest& manifest) {
  return parse_embeddings_text(read_text_file(path), manifest);
}

/// Embeddings CSV with 9 significant digits per value.
inline std::string format_embeddings(const EmbeddingMatrix& m) {
  std::string out = "id";
  for (std::size_t c = 0; c < m.dim; ++c) out += ",d" + std::to_string(c);
  out += '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out += m.ids[r];
    for (double v : m.row(r)) {
      out += ',';
      out += format_significant(v, 9);
    }
    out += '\n';
  }
  return out;
}

/// Splits `matrix` by effective label. Partitions follow the manifest class
/// order, rows keep manifest order, and classes left empty by corrections are
/// kept as empty partitions.
inline std::vector<ClassPartition> partition_by_class(
    const EmbeddingMatrix& matrix, const DatasetManifest& manifest,
    const std::vector<LabelCorrection>& corrections) {
  const auto labels = effective_labels(manifest, corrections);
  const ManifestIndex index(manifest);
  std::vector<ClassPartition> parts;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& c : manifest.classes) {
    slot.emplace(c, parts.size());
    parts.push_back({c, EmbeddingMatrix{{}, matrix.dim, {}}});
  }
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    const auto where = index.find(matrix.ids[r]);
    if (!where) fail(ErrorCode::UnknownRecord, matrix.ids[r]);
    auto& part = parts[slot.at(labels[*where])].matrix;
    part.ids.push_back(matrix.ids[r]);
    const auto row = matrix.row(r);
    part.data.insert(part.data.end(), row.begin(), row.end());
  }
  return parts;
}

/// Uniform subset of `max_n` rows drawn without replacement (selection
/// sampling), kept in original relative order. Identity when the partition is
/// already small enough.
inline ClassPartition deterministic_subsample(const ClassPartition& partition,
                                              std::size_t max_n, Stream& rng) {
  if (max_n < 2) fail(ErrorCode::InvalidConfig, "max class size must be at least 2");
  const std::size_t n = partition.size();
  if (n <= max_n) return partition;
  ClassPartition out{partition.label, EmbeddingMatrix{{}, partition.matrix.dim, {}}};
  out.matrix.ids.reserve(max_n);
  out.matrix.data.reserve(max_n * partition.matrix.dim);
  std::size_t chosen = 0;
  for (std::size_t i = 0; i < n && chosen < max_n; ++i) {
    if (rng.below(n - i) < max_n - chosen) {
      out.matrix.ids.push_back(partition.matrix.ids[i]);
      const auto row = partition.matrix.row(i);
      out.matrix.data.insert(out.matrix.data.end(), row.begin(), row.end());
      ++chosen;
    }
  }
  return out;
}

}  // namespace autodc

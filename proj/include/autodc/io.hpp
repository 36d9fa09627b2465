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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>

#include "autodc/error.hpp"
#include "json.hpp"

namespace autodc {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!fs::exists(path)) fail(ErrorCode::MissingFile, path.string());
    fail(ErrorCode::IoFailure, "cannot open " + path.string());
  }
  return std::string(std::istreambuf_iterator<char>(in), {});
}

/// Writes via a sibling temporary and rename, so readers never observe a
/// partially written file.
inline void write_file_atomic(const fs::path& path, std::string_view bytes) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoFailure, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::IoFailure, "short write to " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::IoFailure, "rename to " + path.string() + ": " + ec.message());
}

inline json parse_json_document(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::MalformedDocument, what + ": " + e.what());
  }
}

inline json read_json_file(const fs::path& path) {
  return parse_json_document(read_text_file(path), path.string());
}

/// Shortest decimal text that carries `significant` digits.
inline std::string format_significant(double value, int significant = 9) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", significant, value);
  return buf;
}

/// Rounds to `significant` decimal digits, so that the JSON serializer emits
/// at most that many digits.
inline double round_significant(double value, int significant = 9) {
  return std::stod(format_significant(value, significant));
}

}  // namespace autodc

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

#include <stdexcept>
#include <string>
#include <string_view>

namespace autodc {

/// Machine-readable failure category. Each category maps to one stable string
/// code and one HTTP status.
enum class ErrorCode {
  MissingFile,
  MalformedDocument,
  DuplicateId,
  UnknownLabel,
  EmptyClassList,
  UnknownRecord,
  UnknownClass,
  IllegalTransition,
  MissingPrerequisite,
  IoFailure,
  SchemaVersionMismatch,
  MissingRow,
  UnknownRow,
  DimensionMismatch,
  NonFiniteValue,
  TooFewPoints,
  NonFiniteGradient,
  InvalidConfig,
  InvalidContamination,
  InvalidCorrection,
  NoActiveCorrection,
  DegenerateCrop,
  DegenerateScale,
  EmptyEdgeSelection,
  RatioOutOfRange,
  ExportInProgress,
  PortInUse,
  BadRequest,
};

constexpr std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "missing_file";
    case ErrorCode::MalformedDocument: return "malformed_document";
    case ErrorCode::DuplicateId: return "duplicate_id";
    case ErrorCode::UnknownLabel: return "unknown_label";
    case ErrorCode::EmptyClassList: return "empty_class_list";
    case ErrorCode::UnknownRecord: return "unknown_record";
    case ErrorCode::UnknownClass: return "unknown_class";
    case ErrorCode::IllegalTransition: return "illegal_transition";
    case ErrorCode::MissingPrerequisite: return "missing_prerequisite";
    case ErrorCode::IoFailure: return "io_failure";
    case ErrorCode::SchemaVersionMismatch: return "schema_version_mismatch";
    case ErrorCode::MissingRow: return "missing_row";
    case ErrorCode::UnknownRow: return "unknown_row";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::NonFiniteValue: return "non_finite_value";
    case ErrorCode::TooFewPoints: return "too_few_points";
    case ErrorCode::NonFiniteGradient: return "non_finite_gradient";
    case ErrorCode::InvalidConfig: return "invalid_config";
    case ErrorCode::InvalidContamination: return "invalid_contamination";
    case ErrorCode::InvalidCorrection: return "invalid_correction";
    case ErrorCode::NoActiveCorrection: return "no_active_correction";
    case ErrorCode::DegenerateCrop: return "degenerate_crop";
    case ErrorCode::DegenerateScale: return "degenerate_scale";
    case ErrorCode::EmptyEdgeSelection: return "empty_edge_selection";
    case ErrorCode::RatioOutOfRange: return "ratio_out_of_range";
    case ErrorCode::ExportInProgress: return "export_in_progress";
    case ErrorCode::PortInUse: return "port_in_use";
    case ErrorCode::BadRequest: return "bad_request";
  }
  return "unknown";
}

constexpr int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownRecord:
    case ErrorCode::UnknownClass:
    case ErrorCode::NoActiveCorrection:
    case ErrorCode::MissingFile:
      return 404;
    case ErrorCode::IllegalTransition:
    case ErrorCode::MissingPrerequisite:
    case ErrorCode::EmptyEdgeSelection:
    case ErrorCode::ExportInProgress:
      return 409;
    case ErrorCode::IoFailure:
    case ErrorCode::NonFiniteGradient:
    case ErrorCode::PortInUse:
      return 500;
    default:
      return 400;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(code_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace autodc

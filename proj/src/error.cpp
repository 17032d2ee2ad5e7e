// Copyright 2026 The cdg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cdg/error.hpp"

#include <utility>

namespace cdg {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kUnknownConfigKey: return "UnknownConfigKey";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kFileNotFound: return "FileNotFound";
    case ErrorCode::kEmptyFile: return "EmptyFile";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kEmptyText: return "EmptyText";
    case ErrorCode::kMissingField: return "MissingField";
    case ErrorCode::kSpanOutOfBounds: return "SpanOutOfBounds";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kKindMismatch: return "KindMismatch";
    case ErrorCode::kSizeMismatch: return "SizeMismatch";
    case ErrorCode::kDatasetTooSmall: return "DatasetTooSmall";
    case ErrorCode::kDegenerateDataset: return "DegenerateDataset";
    case ErrorCode::kMissingPrediction: return "MissingPrediction";
    case ErrorCode::kMissingLanguage: return "MissingLanguage";
    case ErrorCode::kInvalidLexicon: return "InvalidLexicon";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kCorruptModel: return "CorruptModel";
    case ErrorCode::kModeMismatch: return "ModeMismatch";
    case ErrorCode::kAuthFailure: return "AuthFailure";
    case ErrorCode::kRetriesExhausted: return "RetriesExhausted";
    case ErrorCode::kEmptyCompletion: return "EmptyCompletion";
    case ErrorCode::kMalformedResponse: return "MalformedResponse";
    case ErrorCode::kTransportFailure: return "TransportFailure";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kInternal: return "Internal";
  }
  return "Unknown";
}

ErrorCategory error_category(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kUnknownConfigKey:
    case ErrorCode::kModeMismatch:
      return ErrorCategory::kUsage;
    case ErrorCode::kAuthFailure:
    case ErrorCode::kRetriesExhausted:
    case ErrorCode::kEmptyCompletion:
    case ErrorCode::kMalformedResponse:
    case ErrorCode::kTransportFailure:
      return ErrorCategory::kProvider;
    case ErrorCode::kIo:
    case ErrorCode::kInternal:
    case ErrorCode::kDimensionMismatch:
      return ErrorCategory::kRuntime;
    default:
      return ErrorCategory::kData;
  }
}

Error::Error(ErrorCode code, std::string message, std::optional<std::size_t> line,
             std::string field)
    : std::runtime_error(std::move(message)),
      code_(code),
      line_(line),
      field_(std::move(field)) {}

}  // namespace cdg

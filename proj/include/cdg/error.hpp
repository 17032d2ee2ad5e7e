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

#ifndef CDG_ERROR_HPP_
#define CDG_ERROR_HPP_

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cdg {

enum class ErrorCode {
  // Usage / configuration.
  kInvalidArgument,
  kUnknownConfigKey,
  kDimensionMismatch,
  // Data ingestion.
  kFileNotFound,
  kEmptyFile,
  kMalformedLine,
  kUnknownLabel,
  kEmptyText,
  kMissingField,
  kSpanOutOfBounds,
  kDuplicateId,
  kKindMismatch,
  kSizeMismatch,
  kDatasetTooSmall,
  kDegenerateDataset,
  kMissingPrediction,
  kMissingLanguage,
  kInvalidLexicon,
  // Model persistence.
  kBadMagic,
  kUnsupportedVersion,
  kChecksumMismatch,
  kTruncatedFile,
  kCorruptModel,
  kModeMismatch,
  // Paraphrase provider.
  kAuthFailure,
  kRetriesExhausted,
  kEmptyCompletion,
  kMalformedResponse,
  kTransportFailure,
  // Anything else.
  kIo,
  kInternal,
};

std::string_view error_code_name(ErrorCode code);

// Coarse grouping used for CLI exit codes and C status values.
enum class ErrorCategory { kUsage, kData, kRuntime, kProvider };

ErrorCategory error_category(ErrorCode code);

// All library failures are reported through this exception. `line` is the
// 1-based input line when the failure came from a file, `field` the JSON
// field or config key involved.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message,
        std::optional<std::size_t> line = std::nullopt, std::string field = {});

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
  std::string field_;
};

}  // namespace cdg

#endif  // CDG_ERROR_HPP_

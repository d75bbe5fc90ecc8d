// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vqa {

/// Error classes surfaced by every module. The CLI prints `kind_name(kind)`
/// as the machine-readable prefix of its one-line error message.
enum class ErrorKind {
  kInvalidRange,
  kInvalidThreshold,
  kZeroNorm,
  kDimension,
  kCache,
  kEmptySequence,
  kWindow,
  kDataset,
  kIndex,
  kConfig,
  kSample,
  kRank,
  kUnknownPhrase,
  kPoolExhausted,
  kIntegrity,
  kFormat,
  kTruncated,
  kSchema,
  kIo,
  kUsage,
};

constexpr std::string_view kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidRange: return "invalid-range";
    case ErrorKind::kInvalidThreshold: return "invalid-threshold";
    case ErrorKind::kZeroNorm: return "zero-norm";
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kCache: return "cache";
    case ErrorKind::kEmptySequence: return "empty-sequence";
    case ErrorKind::kWindow: return "window";
    case ErrorKind::kDataset: return "dataset";
    case ErrorKind::kIndex: return "index";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kSample: return "sample";
    case ErrorKind::kRank: return "rank";
    case ErrorKind::kUnknownPhrase: return "unknown-phrase";
    case ErrorKind::kPoolExhausted: return "pool-exhausted";
    case ErrorKind::kIntegrity: return "integrity";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kTruncated: return "truncated";
    case ErrorKind::kSchema: return "schema";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kUsage: return "usage";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace vqa

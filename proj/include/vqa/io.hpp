// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vqa/mat.hpp"
#include "vqa/question.hpp"

namespace vqa {

// ---------------------------------------------------------------------------
// FEAT1: per-clip frame features.
//   "VQAF" | u32 version = 1 | u32 D | u32 T | T*D little-endian float32
// Storage is 32-bit; values are widened to double on load.

struct FeatureSequence {
  std::string clip_id;
  Mat frames;  // T x D
};

std::string encode_feat(const Mat& frames);
Mat decode_feat(std::string_view bytes);
void write_feat(const std::filesystem::path& path, const Mat& frames);
Mat read_feat(const std::filesystem::path& path);

/// Every *.feat file in `dir`, sorted by clip id (the file stem).
std::vector<FeatureSequence> read_feature_dir(const std::filesystem::path& dir);
void write_feature_dir(const std::filesystem::path& dir,
                       const std::vector<FeatureSequence>& clips);

// ---------------------------------------------------------------------------
// MODEL1: named float64 tensors.
//   "VQAM" | u32 version = 1 | u32 count |
//   count * (u32 name_len | name | u32 rows | u32 cols | rows*cols float64)

using NamedTensors = std::vector<std::pair<std::string, Mat>>;

std::string encode_model(const NamedTensors& tensors);
NamedTensors decode_model(std::string_view bytes);
void write_model(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors read_model(const std::filesystem::path& path);

/// Looks up a tensor by name; kSchema if absent.
const Mat& find_tensor(const NamedTensors& tensors, std::string_view name);

// ---------------------------------------------------------------------------
// EMB-TSV: one row per token, "token<TAB>v1<TAB>...<TAB>vD".

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const Vec& row(std::size_t i) const { return rows_[i]; }

  /// kSchema on width mismatch or a duplicate token.
  void add(std::string token, Vec v);
  const Vec* find(std::string_view token) const;
  /// kSchema if the token is missing.
  const Vec& at(std::string_view token) const;

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
    return a.dim_ == b.dim_ && a.tokens_ == b.tokens_ && a.rows_ == b.rows_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> tokens_;
  std::vector<Vec> rows_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::string format_embeddings(const EmbeddingTable& table);
EmbeddingTable parse_embeddings(std::string_view text);
void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// QAJSONL: one question object per line.

std::string format_question(const Question& q);
Question parse_question(std::string_view line);
std::string format_questions(const std::vector<Question>& qs);
std::vector<Question> parse_questions(std::string_view text);
void write_questions(const std::filesystem::path& path, const std::vector<Question>& qs);
std::vector<Question> load_questions(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Dataset splits: "split<TAB>clip_id" per line, split in {train, validation, test}.

struct SplitSpec {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;

  /// kIntegrity if any clip id appears in more than one split.
  void validate() const;
  const std::vector<std::string>& get(std::string_view split) const;

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

std::string format_splits(const SplitSpec& s);
SplitSpec parse_splits(std::string_view text);
void write_splits(const std::filesystem::path& path, const SplitSpec& s);
SplitSpec load_splits(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Metrics CSV with fixed columns task,difficulty,method,split,accuracy,n.

struct MetricsRow {
  std::string task;
  std::string difficulty;
  std::string method;
  std::string split;
  double accuracy = 0.0;
  std::size_t n = 0;
};

inline constexpr std::string_view kMetricsHeader = "task,difficulty,method,split,accuracy,n";

std::string format_metrics_row(const MetricsRow& row);
std::string format_metrics(const std::vector<MetricsRow>& rows);
void write_metrics(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

// ---------------------------------------------------------------------------
// Plain text helpers.

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);
/// Non-empty, trimmed lines.
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace vqa

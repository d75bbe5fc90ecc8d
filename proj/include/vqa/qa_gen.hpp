// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vqa/io.hpp"
#include "vqa/question.hpp"
#include "vqa/rng.hpp"

namespace vqa {

/// A pre-parsed description with the answer span marked.
struct AnnotationRecord {
  std::string id;
  std::string clip_id;
  std::string text;
  std::size_t blank_begin = 0;  // byte offsets into text, [begin, end)
  std::size_t blank_end = 0;
  std::string answer;
  std::string category;  // noun, verb or phrase
  Task task = Task::kPresent;

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

/// kSchema unless the span is non-empty and inside the text and the answer
/// is non-empty.
void validate_record(const AnnotationRecord& r);

/// Text with the span replaced by the blank marker. A directly preceding
/// "a"/"an" becomes "A/An" (or "a/an") so any candidate can be filled in.
std::string make_template(const AnnotationRecord& r);

struct VocabEntry {
  std::string token;
  std::string category;
  std::size_t frequency = 0;
};

struct Vocab {
  std::vector<VocabEntry> entries;  // file order
  std::set<std::string> stopwords;
};

/// Mean of the vectors of the phrase's whitespace-separated tokens that are
/// in the table. kUnknownPhrase if none is.
Vec phrase_embed(std::string_view phrase, const EmbeddingTable& table);

struct PooledPhrase {
  std::string text;
  Vec embedding;
};

/// Phrases whose embedding is missing or has zero norm are skipped.
std::vector<PooledPhrase> build_phrase_pool(const std::vector<std::string>& phrases,
                                            const EmbeddingTable& table);

/// Three distinct same-category tokens, not the answer, not stopwords and
/// with frequency >= min_frequency, drawn uniformly. kPoolExhausted if fewer
/// than three qualify.
std::vector<std::string> gen_easy(const AnnotationRecord& record, const Vocab& vocab, Rng& rng,
                                  std::size_t min_frequency = 10);

struct HardConfig {
  double tau_high = 0.85;
  std::size_t k = 10;  // candidates including the answer
};

/// The k-1 pool phrases most cosine-similar to the answer, skipping the
/// answer itself and anything above tau_high, plus the answer, shuffled.
/// kPoolExhausted if fewer than k-1 phrases survive.
std::vector<std::string> gen_hard(const AnnotationRecord& record,
                                  const std::vector<PooledPhrase>& pool,
                                  const EmbeddingTable& table, const HardConfig& config, Rng& rng);

/// kIntegrity unless the answer occurs exactly once among the candidates.
Question build_question(const AnnotationRecord& record, const std::vector<std::string>& candidates,
                        Difficulty difficulty);

/// Filled-in description for every candidate, in candidate order.
std::vector<std::string> filled_sentences(const Question& q);

struct GenConfig {
  HardConfig hard{};
  std::size_t min_frequency = 10;
  std::uint64_t seed = 1;
};

/// One easy and one hard question per record, in record order.
std::vector<Question> generate_questions(const std::vector<AnnotationRecord>& records,
                                         const Vocab& vocab,
                                         const std::vector<PooledPhrase>& pool,
                                         const EmbeddingTable& table, const GenConfig& config);

// File formats: records JSONL {id, clip_id, text, blank: [begin, end],
// answer, category, task?}; vocab TSV token<TAB>category<TAB>frequency;
// stopwords and phrase pool one entry per line.
AnnotationRecord parse_record(std::string_view line);
std::string format_record(const AnnotationRecord& r);
std::vector<AnnotationRecord> load_records(const std::filesystem::path& path);
Vocab parse_vocab(std::string_view tsv, const std::vector<std::string>& stopwords);
Vocab load_vocab(const std::filesystem::path& vocab_tsv, const std::filesystem::path& stopwords);

/// A self-consistent toy corpus for exercising the generator.
struct ToyCorpus {
  std::vector<AnnotationRecord> records;
  Vocab vocab;
  std::vector<std::string> phrases;
  EmbeddingTable table;
};
ToyCorpus make_toy_corpus(std::size_t n_records, std::uint64_t seed);
void write_toy_corpus(const std::filesystem::path& dir, const ToyCorpus& corpus);

}  // namespace vqa

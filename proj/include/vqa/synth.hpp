// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "vqa/io.hpp"
#include "vqa/rng.hpp"

namespace vqa {

enum class Dynamics {
  kSinusoid,              // per-dimension sine waves, random phase per clip
  kMarkovNoninvertible,   // doubling map on the circle: 2 predecessors per state
  kComplementaryChannels, // half the questions need words, half need sentences
  kEventOrder,            // two events per clip; the answer names their order
  kSharedTopic,           // candidates share a strong topic component
};

std::string_view dynamics_name(Dynamics d);
Dynamics parse_dynamics(std::string_view name);

struct SynthSpec {
  Dynamics dynamics = Dynamics::kSinusoid;
  std::size_t n_clips = 64;
  std::size_t frames = 30;  // frames per clip
  std::size_t dim = 8;      // feature dimension
  std::size_t candidates = 0;  // 0 picks the per-dynamics default
  std::size_t word_dim = 16;
  std::size_t sent_dim = 24;
  double noise = -1.0;  // < 0 picks the per-dynamics default
  std::uint64_t seed = 1;
};

/// Features, embedding tables, questions and a 60/20/20 clip split.
/// Questions refer to candidates by text: the word vector of a candidate is
/// the mean of its tokens in `words`, the sentence vector is the row of
/// `sentences` keyed by the filled-in question text. The pure sequence
/// dynamics (sinusoid, markov-noninvertible) produce no questions.
struct SynthDataset {
  std::vector<FeatureSequence> clips;
  EmbeddingTable words;
  EmbeddingTable sentences;
  std::vector<Question> questions;
  SplitSpec splits;
};

/// Deterministic in the spec. kConfig if n_clips < 8 or a size is zero.
SynthDataset synth_dataset(const SynthSpec& spec);

/// Layout: features/<clip>.feat, words.tsv, sentences.tsv, questions.jsonl,
/// splits.tsv.
void write_dataset(const std::filesystem::path& dir, const SynthDataset& ds);
SynthDataset load_dataset(const std::filesystem::path& dir);

/// Frames of the listed clips, in list order. kDataset on an unknown id.
std::vector<Mat> select_frames(const std::vector<FeatureSequence>& clips,
                               const std::vector<std::string>& ids);

}  // namespace vqa

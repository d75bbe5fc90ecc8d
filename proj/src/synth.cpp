// SPDX-License-Identifier: Apache-2.0
#include "vqa/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "vqa/error.hpp"

namespace vqa {

namespace fs = std::filesystem;

std::string_view dynamics_name(Dynamics d) {
  switch (d) {
    case Dynamics::kSinusoid: return "sinusoid";
    case Dynamics::kMarkovNoninvertible: return "markov-noninvertible";
    case Dynamics::kComplementaryChannels: return "complementary-channels";
    case Dynamics::kEventOrder: return "event-order";
    case Dynamics::kSharedTopic: return "shared-topic";
  }
  return "sinusoid";
}

Dynamics parse_dynamics(std::string_view name) {
  for (Dynamics d : {Dynamics::kSinusoid, Dynamics::kMarkovNoninvertible,
                     Dynamics::kComplementaryChannels, Dynamics::kEventOrder,
                     Dynamics::kSharedTopic}) {
    if (dynamics_name(d) == name) return d;
  }
  fail(ErrorKind::kConfig, "unknown dynamics '" + std::string(name) + "'");
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::string_view kTemplate = "the clip shows ___ .";

std::string clip_name(std::size_t i) {
  std::string s = std::to_string(i);
  return "clip_" + std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s;
}

Vec gaussian(std::size_t n, Rng& rng, double scale = 1.0) {
  Vec v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

Mat gaussian(std::size_t rows, std::size_t cols, Rng& rng, double scale) {
  Mat m(rows, cols);
  for (double& x : m.flat()) x = scale * rng.normal();
  return m;
}

Vec plus_noise(Vec v, Rng& rng, double scale) {
  for (double& x : v) x += scale * rng.normal();
  return v;
}

// A latent vector held for every frame, with per-frame noise.
Mat steady_clip(const Vec& latent, std::size_t frames, Rng& rng, double noise) {
  Mat m(frames, latent.size());
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t d = 0; d < latent.size(); ++d) m(t, d) = latent[d] + noise * rng.normal();
  }
  return m;
}

class Builder {
 public:
  Builder(const SynthSpec& spec, Rng& rng) : rng_(rng) {
    ds_.words = EmbeddingTable(spec.word_dim);
    ds_.sentences = EmbeddingTable(spec.sent_dim);
  }

  // Frames are rounded to float32 so the in-memory dataset equals what a
  // FEAT1 round-trip returns.
  void add_clip(Mat frames) {
    for (double& v : frames.flat()) v = static_cast<double>(static_cast<float>(v));
    ds_.clips.push_back({clip_name(ds_.clips.size()), std::move(frames)});
  }

  // Registers a candidate token with its vectors; repeated tokens must
  // carry the vectors they were first registered with.
  void add_candidate(const std::string& token, Vec word, Vec sent) {
    if (ds_.words.find(token) != nullptr) return;
    ds_.words.add(token, std::move(word));
    ds_.sentences.add(fill_blank(kTemplate, token), std::move(sent));
  }

  // Shuffles the candidate order; `tokens[0]` is the correct one.
  void add_question(std::vector<std::string> tokens, Difficulty difficulty,
                    const std::string& category) {
    Question q;
    q.clip_id = ds_.clips.back().clip_id;
    q.id = "q_" + q.clip_id;
    q.task = Task::kPresent;
    q.difficulty = difficulty;
    q.category = category;
    q.question_text = std::string(kTemplate);
    const auto order = permutation(tokens.size(), rng_);
    for (std::size_t j = 0; j < order.size(); ++j) {
      q.candidates.push_back(tokens[order[j]]);
      if (order[j] == 0) q.correct_idx = j;
    }
    ds_.questions.push_back(std::move(q));
  }

  // Consecutive runs of `group` clips land in the same split, which keeps
  // alternating question types balanced across splits.
  SynthDataset finish(std::size_t group = 1) {
    if (ds_.questions.empty()) {
      ds_.words = EmbeddingTable();
      ds_.sentences = EmbeddingTable();
    }
    const std::size_t n_groups = (ds_.clips.size() + group - 1) / group;
    const auto order = permutation(n_groups, rng_);
    const std::size_t n_train = (n_groups * 6 + 5) / 10;
    const std::size_t n_val = (n_groups * 2 + 5) / 10;
    for (std::size_t i = 0; i < n_groups; ++i) {
      auto& split = i < n_train            ? ds_.splits.train
                    : i < n_train + n_val ? ds_.splits.validation
                                          : ds_.splits.test;
      for (std::size_t c = order[i] * group; c < std::min((order[i] + 1) * group, ds_.clips.size());
           ++c) {
        split.push_back(ds_.clips[c].clip_id);
      }
    }
    return std::move(ds_);
  }

 private:
  Rng& rng_;
  SynthDataset ds_;
};

double pick(double value, double fallback) { return value < 0.0 ? fallback : value; }

void sinusoid(const SynthSpec& spec, Rng& rng, Builder& b) {
  Vec freq(spec.dim), amp(spec.dim);
  for (std::size_t d = 0; d < spec.dim; ++d) {
    freq[d] = rng.uniform(0.05, 0.2);
    amp[d] = rng.uniform(0.5, 1.0);
  }
  const double noise = pick(spec.noise, 0.0);
  for (std::size_t c = 0; c < spec.n_clips; ++c) {
    Mat m(spec.frames, spec.dim);
    for (std::size_t d = 0; d < spec.dim; ++d) {
      const double phase = rng.uniform(0.0, kTwoPi);
      for (std::size_t t = 0; t < spec.frames; ++t) {
        m(t, d) = amp[d] * std::sin(kTwoPi * freq[d] * static_cast<double>(t) + phase) +
                  noise * rng.normal();
      }
    }
    b.add_clip(std::move(m));
  }
}

// x_{t+1} = 2 x_t mod 1, observed through a random linear map of the point
// (cos 2 pi x, sin 2 pi x). The forward map is a function of the current
// frame; each state has two predecessors, so the past is ambiguous. Clips
// are generated backwards from a uniform final state by picking one of the
// two predecessors at random.
void markov(const SynthSpec& spec, Rng& rng, Builder& b) {
  const Mat proj = gaussian(spec.dim, 2, rng, std::sqrt(0.5));
  const double noise = pick(spec.noise, 0.0);
  for (std::size_t c = 0; c < spec.n_clips; ++c) {
    Vec state(spec.frames);
    state.back() = rng.uniform();
    for (std::size_t t = spec.frames - 1; t > 0; --t) {
      state[t - 1] = (state[t] + (rng.bernoulli(0.5) ? 1.0 : 0.0)) / 2.0;
    }
    Mat m(spec.frames, spec.dim);
    for (std::size_t t = 0; t < spec.frames; ++t) {
      const double cs = std::cos(kTwoPi * state[t]);
      const double sn = std::sin(kTwoPi * state[t]);
      for (std::size_t d = 0; d < spec.dim; ++d) {
        m(t, d) = proj(d, 0) * cs + proj(d, 1) * sn + noise * rng.normal();
      }
    }
    b.add_clip(std::move(m));
  }
}

// Clip i shows latent u_i. Even questions are word-decidable: the correct
// word vector is P_w u_i, distractors are P_w u' for fresh latents, and all
// candidates share one random sentence vector. Odd questions swap roles.
void complementary(const SynthSpec& spec, Rng& rng, Builder& b) {
  const std::size_t k = spec.candidates == 0 ? 10 : spec.candidates;
  const double noise = pick(spec.noise, 0.3);
  const Mat p_w = gaussian(spec.word_dim, spec.dim, rng, 1.0);
  const Mat p_s = gaussian(spec.sent_dim, spec.dim, rng, 1.0);
  for (std::size_t c = 0; c < spec.n_clips; ++c) {
    const Vec u = gaussian(spec.dim, rng);
    b.add_clip(steady_clip(u, spec.frames, rng, noise));
    const bool by_word = c % 2 == 0;
    const Vec shared_word = gaussian(spec.word_dim, rng);
    const Vec shared_sent = gaussian(spec.sent_dim, rng);
    std::vector<std::string> tokens;
    for (std::size_t j = 0; j < k; ++j) {
      const Vec latent = j == 0 ? u : gaussian(spec.dim, rng);
      const std::string token = "c" + std::to_string(c) + "_" + std::to_string(j);
      if (by_word) {
        b.add_candidate(token, plus_noise(matvec(p_w, latent), rng, 0.1), shared_sent);
      } else {
        b.add_candidate(token, shared_word, plus_noise(matvec(p_s, latent), rng, 0.1));
      }
      tokens.push_back(token);
    }
    b.add_question(std::move(tokens), Difficulty::kHard, by_word ? "noun" : "phrase");
  }
}

// Each clip holds event A for the first half and event B for the second.
// Every ordered pair (A, B) has its own word and sentence vector. The
// candidates are the true pair, its reversal and two other ordered pairs,
// so an order-blind visual vector can at best separate the true pair from
// its reversal by chance.
void event_order(const SynthSpec& spec, Rng& rng, Builder& b) {
  const std::size_t k = spec.candidates == 0 ? 4 : spec.candidates;
  constexpr std::size_t kEvents = 5;
  const std::size_t pairs = kEvents * (kEvents - 1);
  require(k >= 2 && k <= pairs, ErrorKind::kConfig, "event-order needs 2..20 candidates");
  const double noise = pick(spec.noise, 0.1);
  std::vector<Vec> events;
  for (std::size_t e = 0; e < kEvents; ++e) events.push_back(gaussian(spec.dim, rng));
  std::map<std::pair<std::size_t, std::size_t>, std::pair<Vec, Vec>> labels;
  for (std::size_t a = 0; a < kEvents; ++a) {
    for (std::size_t c = 0; c < kEvents; ++c) {
      if (a != c) labels[{a, c}] = {gaussian(spec.word_dim, rng), gaussian(spec.sent_dim, rng)};
    }
  }
  auto token = [](std::size_t a, std::size_t c) {
    return "e" + std::to_string(a) + "to" + std::to_string(c);
  };
  for (std::size_t n = 0; n < spec.n_clips; ++n) {
    const std::size_t a = rng.index(kEvents);
    std::size_t c = rng.index(kEvents - 1);
    if (c >= a) ++c;
    Mat m(spec.frames, spec.dim);
    for (std::size_t t = 0; t < spec.frames; ++t) {
      const Vec& e = events[2 * t < spec.frames ? a : c];
      for (std::size_t d = 0; d < spec.dim; ++d) m(t, d) = e[d] + noise * rng.normal();
    }
    b.add_clip(std::move(m));

    std::vector<std::pair<std::size_t, std::size_t>> chosen{{a, c}, {c, a}};
    while (chosen.size() < k) {
      const std::size_t x = rng.index(kEvents);
      std::size_t y = rng.index(kEvents - 1);
      if (y >= x) ++y;
      if (std::find(chosen.begin(), chosen.end(), std::pair{x, y}) == chosen.end()) {
        chosen.emplace_back(x, y);
      }
    }
    std::vector<std::string> tokens;
    for (std::size_t j = 0; j < k; ++j) {
      const auto& [word, sent] = labels.at(chosen[j]);
      b.add_candidate(token(chosen[j].first, chosen[j].second), word, sent);
      tokens.push_back(token(chosen[j].first, chosen[j].second));
    }
    b.add_question(std::move(tokens), k <= 4 ? Difficulty::kEasy : Difficulty::kHard, "verb");
  }
}

// Clip latent = [topic; item]. The topic block (3/4 of the dimensions)
// varies from clip to clip, so across the corpus it is strongly correlated
// between the visual and label views, but every candidate of a question
// shares it: the way easy distractors come from the answer's own category.
// Only the item block separates the answer from the distractors. Candidate
// labels are noisy linear images of their latent. Item vectors have a fixed
// norm so no candidate wins on length alone.
void shared_topic(const SynthSpec& spec, Rng& rng, Builder& b) {
  const std::size_t k = spec.candidates == 0 ? 4 : spec.candidates;
  const double noise = pick(spec.noise, 0.3);
  const double topic_scale = 2.0;
  const double item_scale = 1.5;
  const double label_noise = 0.2;
  const std::size_t item_dims = std::max<std::size_t>(1, spec.dim / 4);
  const std::size_t topic_dims = spec.dim - item_dims;
  const Mat p_w = gaussian(spec.word_dim, spec.dim, rng, 1.0);
  const Mat p_s = gaussian(spec.sent_dim, spec.dim, rng, 1.0);
  auto label = [&](const Mat& p, Vec latent) {
    return matvec(p, plus_noise(std::move(latent), rng, label_noise));
  };
  for (std::size_t c = 0; c < spec.n_clips; ++c) {
    const Vec topic = gaussian(topic_dims, rng, topic_scale);
    auto latent_of = [&] {
      Vec u = topic;
      const Vec item = scaled(l2_normalize(gaussian(item_dims, rng)), item_scale);
      u.insert(u.end(), item.begin(), item.end());
      return u;
    };
    const Vec u = latent_of();
    b.add_clip(steady_clip(u, spec.frames, rng, noise));
    std::vector<std::string> tokens;
    for (std::size_t j = 0; j < k; ++j) {
      const Vec latent = j == 0 ? u : latent_of();
      const std::string token = "t" + std::to_string(c) + "_" + std::to_string(j);
      b.add_candidate(token, label(p_w, latent), label(p_s, latent));
      tokens.push_back(token);
    }
    b.add_question(std::move(tokens), k <= 4 ? Difficulty::kEasy : Difficulty::kHard, "noun");
  }
}

}  // namespace

SynthDataset synth_dataset(const SynthSpec& spec) {
  require(spec.n_clips >= 8, ErrorKind::kConfig, "synth needs at least 8 clips");
  require(spec.frames >= 1 && spec.dim >= 1 && spec.word_dim >= 1 && spec.sent_dim >= 1,
          ErrorKind::kConfig, "synth sizes must be positive");
  require(spec.candidates != 1, ErrorKind::kConfig, "questions need at least 2 candidates");
  Rng rng(spec.seed);
  Builder b(spec, rng);
  switch (spec.dynamics) {
    case Dynamics::kSinusoid: sinusoid(spec, rng, b); break;
    case Dynamics::kMarkovNoninvertible: markov(spec, rng, b); break;
    case Dynamics::kComplementaryChannels: complementary(spec, rng, b); return b.finish(2);
    case Dynamics::kEventOrder: event_order(spec, rng, b); break;
    case Dynamics::kSharedTopic: shared_topic(spec, rng, b); break;
  }
  return b.finish();
}

void write_dataset(const fs::path& dir, const SynthDataset& ds) {
  fs::create_directories(dir);
  write_feature_dir(dir / "features", ds.clips);
  write_embeddings(dir / "words.tsv", ds.words);
  write_embeddings(dir / "sentences.tsv", ds.sentences);
  write_questions(dir / "questions.jsonl", ds.questions);
  write_splits(dir / "splits.tsv", ds.splits);
}

SynthDataset load_dataset(const fs::path& dir) {
  SynthDataset ds;
  ds.clips = read_feature_dir(dir / "features");
  ds.words = load_embeddings(dir / "words.tsv");
  ds.sentences = load_embeddings(dir / "sentences.tsv");
  ds.questions = load_questions(dir / "questions.jsonl");
  ds.splits = load_splits(dir / "splits.tsv");
  return ds;
}

std::vector<Mat> select_frames(const std::vector<FeatureSequence>& clips,
                               const std::vector<std::string>& ids) {
  std::map<std::string, const Mat*> by_id;
  for (const auto& c : clips) by_id[c.clip_id] = &c.frames;
  std::vector<Mat> out;
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) fail(ErrorKind::kDataset, "unknown clip '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

}  // namespace vqa

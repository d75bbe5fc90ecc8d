// SPDX-License-Identifier: Apache-2.0
#include "vqa/qa_gen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "vqa/error.hpp"

namespace vqa {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::vector<std::string_view> tokenize(std::string_view phrase) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < phrase.size()) {
    while (i < phrase.size() && std::isspace(static_cast<unsigned char>(phrase[i]))) ++i;
    std::size_t j = i;
    while (j < phrase.size() && !std::isspace(static_cast<unsigned char>(phrase[j]))) ++j;
    if (j > i) out.push_back(phrase.substr(i, j - i));
    i = j;
  }
  return out;
}

double cosine(const Vec& a, const Vec& b) {
  const double na = norm2(a);
  const double nb = norm2(b);
  require(na > 1e-12 && nb > 1e-12, ErrorKind::kZeroNorm, "cosine of a zero vector");
  return dot(a, b) / (na * nb);
}

}  // namespace

void validate_record(const AnnotationRecord& r) {
  require(!r.answer.empty(), ErrorKind::kSchema, "record " + r.id + ": empty answer");
  require(r.blank_begin < r.blank_end && r.blank_end <= r.text.size(), ErrorKind::kSchema,
          "record " + r.id + ": blank span outside the text");
}

std::string make_template(const AnnotationRecord& r) {
  validate_record(r);
  std::string head = r.text.substr(0, r.blank_begin);
  const std::string tail = r.text.substr(r.blank_end);
  std::size_t end = head.size();
  while (end > 0 && head[end - 1] == ' ') --end;
  std::size_t begin = end;
  while (begin > 0 && head[begin - 1] != ' ') --begin;
  const std::string word = head.substr(begin, end - begin);
  if (end < head.size()) {
    if (word == "a" || word == "an") head.replace(begin, end - begin, "a/an");
    if (word == "A" || word == "An") head.replace(begin, end - begin, "A/An");
  }
  return head + std::string(kBlank) + tail;
}

Vec phrase_embed(std::string_view phrase, const EmbeddingTable& table) {
  Vec sum(table.dim(), 0.0);
  std::size_t hits = 0;
  for (std::string_view tok : tokenize(phrase)) {
    if (const Vec* v = table.find(tok)) {
      axpy(1.0, *v, sum);
      ++hits;
    }
  }
  if (hits == 0) {
    fail(ErrorKind::kUnknownPhrase, "no token of '" + std::string(phrase) + "' has a vector");
  }
  for (double& x : sum) x /= static_cast<double>(hits);
  return sum;
}

std::vector<PooledPhrase> build_phrase_pool(const std::vector<std::string>& phrases,
                                            const EmbeddingTable& table) {
  std::vector<PooledPhrase> pool;
  for (const auto& p : phrases) {
    try {
      Vec e = phrase_embed(p, table);
      if (norm2(e) > 1e-12) pool.push_back({p, std::move(e)});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kUnknownPhrase) throw;
    }
  }
  return pool;
}

std::vector<std::string> gen_easy(const AnnotationRecord& record, const Vocab& vocab, Rng& rng,
                                  std::size_t min_frequency) {
  std::vector<const std::string*> eligible;
  for (const auto& e : vocab.entries) {
    if (e.category == record.category && e.token != record.answer &&
        e.frequency >= min_frequency && !vocab.stopwords.contains(e.token)) {
      eligible.push_back(&e.token);
    }
  }
  if (eligible.size() < 3) {
    fail(ErrorKind::kPoolExhausted, "record " + record.id + ": only " +
                                        std::to_string(eligible.size()) +
                                        " eligible easy distractors");
  }
  // Partial Fisher-Yates: the first three slots end up uniformly drawn.
  std::vector<std::string> out;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t j = i + rng.index(eligible.size() - i);
    std::swap(eligible[i], eligible[j]);
    out.push_back(*eligible[i]);
  }
  return out;
}

std::vector<std::string> gen_hard(const AnnotationRecord& record,
                                  const std::vector<PooledPhrase>& pool,
                                  const EmbeddingTable& table, const HardConfig& config,
                                  Rng& rng) {
  require(config.k >= 2, ErrorKind::kConfig, "hard questions need k >= 2");
  const Vec target = phrase_embed(record.answer, table);
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].text == record.answer) continue;
    const double sim = cosine(target, pool[i].embedding);
    if (sim > config.tau_high) continue;
    ranked.emplace_back(sim, i);
  }
  if (ranked.size() < config.k - 1) {
    fail(ErrorKind::kPoolExhausted, "record " + record.id + ": only " +
                                        std::to_string(ranked.size()) +
                                        " pool phrases survive the similarity filter");
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < config.k - 1; ++i) out.push_back(pool[ranked[i].second].text);
  out.push_back(record.answer);
  rng.shuffle(out);
  return out;
}

Question build_question(const AnnotationRecord& record, const std::vector<std::string>& candidates,
                        Difficulty difficulty) {
  const auto hits = std::count(candidates.begin(), candidates.end(), record.answer);
  require(hits == 1, ErrorKind::kIntegrity,
          "record " + record.id + ": answer appears " + std::to_string(hits) +
              " times among the candidates");
  std::set<std::string> seen(candidates.begin(), candidates.end());
  require(seen.size() == candidates.size(), ErrorKind::kIntegrity,
          "record " + record.id + ": duplicate candidate");
  Question q;
  q.id = record.id + "-" + std::string(difficulty_name(difficulty));
  q.clip_id = record.clip_id;
  q.task = record.task;
  q.difficulty = difficulty;
  q.category = record.category;
  q.question_text = make_template(record);
  q.candidates = candidates;
  q.correct_idx = static_cast<std::size_t>(
      std::find(candidates.begin(), candidates.end(), record.answer) - candidates.begin());
  return q;
}

std::vector<std::string> filled_sentences(const Question& q) {
  std::vector<std::string> out;
  for (const auto& c : q.candidates) out.push_back(fill_blank(q.question_text, c));
  return out;
}

std::vector<Question> generate_questions(const std::vector<AnnotationRecord>& records,
                                         const Vocab& vocab,
                                         const std::vector<PooledPhrase>& pool,
                                         const EmbeddingTable& table, const GenConfig& config) {
  Rng rng(config.seed);
  std::vector<Question> out;
  for (const auto& r : records) {
    validate_record(r);
    auto easy = gen_easy(r, vocab, rng, config.min_frequency);
    easy.push_back(r.answer);
    rng.shuffle(easy);
    out.push_back(build_question(r, easy, Difficulty::kEasy));
    out.push_back(build_question(r, gen_hard(r, pool, table, config.hard, rng), Difficulty::kHard));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files

AnnotationRecord parse_record(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    fail(ErrorKind::kSchema, std::string("records: invalid JSON: ") + e.what());
  }
  AnnotationRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.clip_id = j.at("clip_id").get<std::string>();
    r.text = j.at("text").get<std::string>();
    const auto& blank = j.at("blank");
    if (!blank.is_array() || blank.size() != 2) {
      fail(ErrorKind::kSchema, "records: blank must be [begin, end]");
    }
    r.blank_begin = blank[0].get<std::size_t>();
    r.blank_end = blank[1].get<std::size_t>();
    r.answer = j.at("answer").get<std::string>();
    r.category = j.at("category").get<std::string>();
    if (j.contains("task")) r.task = parse_task(j["task"].get<std::string>());
  } catch (const json::exception& e) {
    fail(ErrorKind::kSchema, std::string("records: ") + e.what());
  }
  validate_record(r);
  return r;
}

std::string format_record(const AnnotationRecord& r) {
  json j{{"id", r.id},
         {"clip_id", r.clip_id},
         {"text", r.text},
         {"blank", {r.blank_begin, r.blank_end}},
         {"answer", r.answer},
         {"category", r.category},
         {"task", std::string(task_name(r.task))}};
  return j.dump();
}

std::vector<AnnotationRecord> load_records(const fs::path& path) {
  std::vector<AnnotationRecord> out;
  for (const auto& line : read_lines(path)) out.push_back(parse_record(line));
  return out;
}

Vocab parse_vocab(std::string_view tsv, const std::vector<std::string>& stopwords) {
  Vocab v;
  v.stopwords.insert(stopwords.begin(), stopwords.end());
  std::istringstream in{std::string(tsv)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto a = line.find('\t');
    const auto b = a == std::string::npos ? a : line.find('\t', a + 1);
    if (b == std::string::npos || line.find('\t', b + 1) != std::string::npos) {
      fail(ErrorKind::kSchema, "vocab line " + std::to_string(lineno) +
                                   ": expected token<TAB>category<TAB>frequency");
    }
    VocabEntry e{line.substr(0, a), line.substr(a + 1, b - a - 1), 0};
    const std::string f = line.substr(b + 1);
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), e.frequency);
    if (ec != std::errc() || ptr != f.data() + f.size() || e.frequency < 1) {
      fail(ErrorKind::kSchema, "vocab line " + std::to_string(lineno) + ": bad frequency");
    }
    v.entries.push_back(std::move(e));
  }
  return v;
}

Vocab load_vocab(const fs::path& vocab_tsv, const fs::path& stopwords) {
  return parse_vocab(read_text(vocab_tsv), read_lines(stopwords));
}

// ---------------------------------------------------------------------------
// Toy corpus

namespace {

std::string numbered(const char* prefix, std::size_t i) {
  return std::string(prefix) + (i < 10 ? "0" : "") + std::to_string(i);
}

}  // namespace

ToyCorpus make_toy_corpus(std::size_t n_records, std::uint64_t seed) {
  constexpr std::size_t kDim = 16;
  constexpr std::size_t kClusters = 8;
  Rng rng(seed);
  ToyCorpus c;
  c.table = EmbeddingTable(kDim);

  std::vector<Vec> centers;
  for (std::size_t i = 0; i < kClusters; ++i) {
    Vec v(kDim);
    for (double& x : v) x = rng.normal();
    centers.push_back(std::move(v));
  }
  auto near = [&](const Vec& base, double spread) {
    Vec v = base;
    for (double& x : v) x += spread * rng.normal();
    return v;
  };
  auto add_token = [&](const std::string& tok, const std::string& category, bool vocab) {
    c.table.add(tok, near(centers[rng.index(kClusters)], 0.6));
    if (vocab) c.vocab.entries.push_back({tok, category, 1 + rng.index(60)});
  };

  std::vector<std::string> nouns, verbs, mods, phrases;
  for (std::size_t i = 0; i < 40; ++i) {
    nouns.push_back(numbered("obj", i));
    add_token(nouns.back(), "noun", true);
    // Every fifth noun gets a near-synonym that a hard question must never offer.
    if (i % 5 == 0) {
      const std::string alias = nouns.back() + "x";
      c.table.add(alias, near(c.table.at(nouns.back()), 0.02));
      c.phrases.push_back(alias);
    }
  }
  for (std::size_t i = 0; i < 30; ++i) {
    verbs.push_back(numbered("act", i));
    add_token(verbs.back(), "verb", true);
  }
  for (std::size_t i = 0; i < 12; ++i) {
    mods.push_back(numbered("mod", i));
    add_token(mods.back(), "", false);
  }
  for (const char* s : {"person", "man", "someone"}) {
    add_token(s, "noun", false);
    c.vocab.entries.push_back({s, "noun", 500});
    c.vocab.stopwords.insert(s);
  }
  for (std::size_t i = 0; i < 30; ++i) {
    phrases.push_back(mods[rng.index(mods.size())] + " " + nouns[rng.index(nouns.size())]);
    if (std::find(phrases.begin(), phrases.end() - 1, phrases.back()) != phrases.end() - 1) {
      phrases.pop_back();
      continue;
    }
    c.vocab.entries.push_back({phrases.back(), "phrase", 1 + rng.index(60)});
  }

  for (const auto& n : nouns) c.phrases.push_back(n);
  for (const auto& v : verbs) c.phrases.push_back(v);
  for (const auto& p : phrases) c.phrases.push_back(p);
  c.phrases.push_back("unknownword");  // skipped when the pool is built

  auto frequent = [&](const std::string& category) {
    std::vector<std::string> out;
    for (const auto& e : c.vocab.entries) {
      if (e.category == category && e.frequency >= 10 && !c.vocab.stopwords.contains(e.token)) {
        out.push_back(e.token);
      }
    }
    return out;
  };
  const auto answer_nouns = frequent("noun");
  const auto answer_verbs = frequent("verb");
  const auto answer_phrases = frequent("phrase");
  static const Task tasks[] = {Task::kPast, Task::kPresent, Task::kFuture};

  for (std::size_t i = 0; i < n_records; ++i) {
    AnnotationRecord r;
    r.id = "r" + std::to_string(i);
    r.clip_id = "clip_" + std::to_string(i / 3);
    r.task = tasks[i % 3];
    std::string head;
    std::string tail;
    switch (i % 3) {
      case 0:
        r.category = "noun";
        r.answer = answer_nouns[rng.index(answer_nouns.size())];
        head = "someone picks up a ";
        tail = " from the table";
        break;
      case 1:
        r.category = "verb";
        r.answer = answer_verbs[rng.index(answer_verbs.size())];
        head = "the man ";
        tail = " the " + nouns[rng.index(nouns.size())];
        break;
      default:
        r.category = "phrase";
        r.answer = answer_phrases[rng.index(answer_phrases.size())];
        head = "a person walks past the ";
        tail = " slowly";
        break;
    }
    r.text = head + r.answer + tail;
    r.blank_begin = head.size();
    r.blank_end = head.size() + r.answer.size();
    c.records.push_back(std::move(r));
  }
  return c;
}

void write_toy_corpus(const fs::path& dir, const ToyCorpus& corpus) {
  fs::create_directories(dir);
  std::string records, vocab, stop, pool;
  for (const auto& r : corpus.records) records += format_record(r) + "\n";
  for (const auto& e : corpus.vocab.entries) {
    vocab += e.token + "\t" + e.category + "\t" + std::to_string(e.frequency) + "\n";
  }
  for (const auto& s : corpus.vocab.stopwords) stop += s + "\n";
  for (const auto& p : corpus.phrases) pool += p + "\n";
  write_text(dir / "records.jsonl", records);
  write_text(dir / "vocab.tsv", vocab);
  write_text(dir / "stopwords.txt", stop);
  write_text(dir / "pool.txt", pool);
  write_embeddings(dir / "words.tsv", corpus.table);
}

}  // namespace vqa

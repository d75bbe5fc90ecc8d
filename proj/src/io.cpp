// SPDX-License-Identifier: Apache-2.0
#include "vqa/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vqa/error.hpp"

namespace vqa {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  Reader(std::string_view bytes, const char* what) : bytes_(bytes), what_(what) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n) const {
    if (remaining() < n) {
      fail(ErrorKind::kTruncated, std::string(what_) + ": truncated payload");
    }
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
  const char* what_;
};

void check_magic(Reader& r, std::string_view magic, const char* what) {
  if (r.remaining() < magic.size() || r.take(magic.size()) != magic) {
    fail(ErrorKind::kFormat, std::string(what) + ": bad magic");
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    fail(ErrorKind::kFormat, std::string(what) + ": unsupported version " +
                                 std::to_string(version));
  }
}

double parse_double(std::string_view s, const char* what) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (!s.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    fail(ErrorKind::kSchema, std::string(what) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split_on(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto p = line.find(sep, start);
    out.push_back(line.substr(start, p == std::string_view::npos ? p : p - start));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

template <typename F>
void for_each_line(std::string_view text, F&& f) {
  std::size_t start = 0;
  std::size_t lineno = 0;
  while (start < text.size()) {
    auto p = text.find('\n', start);
    if (p == std::string_view::npos) p = text.size();
    std::string_view line = text.substr(start, p - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++lineno;
    if (!line.empty()) f(line, lineno);
    start = p + 1;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// FEAT1

std::string encode_feat(const Mat& frames) {
  require(frames.rows() > 0 && frames.cols() > 0, ErrorKind::kFormat,
          "FEAT1: T and D must be > 0");
  std::string out = "VQAF";
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(frames.cols()));
  put_u32(out, static_cast<std::uint32_t>(frames.rows()));
  out.reserve(out.size() + frames.size() * 4);
  for (double v : frames.flat()) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

Mat decode_feat(std::string_view bytes) {
  Reader r(bytes, "FEAT1");
  check_magic(r, "VQAF", "FEAT1");
  const std::uint32_t d = r.u32();
  const std::uint32_t t = r.u32();
  if (d == 0 || t == 0) fail(ErrorKind::kFormat, "FEAT1: T and D must be > 0");
  const std::uint64_t n = static_cast<std::uint64_t>(d) * t;
  r.need(n * 4);
  if (r.remaining() != n * 4) fail(ErrorKind::kFormat, "FEAT1: trailing bytes after payload");
  Mat m(t, d);
  for (double& v : m.flat()) {
    v = static_cast<double>(std::bit_cast<float>(r.u32()));
    if (!std::isfinite(v)) fail(ErrorKind::kFormat, "FEAT1: non-finite value");
  }
  return m;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorKind::kIo, "write failed for " + path.string());
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> out;
  const std::string text = read_text(path);
  for_each_line(text, [&](std::string_view line, std::size_t) {
    const auto b = line.find_first_not_of(" \t");
    if (b == std::string_view::npos) return;
    const auto e = line.find_last_not_of(" \t");
    out.emplace_back(line.substr(b, e - b + 1));
  });
  return out;
}

void write_feat(const fs::path& path, const Mat& frames) { write_text(path, encode_feat(frames)); }

Mat read_feat(const fs::path& path) { return decode_feat(read_text(path)); }

std::vector<FeatureSequence> read_feature_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorKind::kIo, "not a directory: " + dir.string());
  std::vector<FeatureSequence> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".feat") continue;
    out.push_back({entry.path().stem().string(), read_feat(entry.path())});
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.clip_id < b.clip_id; });
  return out;
}

void write_feature_dir(const fs::path& dir, const std::vector<FeatureSequence>& clips) {
  fs::create_directories(dir);
  for (const auto& c : clips) write_feat(dir / (c.clip_id + ".feat"), c.frames);
}

// ---------------------------------------------------------------------------
// MODEL1

std::string encode_model(const NamedTensors& tensors) {
  std::string out = "VQAM";
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, m] : tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (double v : m.flat()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

NamedTensors decode_model(std::string_view bytes) {
  Reader r(bytes, "MODEL1");
  check_magic(r, "VQAM", "MODEL1");
  const std::uint32_t count = r.u32();
  NamedTensors out;
  std::set<std::string> seen;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = r.u32();
    std::string name(r.take(len));
    if (!seen.insert(name).second) fail(ErrorKind::kFormat, "MODEL1: duplicate tensor " + name);
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    const std::uint64_t n = static_cast<std::uint64_t>(rows) * cols;
    r.need(n * 8);
    Mat m(rows, cols);
    for (double& v : m.flat()) v = std::bit_cast<double>(r.u64());
    out.emplace_back(std::move(name), std::move(m));
  }
  if (r.remaining() != 0) fail(ErrorKind::kFormat, "MODEL1: trailing bytes after payload");
  return out;
}

void write_model(const fs::path& path, const NamedTensors& tensors) {
  write_text(path, encode_model(tensors));
}

NamedTensors read_model(const fs::path& path) { return decode_model(read_text(path)); }

const Mat& find_tensor(const NamedTensors& tensors, std::string_view name) {
  for (const auto& [n, m] : tensors) {
    if (n == name) return m;
  }
  fail(ErrorKind::kSchema, "model has no tensor '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// EMB-TSV

void EmbeddingTable::add(std::string token, Vec v) {
  if (tokens_.empty() && dim_ == 0) dim_ = v.size();
  if (v.size() != dim_ || dim_ == 0) {
    fail(ErrorKind::kSchema, "embedding row '" + token + "' has " + std::to_string(v.size()) +
                                 " values, expected " + std::to_string(dim_));
  }
  if (token.empty() || token.find_first_of("\t\n\r") != std::string::npos) {
    fail(ErrorKind::kSchema, "embedding token must be non-empty and free of tabs/newlines");
  }
  if (!index_.emplace(token, tokens_.size()).second) {
    fail(ErrorKind::kSchema, "duplicate embedding token '" + token + "'");
  }
  tokens_.push_back(std::move(token));
  rows_.push_back(std::move(v));
}

const Vec* EmbeddingTable::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? nullptr : &rows_[it->second];
}

const Vec& EmbeddingTable::at(std::string_view token) const {
  const Vec* v = find(token);
  if (v == nullptr) fail(ErrorKind::kSchema, "no embedding for '" + std::string(token) + "'");
  return *v;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string format_embeddings(const EmbeddingTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.size(); ++i) {
    out += table.tokens()[i];
    for (double v : table.row(i)) {
      out += '\t';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

EmbeddingTable parse_embeddings(std::string_view text) {
  EmbeddingTable table;
  for_each_line(text, [&](std::string_view line, std::size_t lineno) {
    const auto fields = split_on(line, '\t');
    if (fields.size() < 2) {
      fail(ErrorKind::kSchema, "EMB-TSV line " + std::to_string(lineno) + ": no values");
    }
    Vec v;
    v.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) v.push_back(parse_double(fields[i], "EMB-TSV"));
    table.add(std::string(fields[0]), std::move(v));
  });
  return table;
}

void write_embeddings(const fs::path& path, const EmbeddingTable& table) {
  write_text(path, format_embeddings(table));
}

EmbeddingTable load_embeddings(const fs::path& path) { return parse_embeddings(read_text(path)); }

// ---------------------------------------------------------------------------
// QAJSONL

std::string format_question(const Question& q) {
  json j;
  j["id"] = q.id;
  j["clip_id"] = q.clip_id;
  j["task"] = std::string(task_name(q.task));
  j["difficulty"] = std::string(difficulty_name(q.difficulty));
  j["category"] = q.category;
  j["question_text"] = q.question_text;
  json cands = json::array();
  for (const auto& c : q.candidates) cands.push_back({{"text", c}});
  j["candidates"] = std::move(cands);
  j["correct_idx"] = q.correct_idx;
  return j.dump();
}

Question parse_question(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    fail(ErrorKind::kSchema, std::string("QAJSONL: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::kSchema, "QAJSONL: line is not an object");
  auto field = [&](const char* name) -> const json& {
    auto it = j.find(name);
    if (it == j.end()) fail(ErrorKind::kSchema, std::string("QAJSONL: missing field ") + name);
    return *it;
  };
  auto str = [&](const char* name) {
    const json& v = field(name);
    if (!v.is_string()) fail(ErrorKind::kSchema, std::string("QAJSONL: ") + name + " must be a string");
    return v.get<std::string>();
  };

  Question q;
  q.id = str("id");
  q.clip_id = str("clip_id");
  q.task = parse_task(str("task"));
  q.difficulty = parse_difficulty(str("difficulty"));
  q.category = str("category");
  q.question_text = str("question_text");
  const json& cands = field("candidates");
  if (!cands.is_array()) fail(ErrorKind::kSchema, "QAJSONL: candidates must be an array");
  for (const json& c : cands) {
    if (!c.is_object() || !c.contains("text") || !c["text"].is_string()) {
      fail(ErrorKind::kSchema, "QAJSONL: candidate needs a string 'text'");
    }
    q.candidates.push_back(c["text"].get<std::string>());
  }
  const json& idx = field("correct_idx");
  if (!idx.is_number_unsigned() && !(idx.is_number_integer() && idx.get<long long>() >= 0)) {
    fail(ErrorKind::kSchema, "QAJSONL: correct_idx must be a non-negative integer");
  }
  q.correct_idx = idx.get<std::size_t>();
  if (q.correct_idx >= q.candidates.size()) {
    fail(ErrorKind::kSchema, "QAJSONL: correct_idx out of range in question " + q.id);
  }
  return q;
}

std::string format_questions(const std::vector<Question>& qs) {
  std::string out;
  for (const auto& q : qs) {
    out += format_question(q);
    out += '\n';
  }
  return out;
}

std::vector<Question> parse_questions(std::string_view text) {
  std::vector<Question> out;
  for_each_line(text, [&](std::string_view line, std::size_t) {
    out.push_back(parse_question(line));
  });
  return out;
}

void write_questions(const fs::path& path, const std::vector<Question>& qs) {
  write_text(path, format_questions(qs));
}

std::vector<Question> load_questions(const fs::path& path) {
  return parse_questions(read_text(path));
}

// ---------------------------------------------------------------------------
// Splits

void SplitSpec::validate() const {
  std::set<std::string> seen;
  for (const auto* part : {&train, &validation, &test}) {
    for (const auto& id : *part) {
      if (!seen.insert(id).second) {
        fail(ErrorKind::kIntegrity, "clip '" + id + "' appears in more than one split");
      }
    }
  }
}

const std::vector<std::string>& SplitSpec::get(std::string_view split) const {
  if (split == "train") return train;
  if (split == "validation") return validation;
  if (split == "test") return test;
  fail(ErrorKind::kConfig, "unknown split '" + std::string(split) + "'");
}

std::string format_splits(const SplitSpec& s) {
  std::string out;
  for (const char* name : {"train", "validation", "test"}) {
    for (const auto& id : s.get(name)) {
      out += name;
      out += '\t';
      out += id;
      out += '\n';
    }
  }
  return out;
}

SplitSpec parse_splits(std::string_view text) {
  SplitSpec s;
  for_each_line(text, [&](std::string_view line, std::size_t lineno) {
    const auto fields = split_on(line, '\t');
    if (fields.size() != 2 || fields[1].empty()) {
      fail(ErrorKind::kSchema, "splits line " + std::to_string(lineno) + ": expected split<TAB>clip_id");
    }
    if (fields[0] == "train") {
      s.train.emplace_back(fields[1]);
    } else if (fields[0] == "validation") {
      s.validation.emplace_back(fields[1]);
    } else if (fields[0] == "test") {
      s.test.emplace_back(fields[1]);
    } else {
      fail(ErrorKind::kSchema, "splits line " + std::to_string(lineno) + ": unknown split");
    }
  });
  s.validate();
  return s;
}

void write_splits(const fs::path& path, const SplitSpec& s) {
  s.validate();
  write_text(path, format_splits(s));
}

SplitSpec load_splits(const fs::path& path) { return parse_splits(read_text(path)); }

// ---------------------------------------------------------------------------
// Metrics

std::string format_metrics_row(const MetricsRow& row) {
  return row.task + "," + row.difficulty + "," + row.method + "," + row.split + "," +
         format_double(row.accuracy) + "," + std::to_string(row.n);
}

std::string format_metrics(const std::vector<MetricsRow>& rows) {
  std::string out(kMetricsHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += format_metrics_row(r);
    out += '\n';
  }
  return out;
}

void write_metrics(const fs::path& path, const std::vector<MetricsRow>& rows) {
  write_text(path, format_metrics(rows));
}

}  // namespace vqa

// SPDX-License-Identifier: Apache-2.0
#include "vqa/question.hpp"

#include <cctype>

#include "vqa/error.hpp"

namespace vqa {

std::string_view task_name(Task t) {
  switch (t) {
    case Task::kPast: return "past";
    case Task::kPresent: return "present";
    case Task::kFuture: return "future";
  }
  return "present";
}

Task parse_task(std::string_view s) {
  if (s == "past") return Task::kPast;
  if (s == "present") return Task::kPresent;
  if (s == "future") return Task::kFuture;
  fail(ErrorKind::kSchema, "unknown task '" + std::string(s) + "'");
}

std::string_view difficulty_name(Difficulty d) {
  return d == Difficulty::kEasy ? "easy" : "hard";
}

Difficulty parse_difficulty(std::string_view s) {
  if (s == "easy") return Difficulty::kEasy;
  if (s == "hard") return Difficulty::kHard;
  fail(ErrorKind::kSchema, "unknown difficulty '" + std::string(s) + "'");
}

namespace {

bool starts_with_vowel(std::string_view s) {
  for (char c : s) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      switch (std::tolower(static_cast<unsigned char>(c))) {
        case 'a': case 'e': case 'i': case 'o': case 'u': return true;
        default: return false;
      }
    }
  }
  return false;
}

}  // namespace

std::string fill_blank(std::string_view question_text, std::string_view candidate) {
  const auto pos = question_text.find(kBlank);
  if (pos == std::string_view::npos) {
    fail(ErrorKind::kSchema, "question text has no blank");
  }
  std::string head(question_text.substr(0, pos));
  const std::string_view tail = question_text.substr(pos + kBlank.size());

  // Article directly before the blank, e.g. "A/An ___" or "a ___".
  std::size_t end = head.size();
  while (end > 0 && head[end - 1] == ' ') --end;
  std::size_t begin = end;
  while (begin > 0 && head[begin - 1] != ' ') --begin;
  const std::string word = head.substr(begin, end - begin);
  static constexpr std::string_view kArticles[] = {"A/An", "a/an", "A", "An", "a", "an"};
  for (std::string_view a : kArticles) {
    if (word == a && end < head.size()) {
      const bool upper = std::isupper(static_cast<unsigned char>(word[0]));
      std::string fixed = starts_with_vowel(candidate) ? "an" : "a";
      if (upper) fixed[0] = 'A';
      head.replace(begin, end - begin, fixed);
      break;
    }
  }
  return head + std::string(candidate) + std::string(tail);
}

}  // namespace vqa

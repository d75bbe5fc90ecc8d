// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace vqa {

enum class Task { kPast, kPresent, kFuture };
enum class Difficulty { kEasy, kHard };

std::string_view task_name(Task t);
Task parse_task(std::string_view s);
std::string_view difficulty_name(Difficulty d);
Difficulty parse_difficulty(std::string_view s);

/// Blank marker inside question templates.
inline constexpr std::string_view kBlank = "___";

/// One fill-in-the-blank multiple-choice item as stored in QAJSONL.
struct Question {
  std::string id;
  std::string clip_id;
  Task task = Task::kPresent;
  Difficulty difficulty = Difficulty::kEasy;
  std::string category;
  std::string question_text;  // contains kBlank exactly once
  std::vector<std::string> candidates;
  std::size_t correct_idx = 0;

  friend bool operator==(const Question&, const Question&) = default;
};

/// Replaces the blank with `candidate`, fixing an "A/An" style article that
/// directly precedes the blank by a first-letter vowel check.
std::string fill_blank(std::string_view question_text, std::string_view candidate);

}  // namespace vqa

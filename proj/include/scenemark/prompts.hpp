// SPDX-License-Identifier: Apache-2.0
//
// Prompt assembly for scene queries and cleanup of model answers.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace scenemark {

enum class TaskKind { qa, dense_caption, visual_grounding };

TaskKind parse_task(std::string_view name);
std::string_view task_name(TaskKind task);

struct PromptExample {
  std::string question;
  std::string answer;
};

/// System text plus the benchmark-specific guidelines, answer format and
/// worked examples.
struct PromptBundle {
  TaskKind task = TaskKind::qa;
  std::string benchmark;
  std::string system_prompt;
  std::string benchmark_prompt;
  std::vector<PromptExample> examples;

  /// Content of the last `Answer: ...` line (case-insensitive), if any.
  std::optional<std::string> extract(std::string_view response) const;
};

/// Regular expression a line must match to carry the answer; group 1 is the
/// content.
inline constexpr std::string_view kAnswerLinePattern = R"(^\s*answer\s*:\s*(.*?)\s*$)";

/// Known pairs: (qa, scanqa), (qa, sqa3d), (dense_caption, scan2cap),
/// (visual_grounding, scanrefer), (visual_grounding, multi3dref).
/// Throws InvalidArgument for anything else.
PromptBundle build_prompt(TaskKind task, std::string_view benchmark,
                          std::pair<int, int> grid = {2, 4});

std::vector<std::string> known_benchmarks();
TaskKind benchmark_task(std::string_view benchmark);

struct ImageAttachment {
  std::string mime = "image/png";
  std::string bytes;
};

struct ContentItem {
  enum class Kind { text, image } kind = Kind::text;
  std::string text;
  ImageAttachment image;
};

struct GenerationParams {
  int max_tokens = 256;
  double temperature = 0.0;
};

struct VlmRequest {
  std::string system;
  std::vector<ContentItem> user;
  GenerationParams params;

  std::size_t image_count() const;
};

/// System message is the system prompt followed by the benchmark prompt; the
/// user message is [stitched frames, BEV, question]. The stitched image is
/// always required, the BEV for captioning and grounding.
VlmRequest assemble_query(const PromptBundle& bundle,
                          const std::optional<ImageAttachment>& stitched,
                          const std::optional<ImageAttachment>& bev,
                          std::string_view question);

struct RefinedAnswer {
  std::string text;
  std::optional<int> object_id;   // grounding: first integer in the answer
  std::vector<int> object_ids;    // grounding: every integer, in order
  bool has_answer() const { return !text.empty(); }
};

/// Strips the answer format, lowercases, trims terminal punctuation and
/// collapses whitespace. QA answers are also de-pluralized word by word;
/// grounding answers get their integer ids parsed. Idempotent.
RefinedAnswer refine_answer(std::string_view raw, TaskKind task);

/// Suffix-stripping singularization used for QA answers.
std::string singularize(std::string_view word);

}  // namespace scenemark

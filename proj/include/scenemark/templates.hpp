// SPDX-License-Identifier: Apache-2.0
//
// Phrasing templates for training annotations. The data file holds one
// template per line as `task<TAB>template`; `#` starts a comment line. A
// template is `user text ||| assistant text` with `{field}` placeholders.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "scenemark/prompts.hpp"
#include "scenemark/rng.hpp"

namespace scenemark {

struct Annotation {
  TaskKind task = TaskKind::qa;
  std::map<std::string, std::string> fields;
};

struct PhrasedAnnotation {
  std::string prompt;
  std::string target;
  std::size_t template_index = 0;

  /// Prompt and target joined by a newline.
  std::string text() const { return prompt + "\n" + target; }
};

class TemplateLibrary {
 public:
  static TemplateLibrary parse(std::string_view text);
  static TemplateLibrary load(const std::filesystem::path& path);

  std::size_t count(TaskKind task) const;
  const std::string& raw(TaskKind task, std::size_t index) const;

  /// Picks one template for the annotation's task with `rng` and substitutes
  /// the payload fields verbatim. Throws InvalidArgument on a missing field
  /// or when the task has no templates.
  PhrasedAnnotation diversify(const Annotation& annotation, SplitRng& rng) const;

 private:
  std::map<TaskKind, std::vector<std::string>> templates_;
};

/// Replaces each `{name}` with fields.at(name).
std::string substitute(std::string_view tmpl,
                       const std::map<std::string, std::string>& fields);

}  // namespace scenemark

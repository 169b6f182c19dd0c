// SPDX-License-Identifier: Apache-2.0

#include "scenemark/templates.hpp"

#include <fstream>
#include <sstream>

#include "scenemark/errors.hpp"

namespace scenemark {
namespace {

constexpr std::string_view kSeparator = "|||";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

std::string substitute(std::string_view tmpl,
                       const std::map<std::string, std::string>& fields) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    const std::size_t close = tmpl.find('}', open);
    if (close == std::string_view::npos) {
      throw InvalidArgument("template: unterminated placeholder");
    }
    out.append(tmpl.substr(pos, open - pos));
    const std::string name(tmpl.substr(open + 1, close - open - 1));
    const auto it = fields.find(name);
    if (it == fields.end()) {
      throw InvalidArgument("template: annotation has no field '" + name + "'");
    }
    out.append(it->second);
    pos = close + 1;
  }
  return out;
}

TemplateLibrary TemplateLibrary::parse(std::string_view text) {
  TemplateLibrary lib;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw InvalidArgument("templates line " + std::to_string(line_no) +
                            ": expected task<TAB>template");
    }
    const TaskKind task = parse_task(trim(line.substr(0, tab)));
    const std::string_view body = trim(line.substr(tab + 1));
    if (body.find(kSeparator) == std::string_view::npos) {
      throw InvalidArgument("templates line " + std::to_string(line_no) +
                            ": missing '|||' between prompt and target");
    }
    lib.templates_[task].emplace_back(body);
  }
  return lib;
}

TemplateLibrary TemplateLibrary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::size_t TemplateLibrary::count(TaskKind task) const {
  const auto it = templates_.find(task);
  return it == templates_.end() ? 0 : it->second.size();
}

const std::string& TemplateLibrary::raw(TaskKind task, std::size_t index) const {
  return templates_.at(task).at(index);
}

PhrasedAnnotation TemplateLibrary::diversify(const Annotation& annotation,
                                             SplitRng& rng) const {
  const std::size_t n = count(annotation.task);
  if (n == 0) {
    throw InvalidArgument("no templates for task " +
                          std::string(task_name(annotation.task)));
  }
  const std::size_t index = rng.below(n);
  const std::string& tmpl = templates_.at(annotation.task)[index];
  const std::size_t sep = tmpl.find(kSeparator);
  PhrasedAnnotation out;
  out.prompt = substitute(trim(std::string_view(tmpl).substr(0, sep)), annotation.fields);
  out.target = substitute(trim(std::string_view(tmpl).substr(sep + kSeparator.size())),
                          annotation.fields);
  out.template_index = index;
  return out;
}

}  // namespace scenemark

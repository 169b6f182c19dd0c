// SPDX-License-Identifier: Apache-2.0

#include "scenemark/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <sstream>

#include "scenemark/errors.hpp"

namespace scenemark {
namespace {

struct BenchmarkSpec {
  std::string_view id;
  TaskKind task;
  std::string_view title;
  std::string_view guidelines;
  std::string_view format;
  std::vector<PromptExample> examples;
};

const std::vector<BenchmarkSpec>& benchmark_table() {
  static const std::vector<BenchmarkSpec> table = {
      {"scanqa",
       TaskKind::qa,
       "ScanQA",
       "- Object IDs are drawn to help you locate things. Do not mention IDs in "
       "your answer.\n"
       "- Answer in the style of the ScanQA benchmark: a short noun phrase, "
       "color, count or location.\n"
       "- Keep the answer concise, targeting 1-5 words.",
       "Answer: <short answer>",
       {{"What color is the chair next to the table?", "brown"},
        {"Where is the trash can located?", "to the left of the desk"}}},
      {"sqa3d",
       TaskKind::qa,
       "SQA3D",
       "- You are placed inside the scene in the situation described before the "
       "question. Reason from that position and orientation.\n"
       "- Object IDs are drawn to help you locate things. Do not mention IDs in "
       "your answer.\n"
       "- Keep the answer concise, targeting 1-5 words; use a single word for "
       "yes/no, counts and directions.",
       "Answer: <short answer>",
       {{"I am facing the bed. Which direction should I go to reach the door?",
         "left"},
        {"I am sitting on the sofa. How many chairs are in front of me?", "two"}}},
      {"scan2cap",
       TaskKind::dense_caption,
       "Scan2Cap",
       "- The question names one object by its marker ID. Find the marker with "
       "that ID in the frames and in the BEV image.\n"
       "- Describe the object's category, color and shape, and where it is "
       "relative to nearby objects.\n"
       "- Use one or two plain sentences. Do not mention the marker ID.",
       "Answer: <description>",
       {{"Describe the object represented by C_3.",
         "this is a brown wooden chair. it is placed at the end of the table."},
        {"Describe the object represented by C_12.",
         "a white rectangular cabinet. it stands against the wall next to the "
         "door."}}},
      {"scanrefer",
       TaskKind::visual_grounding,
       "ScanRefer",
       "- The question describes exactly one object in the scene.\n"
       "- Use the markers in the frames and the BEV image to decide which "
       "object matches the description.\n"
       "- Reply with that object's ID only.",
       "Answer: <ID>",
       {{"What is the ID of the black chair next to the window?", "12"},
        {"What is the ID of the table closest to the door?", "4"}}},
      {"multi3dref",
       TaskKind::visual_grounding,
       "Multi3DRefer",
       "- The description may match zero, one or several objects.\n"
       "- Use the markers in the frames and the BEV image to find every "
       "matching object.\n"
       "- Reply with all matching IDs separated by commas, or with none when "
       "no object matches.",
       "Answer: <ID>, <ID>, ... | none",
       {{"Which objects are the chairs around the dining table?", "3, 7, 8"},
        {"Which objects are the red sofas in the room?", "none"}}},
  };
  return table;
}

const BenchmarkSpec& find_benchmark(std::string_view id) {
  for (const auto& spec : benchmark_table()) {
    if (spec.id == id) return spec;
  }
  throw InvalidArgument("unknown benchmark '" + std::string(id) + "'");
}

std::string system_text(std::pair<int, int> grid) {
  std::ostringstream s;
  s << "You are an expert in understanding indoor 3D scenes. You are given two "
       "images of the same room.\n"
    << "Image 1 is a stitched 2D view of frames sampled from a video recorded "
       "while walking through the room, with dimensions of "
    << grid.first << " x " << grid.second
    << " (rows x columns), read left to right and top to bottom in recording "
       "order.\n"
    << "Image 2 is a BEV (Bird's Eye View) of the room rendered from its 3D "
       "reconstruction, seen from directly above.\n"
    << "Objects carry numbered markers. A number identifies the same object in "
       "every frame and in the BEV image.";
  return s.str();
}

std::string benchmark_text(const BenchmarkSpec& spec) {
  std::ostringstream s;
  s << "Benchmark: " << spec.title << "\n\n"
    << "Important Guidelines:\n"
    << spec.guidelines << "\n\n"
    << "Answer Format:\n"
    << "End your reply with a single line of the form\n"
    << spec.format << "\n\n"
    << "Examples:\n";
  for (std::size_t i = 0; i < spec.examples.size(); ++i) {
    s << "Example " << i + 1 << ":\n"
      << "Question: " << spec.examples[i].question << "\n"
      << "Answer: " << spec.examples[i].answer << "\n";
  }
  return s.str();
}

const std::regex& answer_line_regex() {
  static const std::regex re(std::string(kAnswerLinePattern),
                             std::regex::ECMAScript | std::regex::icase);
  return re;
}

std::optional<std::string> extract_answer(std::string_view response) {
  std::optional<std::string> found;
  std::size_t pos = 0;
  while (pos <= response.size()) {
    std::size_t nl = response.find('\n', pos);
    if (nl == std::string_view::npos) nl = response.size();
    const std::string line(response.substr(pos, nl - pos));
    std::smatch m;
    if (std::regex_match(line, m, answer_line_regex())) found = m[1].str();
    pos = nl + 1;
  }
  return found;
}

bool is_terminal_punct(char c) {
  static constexpr std::string_view kPunct = ".,;:!?\"'`";
  return kPunct.find(c) != std::string_view::npos;
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

std::vector<int> parse_integers(std::string_view text) {
  std::vector<int> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    long long value = 0;
    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
      value = std::min<long long>(value * 10 + (text[j] - '0'), 1LL << 31);
      ++j;
    }
    if (value < (1LL << 31)) out.push_back(static_cast<int>(value));
    i = j;
  }
  return out;
}

std::string refine_text_once(std::string_view raw, TaskKind task) {
  std::string text(raw);
  if (auto extracted = extract_answer(text)) text = *extracted;
  std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  text = collapse_whitespace(text);
  while (!text.empty() && (is_terminal_punct(text.back()) ||
                           std::isspace(static_cast<unsigned char>(text.back())))) {
    text.pop_back();
  }
  if (task == TaskKind::qa) {
    std::istringstream words(text);
    std::string word, out;
    while (words >> word) {
      if (!out.empty()) out.push_back(' ');
      out += singularize(word);
    }
    text = out;
  }
  return text;
}

}  // namespace

TaskKind parse_task(std::string_view name) {
  if (name == "qa") return TaskKind::qa;
  if (name == "dense_caption") return TaskKind::dense_caption;
  if (name == "visual_grounding") return TaskKind::visual_grounding;
  throw InvalidArgument("unknown task '" + std::string(name) + "'");
}

std::string_view task_name(TaskKind task) {
  switch (task) {
    case TaskKind::qa:
      return "qa";
    case TaskKind::dense_caption:
      return "dense_caption";
    case TaskKind::visual_grounding:
      return "visual_grounding";
  }
  return "?";
}

std::optional<std::string> PromptBundle::extract(std::string_view response) const {
  return extract_answer(response);
}

std::vector<std::string> known_benchmarks() {
  std::vector<std::string> out;
  for (const auto& spec : benchmark_table()) out.emplace_back(spec.id);
  return out;
}

TaskKind benchmark_task(std::string_view benchmark) {
  return find_benchmark(benchmark).task;
}

PromptBundle build_prompt(TaskKind task, std::string_view benchmark,
                          std::pair<int, int> grid) {
  const auto& spec = find_benchmark(benchmark);
  if (spec.task != task) {
    throw InvalidArgument("benchmark '" + std::string(benchmark) +
                          "' is not a " + std::string(task_name(task)) +
                          " benchmark");
  }
  if (grid.first <= 0 || grid.second <= 0) {
    throw InvalidArgument("build_prompt: grid must be positive");
  }
  PromptBundle bundle;
  bundle.task = task;
  bundle.benchmark = std::string(spec.id);
  bundle.system_prompt = system_text(grid);
  bundle.benchmark_prompt = benchmark_text(spec);
  bundle.examples = spec.examples;
  return bundle;
}

std::size_t VlmRequest::image_count() const {
  return static_cast<std::size_t>(
      std::count_if(user.begin(), user.end(), [](const ContentItem& item) {
        return item.kind == ContentItem::Kind::image;
      }));
}

VlmRequest assemble_query(const PromptBundle& bundle,
                          const std::optional<ImageAttachment>& stitched,
                          const std::optional<ImageAttachment>& bev,
                          std::string_view question) {
  if (!stitched) throw InvalidArgument("assemble_query: stitched frame image missing");
  if (!bev && bundle.task != TaskKind::qa) {
    throw InvalidArgument("assemble_query: " + std::string(task_name(bundle.task)) +
                          " needs the BEV image");
  }
  VlmRequest req;
  req.system = bundle.system_prompt + "\n\n" + bundle.benchmark_prompt;
  req.user.push_back({ContentItem::Kind::image, {}, *stitched});
  if (bev) req.user.push_back({ContentItem::Kind::image, {}, *bev});
  req.user.push_back({ContentItem::Kind::text, std::string(question), {}});
  return req;
}

std::string singularize(std::string_view word) {
  std::string w(word);
  if (w.size() <= 3 || w.back() != 's') return w;
  if (ends_with(w, "ss") || ends_with(w, "us") || ends_with(w, "is")) return w;
  const bool sibilant = ends_with(w, "ses") || ends_with(w, "xes") ||
                        ends_with(w, "zes") || ends_with(w, "ches") ||
                        ends_with(w, "shes");
  if (sibilant && w.size() - 2 >= 3) return w.substr(0, w.size() - 2);
  if (w.size() - 1 >= 3) return w.substr(0, w.size() - 1);
  return w;
}

RefinedAnswer refine_answer(std::string_view raw, TaskKind task) {
  std::string text = refine_text_once(raw, task);
  // Iterate to a fixed point so refining a refined answer is a no-op.
  for (int guard = 0; guard < 64; ++guard) {
    std::string again = refine_text_once(text, task);
    if (again == text) break;
    text = std::move(again);
  }
  RefinedAnswer out;
  out.text = text;
  if (task == TaskKind::visual_grounding) {
    out.object_ids = parse_integers(text);
    if (!out.object_ids.empty()) out.object_id = out.object_ids.front();
  }
  return out;
}

}  // namespace scenemark

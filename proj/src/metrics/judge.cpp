// SPDX-License-Identifier: Apache-2.0

#include <regex>

#include "scenemark/errors.hpp"
#include "scenemark/metrics.hpp"
#include "scenemark/rng.hpp"

namespace scenemark {
namespace {

constexpr std::string_view kJudgeSystem =
    "You compare two answers to a question about an indoor 3D scene against "
    "the ground-truth answer. Decide which answer agrees better with the "
    "ground truth in content and correctness. Ignore length and style.\n"
    "End your reply with a single line of the form\n"
    "Answer: A | B | tie";

}  // namespace

long long gpt_score(long long win, long long tie, long long lose,
                    const GptWeights& weights) {
  if (win < 0 || tie < 0 || lose < 0) {
    throw InvalidArgument("gpt_score: counts must be non-negative");
  }
  return weights.win * win + weights.tie * tie + weights.lose * lose;
}

VlmRequest judge_request(const JudgePair& pair, bool swapped) {
  const std::string& a = swapped ? pair.answer2 : pair.answer1;
  const std::string& b = swapped ? pair.answer1 : pair.answer2;
  VlmRequest req;
  req.system = std::string(kJudgeSystem);
  req.user.push_back({ContentItem::Kind::text,
                      "Question: " + pair.question + "\nGround truth: " +
                          pair.reference + "\nAnswer A: " + a + "\nAnswer B: " + b,
                      {}});
  req.params.max_tokens = 64;
  return req;
}

std::optional<std::string> parse_judge_verdict(std::string_view reply) {
  static const std::regex answer_line(std::string(kAnswerLinePattern),
                                      std::regex::ECMAScript | std::regex::icase);
  std::string text(reply);
  std::size_t pos = 0;
  std::optional<std::string> line_content;
  while (pos <= reply.size()) {
    std::size_t nl = reply.find('\n', pos);
    if (nl == std::string_view::npos) nl = reply.size();
    const std::string line(reply.substr(pos, nl - pos));
    std::smatch m;
    if (std::regex_match(line, m, answer_line)) line_content = m[1].str();
    pos = nl + 1;
  }
  if (line_content) text = *line_content;
  for (const auto& tok : tokenize(text)) {
    if (tok == "a" || tok == "b" || tok == "tie") return tok;
    if (tok == "equal" || tok == "equally" || tok == "draw") return "tie";
  }
  return std::nullopt;
}

JudgeOutcome gpt_judge(std::span<const JudgePair> pairs, const JudgeConfig& config) {
  JudgeOutcome out;
  std::vector<VlmRequest> requests;
  requests.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const bool swapped =
        config.randomize_order &&
        (mix64(config.seed ^ mix64(static_cast<std::uint64_t>(i))) & 1u) != 0;
    out.swapped.push_back(swapped);
    requests.push_back(judge_request(pairs[i], swapped));
  }
  const auto slots = send_batch(requests, config.endpoint);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i].ok()) {
      ++out.failed;
      out.verdicts.push_back(Verdict::failed);
      continue;
    }
    const auto v = parse_judge_verdict(slots[i].response->text);
    Verdict verdict = Verdict::tie;
    if (!v) {
      ++out.unparsed;
    } else if (*v != "tie") {
      const bool first_wins = *v == "a";
      verdict = first_wins != out.swapped[i] ? Verdict::win : Verdict::lose;
    }
    out.verdicts.push_back(verdict);
    if (verdict == Verdict::win) ++out.win;
    if (verdict == Verdict::tie) ++out.tie;
    if (verdict == Verdict::lose) ++out.lose;
  }
  return out;
}

}  // namespace scenemark

// SPDX-License-Identifier: Apache-2.0
//
// Evaluation measures: exact match, n-gram caption metrics, IoU-gated
// captioning, grounding accuracy, multi-target F1 and pairwise judge scores.

#pragma once

#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scenemark/prompts.hpp"
#include "scenemark/types.hpp"
#include "scenemark/vlm.hpp"

namespace scenemark {

/// Lowercase, drop ASCII punctuation, split on whitespace.
std::vector<std::string> tokenize(std::string_view text);

/// 1 iff the normalized prediction equals a normalized reference.
bool em1(std::string_view pred, std::span<const std::string> refs);
/// em1, or a non-empty prediction whose tokens contain a reference as a
/// contiguous run (or are contained in one).
bool em_r1(std::string_view pred, std::span<const std::string> refs);

/// Sentence BLEU-n: clipped precisions of orders 1..n, brevity penalty
/// against the closest reference length. Orders the prediction is too short
/// to contain are left out of the geometric mean.
double bleu(std::string_view pred, std::span<const std::string> refs, int n = 4);

/// ROUGE-L F-measure with beta = 1.2, best precision and recall over refs.
double rouge_l(std::string_view pred, std::span<const std::string> refs);

/// Unigram METEOR without synonym tables: exact then suffix-stem matching,
/// Fmean = 10PR / (R + 9P), fragmentation penalty 0.5 (chunks / m)^3.
/// Best score over refs.
double meteor_lite(std::string_view pred, std::span<const std::string> refs);

/// Suffix stripper used by meteor_lite.
std::string light_stem(std::string_view token);

struct CaptionSample {
  std::string prediction;
  std::vector<std::string> references;
};

/// Corpus BLEU-1..n, counts pooled over samples.
std::vector<double> corpus_bleu(std::span<const CaptionSample> samples, int n = 4);

struct CiderResult {
  double mean = 0.0;
  std::vector<double> per_sample;
};

/// Plain CIDEr, n = 1..4, TF-IDF with document frequencies over each
/// sample's reference set, scaled by 10. Throws on an empty corpus.
CiderResult cider(std::span<const CaptionSample> samples);

/// Records whose box IoU is below the threshold (or lack a predicted box)
/// have their prediction blanked.
struct CaptionRecord {
  std::string id;
  std::string caption;
  std::vector<std::string> references;
  std::optional<Aabb> predicted;
  Aabb gt;
};
std::vector<CaptionSample> caption_iou_gate(std::span<const CaptionRecord> records,
                                            double threshold);

struct GroundingRecord {
  std::string id;
  std::optional<Aabb> predicted;  // empty when the answer had no usable id
  Aabb gt;
};

/// Fraction of records with IoU >= each threshold, keyed by threshold.
std::map<double, double> grounding_acc(std::span<const GroundingRecord> records,
                                       std::span<const double> thresholds);

struct PredictedBox {
  int id = 0;
  std::optional<Aabb> box;  // empty when the id names no instance
};

struct MultiRefRecord {
  std::string id;
  std::vector<PredictedBox> predicted;
  std::vector<Aabb> gt;
  bool distractor = false;
};

enum class MatchStrategy { greedy, optimal };

struct MatchResult {
  int matches = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Greedy: pairs with IoU >= threshold taken by descending IoU, ties to the
/// lower predicted id. Optimal: maximum-cardinality matching. Zero-target
/// records score 1 iff nothing is predicted.
MatchResult match_record(const MultiRefRecord& record, double threshold,
                         MatchStrategy strategy = MatchStrategy::greedy);

/// Subset of a record: "ZT w/o D", "ZT w/ D", "ST w/o D", "ST w/ D" or "MT".
std::string multiref_subset(const MultiRefRecord& record);

struct F1Breakdown {
  std::vector<std::pair<std::string, double>> f1;  // subsets present, then ALL
  std::map<std::string, std::size_t> counts;
  std::optional<double> get(std::string_view subset) const;
};

F1Breakdown multi3dref_f1(std::span<const MultiRefRecord> records, double threshold,
                          MatchStrategy strategy = MatchStrategy::greedy);

struct GptWeights {
  long long win = 3;
  long long tie = 1;
  long long lose = 0;
};
inline constexpr GptWeights kGptWeightsNegativeLoss{3, 1, -1};

long long gpt_score(long long win, long long tie, long long lose,
                    const GptWeights& weights = {});

struct JudgePair {
  std::string id;
  std::string question;
  std::string reference;
  std::string answer1;  // the model being scored
  std::string answer2;
};

struct JudgeConfig {
  EndpointConfig endpoint;
  std::uint64_t seed = 0;
  bool randomize_order = true;
};

enum class Verdict { win, tie, lose, failed };

struct JudgeOutcome {
  long long win = 0;
  long long tie = 0;
  long long lose = 0;
  long long unparsed = 0;  // counted as ties
  long long failed = 0;    // endpoint errors, not counted
  std::vector<Verdict> verdicts;
  std::vector<bool> swapped;
};

/// Builds the judge request for one pair; `swapped` puts answer2 first.
VlmRequest judge_request(const JudgePair& pair, bool swapped);

/// "a", "b" or "tie" from a judge reply; nullopt when unreadable.
std::optional<std::string> parse_judge_verdict(std::string_view reply);

JudgeOutcome gpt_judge(std::span<const JudgePair> pairs, const JudgeConfig& config);

/// Ordered metric values with the sample count they were computed over.
struct MetricReport {
  std::string title;
  std::vector<std::pair<std::string, double>> values;
  std::size_t samples = 0;
  std::vector<std::string> notes;

  void add(std::string name, double value);
  std::optional<double> get(std::string_view name) const;
  /// Throws Error if a value is not finite or the sample count is zero.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  std::string to_table() const;
};

/// Generic evaluation record, one per benchmark question.
struct EvalRecord {
  std::string id;
  TaskKind task = TaskKind::qa;
  std::string prediction;               // refined answer text
  std::vector<std::string> references;
  std::vector<int> predicted_ids;
  std::vector<std::optional<Aabb>> predicted_boxes;  // parallel to predicted_ids
  std::vector<Aabb> gt_boxes;
  bool distractor = false;
};

struct PerRecord {
  std::string id;
  nlohmann::ordered_json scores;
};

struct Evaluation {
  MetricReport report;
  std::vector<PerRecord> per_record;
};

/// EM-1, EM-R1 and the caption metrics over QA records.
Evaluation evaluate_qa(std::span<const EvalRecord> records);
/// Caption metrics at each IoU gate, using the first predicted box.
Evaluation evaluate_captions(std::span<const EvalRecord> records,
                             std::span<const double> thresholds);
/// Acc@threshold using the first predicted box.
Evaluation evaluate_grounding(std::span<const EvalRecord> records,
                              std::span<const double> thresholds);
/// Multi-target F1 breakdown at each threshold.
Evaluation evaluate_multiref(std::span<const EvalRecord> records,
                             std::span<const double> thresholds,
                             MatchStrategy strategy = MatchStrategy::greedy);

}  // namespace scenemark

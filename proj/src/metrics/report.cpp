// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "scenemark/errors.hpp"
#include "scenemark/geometry.hpp"
#include "scenemark/metrics.hpp"

namespace scenemark {
namespace {

std::string at(std::string_view name, double threshold) {
  std::ostringstream s;
  s << name << '@' << threshold;
  return s.str();
}

std::optional<Aabb> first_box(const EvalRecord& r) {
  if (r.predicted_boxes.empty()) return std::nullopt;
  return r.predicted_boxes.front();
}

const Aabb& single_gt(const EvalRecord& r) {
  if (r.gt_boxes.empty()) {
    throw InvalidArgument("record " + r.id + " has no ground-truth box");
  }
  return r.gt_boxes.front();
}

void add_caption_metrics(MetricReport& report, std::span<const CaptionSample> samples,
                         std::string_view suffix) {
  const auto bleus = corpus_bleu(samples, 4);
  for (int n = 1; n <= 4; ++n) {
    report.add("BLEU-" + std::to_string(n) + std::string(suffix), bleus[n - 1]);
  }
  double rouge = 0.0, meteor = 0.0;
  for (const auto& s : samples) {
    rouge += rouge_l(s.prediction, s.references);
    meteor += meteor_lite(s.prediction, s.references);
  }
  const double n = static_cast<double>(samples.size());
  report.add("ROUGE-L" + std::string(suffix), rouge / n);
  report.add("METEOR-lite" + std::string(suffix), meteor / n);
  report.add("CIDEr" + std::string(suffix), cider(samples).mean);
}

void require_records(std::span<const EvalRecord> records, const char* who) {
  if (records.empty()) throw InvalidArgument(std::string(who) + ": no records");
}

}  // namespace

void MetricReport::add(std::string name, double value) {
  for (auto& [k, v] : values) {
    if (k == name) {
      v = value;
      return;
    }
  }
  values.emplace_back(std::move(name), value);
}

std::optional<double> MetricReport::get(std::string_view name) const {
  for (const auto& [k, v] : values) {
    if (k == name) return v;
  }
  return std::nullopt;
}

void MetricReport::validate() const {
  if (samples == 0) throw Error("metric report '" + title + "': no samples");
  for (const auto& [k, v] : values) {
    if (!std::isfinite(v)) throw Error("metric report: " + k + " is not finite");
  }
}

nlohmann::ordered_json MetricReport::to_json() const {
  nlohmann::ordered_json out;
  out["title"] = title;
  out["samples"] = samples;
  auto& m = out["metrics"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : values) m[k] = v;
  out["notes"] = notes;
  return out;
}

std::string MetricReport::to_table() const {
  std::size_t width = std::string_view("samples").size();
  for (const auto& [k, v] : values) width = std::max(width, k.size());
  std::ostringstream s;
  if (!title.empty()) s << title << '\n';
  for (const auto& [k, v] : values) {
    s << std::left << std::setw(static_cast<int>(width)) << k << "  " << std::right
      << std::fixed << std::setprecision(4) << std::setw(10) << v << '\n';
  }
  s << std::left << std::setw(static_cast<int>(width)) << "samples" << "  " << std::right
    << std::setw(10) << samples << '\n';
  for (const auto& note : notes) s << "note: " << note << '\n';
  return s.str();
}

Evaluation evaluate_qa(std::span<const EvalRecord> records) {
  require_records(records, "evaluate_qa");
  Evaluation out;
  out.report.title = "qa";
  out.report.samples = records.size();
  std::vector<CaptionSample> samples;
  double e1 = 0.0, er = 0.0;
  for (const auto& r : records) {
    const bool a = em1(r.prediction, r.references);
    const bool b = em_r1(r.prediction, r.references);
    e1 += a;
    er += b;
    samples.push_back({r.prediction, r.references});
    PerRecord pr{r.id, {}};
    pr.scores["prediction"] = r.prediction;
    pr.scores["EM-1"] = a ? 1 : 0;
    pr.scores["EM-R1"] = b ? 1 : 0;
    pr.scores["BLEU-1"] = bleu(r.prediction, r.references, 1);
    pr.scores["BLEU-4"] = bleu(r.prediction, r.references, 4);
    pr.scores["ROUGE-L"] = rouge_l(r.prediction, r.references);
    pr.scores["METEOR-lite"] = meteor_lite(r.prediction, r.references);
    out.per_record.push_back(std::move(pr));
  }
  const double n = static_cast<double>(records.size());
  out.report.add("EM-1", e1 / n);
  out.report.add("EM-R1", er / n);
  add_caption_metrics(out.report, samples, "");
  const auto per_cider = cider(samples).per_sample;
  for (std::size_t i = 0; i < out.per_record.size(); ++i) {
    out.per_record[i].scores["CIDEr"] = per_cider[i];
  }
  out.report.notes.push_back(
      "EM-R1: exact match, or token-run containment between prediction and a reference");
  out.report.notes.push_back("METEOR-lite: exact and suffix-stem matching only");
  out.report.validate();
  return out;
}

Evaluation evaluate_captions(std::span<const EvalRecord> records,
                             std::span<const double> thresholds) {
  require_records(records, "evaluate_captions");
  Evaluation out;
  out.report.title = "dense_caption";
  out.report.samples = records.size();
  std::vector<CaptionRecord> caps;
  for (const auto& r : records) {
    caps.push_back({r.id, r.prediction, r.references, first_box(r), single_gt(r)});
    PerRecord pr{r.id, {}};
    pr.scores["prediction"] = r.prediction;
    const auto box = first_box(r);
    pr.scores["iou"] = box ? aabb_iou(*box, single_gt(r)) : 0.0;
    out.per_record.push_back(std::move(pr));
  }
  for (double t : thresholds) {
    const auto gated = caption_iou_gate(caps, t);
    add_caption_metrics(out.report, gated, at("", t));
  }
  out.report.notes.push_back("captions with box IoU below the gate score as empty");
  out.report.validate();
  return out;
}

Evaluation evaluate_grounding(std::span<const EvalRecord> records,
                              std::span<const double> thresholds) {
  require_records(records, "evaluate_grounding");
  Evaluation out;
  out.report.title = "visual_grounding";
  out.report.samples = records.size();
  std::vector<GroundingRecord> recs;
  for (const auto& r : records) {
    recs.push_back({r.id, first_box(r), single_gt(r)});
    PerRecord pr{r.id, {}};
    pr.scores["predicted_ids"] = r.predicted_ids;
    const auto box = first_box(r);
    pr.scores["iou"] = box ? aabb_iou(*box, single_gt(r)) : 0.0;
    out.per_record.push_back(std::move(pr));
  }
  for (const auto& [t, acc] : grounding_acc(recs, thresholds)) {
    out.report.add(at("Acc", t), acc);
  }
  out.report.validate();
  return out;
}

Evaluation evaluate_multiref(std::span<const EvalRecord> records,
                             std::span<const double> thresholds, MatchStrategy strategy) {
  require_records(records, "evaluate_multiref");
  Evaluation out;
  out.report.title = "multi_target_grounding";
  out.report.samples = records.size();
  std::vector<MultiRefRecord> recs;
  for (const auto& r : records) {
    MultiRefRecord m{r.id, {}, r.gt_boxes, r.distractor};
    for (std::size_t i = 0; i < r.predicted_ids.size(); ++i) {
      m.predicted.push_back({r.predicted_ids[i], i < r.predicted_boxes.size()
                                                     ? r.predicted_boxes[i]
                                                     : std::nullopt});
    }
    recs.push_back(std::move(m));
  }
  for (std::size_t i = 0; i < recs.size(); ++i) {
    PerRecord pr{recs[i].id, {}};
    pr.scores["subset"] = multiref_subset(recs[i]);
    pr.scores["predicted_ids"] = records[i].predicted_ids;
    for (double t : thresholds) pr.scores[at("F1", t)] = match_record(recs[i], t, strategy).f1;
    out.per_record.push_back(std::move(pr));
  }
  for (double t : thresholds) {
    const auto breakdown = multi3dref_f1(recs, t, strategy);
    for (const auto& [subset, f1] : breakdown.f1) {
      out.report.add(at("F1", t) + " " + subset, f1);
    }
  }
  out.report.notes.push_back("zero-target records score 1 only for an empty prediction");
  out.report.validate();
  return out;
}

}  // namespace scenemark

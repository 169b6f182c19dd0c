// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <functional>
#include <tuple>

#include "scenemark/errors.hpp"
#include "scenemark/geometry.hpp"
#include "scenemark/metrics.hpp"

namespace scenemark {
namespace {

constexpr std::array<std::string_view, 6> kSubsets = {
    "ZT w/o D", "ZT w/ D", "ST w/o D", "ST w/ D", "MT", "ALL"};

struct Edge {
  double iou;
  int pred_id;
  std::size_t pred;
  std::size_t gt;
};

std::vector<Edge> candidate_edges(const MultiRefRecord& record, double threshold) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < record.predicted.size(); ++i) {
    if (!record.predicted[i].box) continue;
    for (std::size_t j = 0; j < record.gt.size(); ++j) {
      const double iou = aabb_iou(*record.predicted[i].box, record.gt[j]);
      if (iou >= threshold) edges.push_back({iou, record.predicted[i].id, i, j});
    }
  }
  return edges;
}

int greedy_matches(const MultiRefRecord& record, std::vector<Edge> edges) {
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(b.iou, a.pred_id, a.gt) < std::tie(a.iou, b.pred_id, b.gt);
  });
  std::vector<bool> pred_used(record.predicted.size(), false);
  std::vector<bool> gt_used(record.gt.size(), false);
  int matches = 0;
  for (const auto& e : edges) {
    if (pred_used[e.pred] || gt_used[e.gt]) continue;
    pred_used[e.pred] = gt_used[e.gt] = true;
    ++matches;
  }
  return matches;
}

// Maximum bipartite matching by augmenting paths.
int optimal_matches(const MultiRefRecord& record, const std::vector<Edge>& edges) {
  std::vector<std::vector<std::size_t>> adj(record.predicted.size());
  for (const auto& e : edges) adj[e.pred].push_back(e.gt);
  std::vector<int> gt_owner(record.gt.size(), -1);
  int matches = 0;
  for (std::size_t p = 0; p < adj.size(); ++p) {
    std::vector<bool> visited(record.gt.size(), false);
    std::function<bool(std::size_t)> augment = [&](std::size_t u) {
      for (std::size_t g : adj[u]) {
        if (visited[g]) continue;
        visited[g] = true;
        if (gt_owner[g] < 0 || augment(static_cast<std::size_t>(gt_owner[g]))) {
          gt_owner[g] = static_cast<int>(u);
          return true;
        }
      }
      return false;
    };
    if (augment(p)) ++matches;
  }
  return matches;
}

}  // namespace

std::vector<CaptionSample> caption_iou_gate(std::span<const CaptionRecord> records,
                                            double threshold) {
  std::vector<CaptionSample> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const bool pass = r.predicted && aabb_iou(*r.predicted, r.gt) >= threshold;
    out.push_back({pass ? r.caption : std::string(), r.references});
  }
  return out;
}

std::map<double, double> grounding_acc(std::span<const GroundingRecord> records,
                                       std::span<const double> thresholds) {
  if (records.empty()) throw InvalidArgument("grounding_acc: no records");
  std::map<double, double> out;
  for (double t : thresholds) {
    std::size_t hits = 0;
    for (const auto& r : records) {
      if (r.gt.isEmpty()) throw InvalidArgument("grounding_acc: record " + r.id +
                                                " has no ground-truth box");
      if (r.predicted && aabb_iou(*r.predicted, r.gt) >= t) ++hits;
    }
    out[t] = static_cast<double>(hits) / static_cast<double>(records.size());
  }
  return out;
}

MatchResult match_record(const MultiRefRecord& record, double threshold,
                         MatchStrategy strategy) {
  // Repeated predicted ids count once.
  MultiRefRecord rec = record;
  std::stable_sort(rec.predicted.begin(), rec.predicted.end(),
                   [](const PredictedBox& a, const PredictedBox& b) { return a.id < b.id; });
  rec.predicted.erase(std::unique(rec.predicted.begin(), rec.predicted.end(),
                                  [](const PredictedBox& a, const PredictedBox& b) {
                                    return a.id == b.id;
                                  }),
                      rec.predicted.end());

  MatchResult out;
  if (rec.gt.empty()) {
    out.f1 = out.precision = out.recall = rec.predicted.empty() ? 1.0 : 0.0;
    return out;
  }
  if (rec.predicted.empty()) return out;
  auto edges = candidate_edges(rec, threshold);
  out.matches = strategy == MatchStrategy::greedy ? greedy_matches(rec, std::move(edges))
                                                  : optimal_matches(rec, edges);
  out.precision = static_cast<double>(out.matches) / rec.predicted.size();
  out.recall = static_cast<double>(out.matches) / rec.gt.size();
  if (out.matches > 0) {
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  }
  return out;
}

std::string multiref_subset(const MultiRefRecord& record) {
  if (record.gt.size() >= 2) return "MT";
  const std::string base = record.gt.empty() ? "ZT" : "ST";
  return base + (record.distractor ? " w/ D" : " w/o D");
}

std::optional<double> F1Breakdown::get(std::string_view subset) const {
  for (const auto& [name, v] : f1) {
    if (name == subset) return v;
  }
  return std::nullopt;
}

F1Breakdown multi3dref_f1(std::span<const MultiRefRecord> records, double threshold,
                          MatchStrategy strategy) {
  std::map<std::string, double> sums;
  F1Breakdown out;
  for (const auto& r : records) {
    const double f1 = match_record(r, threshold, strategy).f1;
    const std::string subset = multiref_subset(r);
    sums[subset] += f1;
    sums["ALL"] += f1;
    ++out.counts[subset];
    ++out.counts["ALL"];
  }
  for (auto name : kSubsets) {
    const auto it = out.counts.find(std::string(name));
    if (it == out.counts.end() || it->second == 0) continue;
    out.f1.emplace_back(std::string(name),
                        sums[std::string(name)] / static_cast<double>(it->second));
  }
  return out;
}

}  // namespace scenemark

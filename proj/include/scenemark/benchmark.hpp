// SPDX-License-Identifier: Apache-2.0
//
// Benchmark question files (JSONL) and a generator of questions with known
// answers for synthetic scenes.

#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scenemark/prompts.hpp"
#include "scenemark/synth.hpp"
#include "scenemark/types.hpp"

namespace scenemark {

/// One question. `target_ids` name the instances that answer a grounding or
/// captioning question; `gt_boxes`, when given, override the instance boxes
/// as ground truth.
struct BenchmarkItem {
  std::string id;
  std::string scene;
  std::string benchmark;
  std::string question;
  std::vector<std::string> answers;
  std::vector<int> target_ids;
  std::vector<Aabb> gt_boxes;
  bool distractor = false;

  TaskKind task() const { return benchmark_task(benchmark); }
  /// Answer text a perfect model would give, in the benchmark's format.
  std::string oracle_answer() const;
};

nlohmann::ordered_json item_to_json(const BenchmarkItem& item);
/// Throws ParseError naming the missing or mistyped field.
BenchmarkItem item_from_json(const nlohmann::json& json);

/// Throws ValidationError listing line numbers of malformed items and
/// duplicate ids.
std::vector<BenchmarkItem> read_benchmark(const std::filesystem::path& path);
void write_benchmark(const std::filesystem::path& path,
                     std::span<const BenchmarkItem> items);

/// Ground-truth boxes of an item: its explicit boxes, else the boxes of its
/// target instances. Throws InvalidArgument for an unknown target id.
std::vector<Aabb> ground_truth_boxes(const BenchmarkItem& item, const SceneBundle& scene);

/// Questions for every benchmark, answerable from the generator's object
/// list: colors and categories (scanqa), descriptions (scanrefer),
/// captions (scan2cap) and zero/single/multi-target descriptions
/// (multi3dref).
std::vector<BenchmarkItem> synth_benchmark(const SynthScene& scene);

}  // namespace scenemark

// SPDX-License-Identifier: Apache-2.0
//
// Fine-tuning corpus builder: each annotation becomes a single-turn
// conversation over the scene's annotated frames and BEV image.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "scenemark/annotate.hpp"
#include "scenemark/benchmark.hpp"
#include "scenemark/templates.hpp"

namespace scenemark {

/// Annotation sources in corpus order.
const std::vector<std::string>& scanalign_sources();
/// scanqa, sqa3d -> qa; scan2cap -> dense_caption; multi3dref, scanrefer ->
/// visual_grounding.
TaskKind source_task(std::string_view source);

struct Turn {
  std::string role;
  std::string content;
  friend bool operator==(const Turn&, const Turn&) = default;
};

struct TrainingRecord {
  std::string id;
  std::string scene;
  std::string source;
  std::vector<std::string> images;  // n frames then the BEV image
  std::vector<Turn> conversations;
  friend bool operator==(const TrainingRecord&, const TrainingRecord&) = default;
};

inline constexpr std::string_view kImagePlaceholder = "<image>";

nlohmann::ordered_json record_to_json(const TrainingRecord& record);
TrainingRecord record_from_json(const nlohmann::json& json);

/// One JSON object per line, keys in schema order.
void export_records(std::span<const TrainingRecord> records,
                    const std::filesystem::path& path);
std::vector<TrainingRecord> import_records(const std::filesystem::path& path);

struct DatasetConfig {
  AnnotateConfig annotate;
  std::uint64_t template_seed = 0;
  bool skip_unresolved = false;  // warn and skip instead of failing

  nlohmann::ordered_json to_json() const;
};

struct DatasetManifest {
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
  std::vector<std::string> images;  // every image path records refer to
  nlohmann::ordered_json config;
  std::string config_hash;
  bool dry_run = false;

  nlohmann::ordered_json to_json() const;
};

struct Dataset {
  std::vector<TrainingRecord> records;
  DatasetManifest manifest;
};

/// Annotates every referenced scene once under `out_dir/images/<scene>/` and
/// turns each annotation into a record. Scenes are read from
/// `scene_root/<scene>/`. Throws ValidationError for unresolved scenes unless
/// skipping is enabled.
Dataset build_dataset(const std::filesystem::path& scene_root,
                      std::span<const BenchmarkItem> annotations,
                      const TemplateLibrary& templates, const DatasetConfig& config,
                      const std::filesystem::path& out_dir);

/// Manifest for per-source counts without rendering anything.
DatasetManifest dry_run_manifest(const std::map<std::string, std::size_t>& counts,
                                 const DatasetConfig& config);

/// Per-source counts from a JSON object of source -> count.
std::map<std::string, std::size_t> read_source_counts(const std::filesystem::path& path);

/// Manifest, records and images to `out_dir` (manifest.json, records.jsonl).
void write_dataset(const Dataset& dataset, const std::filesystem::path& out_dir);

/// SHA-256 of the compact dump of `config`.
std::string config_hash(const nlohmann::ordered_json& config);

}  // namespace scenemark

// SPDX-License-Identifier: Apache-2.0

#include "scenemark/scanalign.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "scenemark/cache.hpp"
#include "scenemark/errors.hpp"
#include "scenemark/rng.hpp"
#include "scenemark/scene_io.hpp"

namespace fs = std::filesystem;

namespace scenemark {
namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

Annotation to_annotation(const BenchmarkItem& item) {
  Annotation a;
  a.task = item.task();
  switch (a.task) {
    case TaskKind::qa:
      a.fields["question"] = item.question;
      a.fields["answer"] = item.answers.front();
      break;
    case TaskKind::dense_caption:
      a.fields["object_id"] = std::to_string(item.target_ids.front());
      a.fields["caption"] = item.answers.front();
      break;
    case TaskKind::visual_grounding:
      a.fields["description"] = item.question;
      a.fields["object_id"] = item.oracle_answer();
      break;
  }
  return a;
}

std::string user_content(std::size_t image_count, const std::string& prompt) {
  std::string out;
  for (std::size_t i = 0; i < image_count; ++i) {
    out += kImagePlaceholder;
    out += '\n';
  }
  return out + prompt;
}

std::size_t count_placeholders(std::string_view text) {
  std::size_t n = 0;
  for (auto pos = text.find(kImagePlaceholder); pos != std::string_view::npos;
       pos = text.find(kImagePlaceholder, pos + kImagePlaceholder.size())) {
    ++n;
  }
  return n;
}

}  // namespace

const std::vector<std::string>& scanalign_sources() {
  static const std::vector<std::string> sources = {"scanqa", "sqa3d", "scan2cap",
                                                   "multi3dref", "scanrefer"};
  return sources;
}

TaskKind source_task(std::string_view source) { return benchmark_task(source); }

nlohmann::ordered_json record_to_json(const TrainingRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["scene"] = r.scene;
  j["source"] = r.source;
  j["images"] = r.images;
  auto& conv = j["conversations"] = nlohmann::ordered_json::array();
  for (const auto& t : r.conversations) {
    nlohmann::ordered_json tj;
    tj["role"] = t.role;
    tj["content"] = t.content;
    conv.push_back(std::move(tj));
  }
  return j;
}

TrainingRecord record_from_json(const nlohmann::json& j) {
  TrainingRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.scene = j.at("scene").get<std::string>();
    r.source = j.at("source").get<std::string>();
    r.images = j.at("images").get<std::vector<std::string>>();
    for (const auto& t : j.at("conversations")) {
      r.conversations.push_back({t.at("role").get<std::string>(),
                                 t.at("content").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("training record: ") + e.what(), 0);
  }
  return r;
}

void export_records(std::span<const TrainingRecord> records, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<TrainingRecord> import_records(const fs::path& path) {
  std::vector<TrainingRecord> out;
  for (const auto& j : read_jsonl(path)) out.push_back(record_from_json(j));
  return out;
}

nlohmann::ordered_json DatasetConfig::to_json() const {
  nlohmann::ordered_json j;
  j["annotate"] = annotate.to_json();
  j["template_seed"] = template_seed;
  j["skip_unresolved"] = skip_unresolved;
  return j;
}

std::string config_hash(const nlohmann::ordered_json& config) {
  return sha256_hex(config.dump());
}

nlohmann::ordered_json DatasetManifest::to_json() const {
  nlohmann::ordered_json j;
  j["dry_run"] = dry_run;
  auto& c = j["counts"] = nlohmann::ordered_json::object();
  for (const auto& s : scanalign_sources()) c[s] = counts.count(s) ? counts.at(s) : 0;
  for (const auto& [s, n] : counts) {
    if (!c.contains(s)) c[s] = n;
  }
  j["total"] = total;
  j["skipped"] = skipped;
  j["warnings"] = warnings;
  j["images"] = images;
  j["config"] = config;
  j["config_hash"] = config_hash;
  return j;
}

DatasetManifest dry_run_manifest(const std::map<std::string, std::size_t>& counts,
                                 const DatasetConfig& config) {
  DatasetManifest m;
  m.dry_run = true;
  m.config = config.to_json();
  m.config_hash = scenemark::config_hash(m.config);
  for (const auto& [source, n] : counts) {
    source_task(source);  // rejects unknown sources
    m.counts[source] = n;
    m.total += n;
  }
  return m;
}

std::map<std::string, std::size_t> read_source_counts(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::map<std::string, std::size_t> out;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& [k, v] : j.items()) {
      if (!v.is_number_unsigned()) {
        throw ParseError("count for '" + k + "' must be a non-negative integer", 0);
      }
      out[k] = v.get<std::size_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.filename().string() + ": " + e.what(), 0);
  }
  return out;
}

Dataset build_dataset(const fs::path& scene_root, std::span<const BenchmarkItem> annotations,
                      const TemplateLibrary& templates, const DatasetConfig& config,
                      const fs::path& out_dir) {
  Dataset ds;
  auto& m = ds.manifest;
  m.config = config.to_json();
  m.config_hash = config_hash(m.config);
  for (const auto& s : scanalign_sources()) m.counts[s] = 0;

  std::vector<std::string> scene_order;
  std::map<std::string, std::vector<const BenchmarkItem*>> by_scene;
  std::vector<std::string> fatal;
  for (const auto& item : annotations) {
    const auto& sources = scanalign_sources();
    if (std::find(sources.begin(), sources.end(), item.benchmark) == sources.end()) {
      fatal.push_back("annotation " + item.id + ": unknown source '" + item.benchmark + "'");
      continue;
    }
    if (!by_scene.count(item.scene)) scene_order.push_back(item.scene);
    by_scene[item.scene].push_back(&item);
  }
  if (!fatal.empty()) throw ValidationError(fatal);

  struct SceneImages {
    std::vector<std::string> paths;
    std::set<int> instance_ids;
  };
  std::map<std::string, SceneImages> rendered;
  for (const auto& scene_id : scene_order) {
    const fs::path dir = scene_root / scene_id;
    if (!fs::is_directory(dir)) {
      const std::string msg = "scene '" + scene_id + "' not found under " +
                              scene_root.string() + " (" +
                              std::to_string(by_scene[scene_id].size()) + " annotations)";
      if (!config.skip_unresolved) {
        fatal.push_back(msg);
      } else {
        m.warnings.push_back(msg + ", skipped");
        m.skipped += by_scene[scene_id].size();
      }
      continue;
    }
    const SceneBundle bundle = load_scene(dir);
    const auto annotated = annotate_scene(bundle, directory_loader(dir), config.annotate);
    const fs::path rel = fs::path("images") / scene_id;
    const auto files = write_annotation(annotated, out_dir / rel);
    SceneImages imgs;
    for (const auto& f : files.frames) imgs.paths.push_back((rel / f).generic_string());
    imgs.paths.push_back((rel / files.bev).generic_string());
    for (const auto& inst : bundle.instances) imgs.instance_ids.insert(inst.id);
    m.images.insert(m.images.end(), imgs.paths.begin(), imgs.paths.end());
    rendered.emplace(scene_id, std::move(imgs));
  }
  if (!fatal.empty()) throw ValidationError(fatal);

  for (const auto& item : annotations) {
    const auto it = rendered.find(item.scene);
    if (it == rendered.end()) continue;
    for (int id : item.target_ids) {
      if (!it->second.instance_ids.count(id)) {
        fatal.push_back("annotation " + item.id + ": target id " + std::to_string(id) +
                        " is not an instance of scene " + item.scene);
      }
    }
  }
  if (!fatal.empty()) throw ValidationError(fatal);

  for (const auto& item : annotations) {
    const auto it = rendered.find(item.scene);
    if (it == rendered.end()) continue;
    SplitRng rng(config.template_seed ^ mix64(fnv1a(item.id)));
    const auto phrased = templates.diversify(to_annotation(item), rng);
    TrainingRecord r;
    r.id = item.id;
    r.scene = item.scene;
    r.source = item.benchmark;
    r.images = it->second.paths;
    r.conversations.push_back({"user", user_content(r.images.size(), phrased.prompt)});
    r.conversations.push_back({"assistant", phrased.target});
    if (count_placeholders(r.conversations.front().content) != r.images.size()) {
      throw Error("record " + r.id + ": placeholder count does not match its images");
    }
    ++m.counts[r.source];
    ds.records.push_back(std::move(r));
  }
  m.total = ds.records.size();
  return ds;
}

void write_dataset(const Dataset& dataset, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  export_records(dataset.records, out_dir / "records.jsonl");
  std::ofstream out(out_dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + (out_dir / "manifest.json").string());
  out << dataset.manifest.to_json().dump(2) << '\n';
}

}  // namespace scenemark

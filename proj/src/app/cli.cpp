// SPDX-License-Identifier: Apache-2.0

#include "scenemark/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "scenemark/benchmark.hpp"
#include "scenemark/cache.hpp"
#include "scenemark/errors.hpp"
#include "scenemark/scanalign.hpp"
#include "scenemark/scene_io.hpp"
#include "scenemark/synth.hpp"

namespace fs = std::filesystem;

namespace scenemark {
namespace {

constexpr const char* kManifestName = "manifest.json";

// Error that already carries its exit code.
struct CommandFailure : Error {
  CommandFailure(const std::string& what, int code) : Error(what), code(code) {}
  int code;
};

fs::path data_dir() {
  if (const char* env = std::getenv("SCENEMARK_DATA_DIR"); env && *env) return env;
#ifdef SCENEMARK_DATA_DIR
  return SCENEMARK_DATA_DIR;
#else
  return "data";
#endif
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Hash over relative paths and contents of every regular file under `dir`,
// ignoring run bookkeeping.
std::string hash_tree(const fs::path& dir) {
  std::vector<std::pair<std::string, fs::path>> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto name = e.path().filename().string();
    if (name == kManifestName || name == DirLock::kFileName) continue;
    files.emplace_back(fs::relative(e.path(), dir).generic_string(), e.path());
  }
  std::sort(files.begin(), files.end());
  std::string listing;
  for (const auto& [rel, full] : files) listing += rel + " " + sha256_file(full) + "\n";
  return sha256_hex(listing);
}

// Describes one command run; reruns with an equal hash are skipped.
struct RunManifest {
  std::string command;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
  std::vector<std::string> outputs;

  std::string hash() const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["params"] = params;
    j["config"] = config;
    j["inputs"] = inputs;
    return sha256_hex(j.dump());
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["config_hash"] = hash();
    j["params"] = params;
    j["config"] = config;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    return j;
  }
};

bool up_to_date(const fs::path& dir, const RunManifest& manifest) {
  std::ifstream in(dir / kManifestName);
  if (!in) return false;
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.value("config_hash", "") != manifest.hash()) return false;
    for (const auto& out : j.value("outputs", std::vector<std::string>{})) {
      if (!fs::exists(dir / out)) return false;
    }
    return true;
  } catch (const nlohmann::json::exception&) {
    return false;
  }
}

void write_manifest(const fs::path& dir, const RunManifest& manifest) {
  write_text(dir / kManifestName, manifest.to_json().dump(2) + "\n");
}

std::vector<double> parse_thresholds(const nlohmann::json& j) {
  auto out = j.get<std::vector<double>>();
  for (double t : out) {
    if (!(t > 0.0 && t <= 1.0)) throw InvalidArgument("IoU thresholds must be in (0, 1]");
  }
  return out;
}

bool selected(const RunConfig& config, const std::string& benchmark) {
  return config.benchmarks.empty() ||
         std::find(config.benchmarks.begin(), config.benchmarks.end(), benchmark) !=
             config.benchmarks.end();
}

// Lazily loaded scene bundles.
class SceneCache {
 public:
  explicit SceneCache(fs::path root) : root_(std::move(root)) {}

  const SceneBundle& get(const std::string& id) {
    auto it = scenes_.find(id);
    if (it != scenes_.end()) return it->second;
    if (root_.empty()) throw InvalidArgument("a scene root is required to resolve '" + id + "'");
    const fs::path dir = root_ / id;
    if (!fs::is_directory(dir)) {
      throw InvalidArgument("scene '" + id + "' not found under " + root_.string());
    }
    return scenes_.emplace(id, load_scene(dir)).first->second;
  }

  std::string hash(const std::string& id) const { return hash_tree(root_ / id); }

 private:
  fs::path root_;
  std::map<std::string, SceneBundle> scenes_;
};

struct Globals {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string preset;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* preset_opt = nullptr;
};

RunConfig effective_config(const Globals& g) {
  RunConfig c = g.config_path.empty() ? RunConfig{} : RunConfig::load(g.config_path);
  if (g.seed_opt && g.seed_opt->count() > 0) c.seed = g.seed;
  if (g.preset_opt && g.preset_opt->count() > 0) {
    c.annotate.preset = parse_preset(g.preset);
    c.annotate.frames.reset();
    c.annotate.grid.reset();
  }
  return c;
}

// ---- synth ---------------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::string scene_id = "synth";
  int objects = 3;
  int frames = 24;
  int points = 6000;
};

int cmd_synth(const SynthArgs& a, const RunConfig& config, std::ostream& out) {
  const fs::path root = a.out.empty() ? fs::path(config.scene_root) : fs::path(a.out);
  if (root.empty()) throw InvalidArgument("synth: --out or scene_root is required");
  const fs::path dir = root / a.scene_id;
  fs::create_directories(dir);
  DirLock lock(dir);

  RunManifest m;
  m.command = "synth";
  m.params["scene_id"] = a.scene_id;
  m.params["objects"] = a.objects;
  m.params["frames"] = a.frames;
  m.params["points_per_object"] = a.points;
  m.params["seed"] = config.seed;
  m.outputs = {"instances.json", "benchmark.jsonl"};
  if (up_to_date(dir, m)) {
    out << "synth: " << dir.string() << " is up to date\n";
    return kExitOk;
  }

  SynthSpec spec;
  spec.scene_id = a.scene_id;
  spec.object_count = a.objects;
  spec.frame_count = a.frames;
  spec.points_per_object = a.points;
  const auto scene = synth_scene(spec, config.seed);
  write_scene(scene.bundle, dir, scene.frame_images);
  const auto items = synth_benchmark(scene);
  write_benchmark(dir / "benchmark.jsonl", items);
  write_manifest(dir, m);
  out << "synth: wrote scene " << a.scene_id << " (" << scene.objects.size() << " objects, "
      << scene.bundle.frames.size() << " frames, " << scene.bundle.cloud.size()
      << " points) and " << items.size() << " questions to " << dir.string() << "\n";
  return kExitOk;
}

// ---- annotate ------------------------------------------------------------

struct AnnotateArgs {
  std::string scene;
  std::string out;
  int frames = 0;
  CLI::Option* frames_opt = nullptr;
  double dropout = 0.0;
  CLI::Option* dropout_opt = nullptr;
  bool adaptive = false;
};

void apply_annotate_flags(const AnnotateArgs& a, RunConfig& config) {
  if (a.frames_opt && a.frames_opt->count() > 0) {
    config.annotate.frames = a.frames;
    config.annotate.grid.reset();
  }
  if (a.dropout_opt && a.dropout_opt->count() > 0) {
    config.annotate.style.dropout_fraction = a.dropout;
    config.annotate.style.dropout_seed = config.seed;
  }
  if (a.adaptive) config.annotate.style.adaptive = true;
}

AnnotationFiles annotate_dir(const fs::path& scene_dir, const fs::path& out_dir,
                             const AnnotateConfig& config, std::ostream& out) {
  const SceneBundle bundle = load_scene(scene_dir);
  const auto annotated = annotate_scene(bundle, directory_loader(scene_dir), config);
  const auto files = write_annotation(annotated, out_dir);
  std::size_t drawn = 0;
  for (const auto& f : annotated.frames) drawn += f.drawn_ids.size();
  out << "annotate: " << bundle.scene_id << ": " << annotated.frames.size()
      << " frames, " << drawn << " frame markers, " << annotated.bev_drawn_ids.size()
      << " BEV markers -> " << out_dir.string() << "\n";
  return files;
}

int cmd_annotate(const AnnotateArgs& a, RunConfig config, std::ostream& out) {
  apply_annotate_flags(a, config);
  if (a.scene.empty()) throw InvalidArgument("annotate: --scene is required");
  const fs::path scene_dir = a.scene;
  const fs::path out_dir =
      a.out.empty() ? fs::path(config.output_root) / scene_dir.filename() : fs::path(a.out);
  if (out_dir.empty()) throw InvalidArgument("annotate: --out or output_root is required");
  if (!fs::is_directory(scene_dir)) {
    throw InvalidArgument("annotate: scene directory " + scene_dir.string() + " not found");
  }
  fs::create_directories(out_dir);
  DirLock lock(out_dir);

  RunManifest m;
  m.command = "annotate";
  m.config["annotate"] = config.annotate.to_json();
  m.inputs["scene"] = hash_tree(scene_dir);
  const auto layout = annotation_layout(static_cast<std::size_t>(config.annotate.frame_count()));
  for (const auto& f : layout.frames) m.outputs.push_back(f.generic_string());
  for (const auto& f : {layout.bev, layout.stitched, layout.markers, layout.bev_meta}) {
    m.outputs.push_back(f.generic_string());
  }
  if (up_to_date(out_dir, m)) {
    out << "annotate: " << out_dir.string() << " is up to date\n";
    return kExitOk;
  }
  annotate_dir(scene_dir, out_dir, config.annotate, out);
  write_manifest(out_dir, m);
  return kExitOk;
}

// ---- stitch --------------------------------------------------------------

struct StitchArgs {
  std::vector<std::string> inputs;
  std::string out;
  int rows = 0;
  int cols = 0;
};

int cmd_stitch(const StitchArgs& a, const RunConfig& config, std::ostream& out) {
  std::vector<RgbImage> tiles;
  for (const auto& p : a.inputs) tiles.push_back(resize_preset(read_png(p), config.annotate.preset));
  auto grid = default_grid(static_cast<int>(tiles.size()));
  if (a.rows > 0 && a.cols > 0) grid = {a.rows, a.cols};
  const auto st = stitch(tiles, grid.first, grid.second);
  write_png(a.out, st.pixels);
  out << "stitch: " << tiles.size() << " images as " << st.rows << "x" << st.cols << " -> "
      << a.out << "\n";
  return kExitOk;
}

// ---- query ---------------------------------------------------------------

struct QueryArgs {
  std::string bench;
  std::string annotations;
  std::string scene_root;
  std::string out;
  std::string mock;
  bool no_cache = false;
  std::vector<std::string> benchmarks;
  int max_in_flight = 0;
  int attempts = 0;
  int backoff_ms = -1;
};

std::unique_ptr<MockServer> start_mock(const std::string& mode,
                                       const std::vector<BenchmarkItem>& items) {
  if (mode.empty()) return nullptr;
  if (mode == "oracle") {
    auto answers = std::make_shared<std::map<std::string, std::string>>();
    for (const auto& item : items) answers->emplace(item.question, item.oracle_answer());
    return std::make_unique<MockServer>([answers](const nlohmann::json& body, int) {
      const auto q = MockServer::question_of(body);
      const auto it = answers->find(q);
      if (it == answers->end()) return MockReply{200, "I do not know.", 0};
      return MockReply{200, "Looking at the frames and the BEV image.\nAnswer: " + it->second,
                       0};
    });
  }
  if (mode == "fail") return std::make_unique<MockServer>(MockServer::always(503));
  if (mode == "echo") {
    return std::make_unique<MockServer>([](const nlohmann::json& body, int) {
      return MockReply{200, "Answer: " + MockServer::question_of(body), 0};
    });
  }
  throw InvalidArgument("query: unknown mock mode '" + mode + "' (oracle, fail, echo)");
}

int cmd_query(const QueryArgs& a, RunConfig config, std::ostream& out, std::ostream& err) {
  if (!a.benchmarks.empty()) config.benchmarks = a.benchmarks;
  if (a.no_cache) config.cache = false;
  if (a.max_in_flight > 0) config.endpoint.max_in_flight = a.max_in_flight;
  if (a.attempts > 0) config.endpoint.retry.max_attempts = a.attempts;
  if (a.backoff_ms >= 0) config.endpoint.retry.backoff_base_ms = a.backoff_ms;
  config.endpoint.validate();
  if (a.bench.empty()) throw InvalidArgument("query: --bench is required");
  const fs::path ann_root = a.annotations.empty() ? fs::path(config.output_root)
                                                  : fs::path(a.annotations);
  if (ann_root.empty()) throw InvalidArgument("query: --annotations or output_root is required");
  const fs::path out_dir = a.out.empty() ? ann_root / "query" : fs::path(a.out);
  const fs::path scene_root = a.scene_root.empty() ? fs::path(config.scene_root)
                                                   : fs::path(a.scene_root);

  std::vector<BenchmarkItem> items;
  for (auto& item : read_benchmark(a.bench)) {
    if (selected(config, item.benchmark)) items.push_back(std::move(item));
  }

  fs::create_directories(out_dir);
  DirLock lock(out_dir);

  // Annotate scenes that have no images yet.
  std::set<std::string> scenes;
  for (const auto& item : items) scenes.insert(item.scene);
  for (const auto& s : scenes) {
    if (fs::exists(ann_root / s / "stitched.png")) continue;
    if (scene_root.empty()) {
      throw InvalidArgument("query: no annotations for scene '" + s + "' under " +
                            ann_root.string() + " and no scene root to create them");
    }
    annotate_dir(scene_root / s, ann_root / s, config.annotate, out);
  }

  RunManifest m;
  m.command = "query";
  m.params["mock"] = a.mock;
  m.params["benchmarks"] = config.benchmarks;
  m.config["endpoint"] = endpoint_to_json(config.endpoint);
  m.config["cache"] = config.cache;
  m.config["qa_include_bev"] = config.qa_include_bev;
  m.config["grid"] = {config.annotate.grid_shape().first, config.annotate.grid_shape().second};
  m.inputs["bench"] = sha256_file(a.bench);
  for (const auto& s : scenes) {
    m.inputs["stitched:" + s] = sha256_file(ann_root / s / "stitched.png");
    m.inputs["bev:" + s] = sha256_file(ann_root / s / "bev.png");
  }
  m.outputs = {"responses.jsonl", "requests.jsonl"};
  if (config.cache && up_to_date(out_dir, m)) {
    out << "query: " << out_dir.string() << " is up to date\n";
    return kExitOk;
  }

  const auto mock = start_mock(a.mock, items);
  EndpointConfig endpoint = config.endpoint;
  if (mock) {
    endpoint.base_url = mock->base_url();
    endpoint.api_key_env.clear();
  }

  std::map<std::string, std::pair<ImageAttachment, ImageAttachment>> images;
  for (const auto& s : scenes) {
    images[s] = {ImageAttachment{"image/png", read_bytes(ann_root / s / "stitched.png")},
                 ImageAttachment{"image/png", read_bytes(ann_root / s / "bev.png")}};
  }

  std::vector<VlmRequest> requests;
  std::vector<std::string> keys;
  std::vector<std::string> bodies;
  for (const auto& item : items) {
    const auto bundle = build_prompt(item.task(), item.benchmark, config.annotate.grid_shape());
    const auto& [stitched, bev] = images.at(item.scene);
    const bool with_bev = item.task() != TaskKind::qa || config.qa_include_bev;
    requests.push_back(assemble_query(bundle, stitched,
                                      with_bev ? std::optional<ImageAttachment>(bev)
                                               : std::nullopt,
                                      item.question));
    bodies.push_back(request_body(requests.back(), endpoint.model).dump());
    keys.push_back(ResponseCache::key(bodies.back(), endpoint.model));
  }

  std::optional<ResponseCache> cache;
  if (config.cache) cache.emplace(out_dir / "cache");
  std::vector<BatchSlot> slots(items.size());
  std::vector<bool> cached(items.size(), false);
  std::vector<VlmRequest> misses;
  std::vector<std::size_t> miss_index;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (cache) {
      if (auto hit = cache->get(keys[i])) {
        slots[i].response = std::move(hit);
        slots[i].status = 200;
        slots[i].attempts = slots[i].response->attempts;
        cached[i] = true;
        continue;
      }
    }
    misses.push_back(requests[i]);
    miss_index.push_back(i);
  }
  if (!misses.empty()) {
    auto sent = send_batch(misses, endpoint);
    for (std::size_t k = 0; k < sent.size(); ++k) {
      const std::size_t i = miss_index[k];
      slots[i] = std::move(sent[k]);
      if (cache && slots[i].ok()) cache->put(keys[i], *slots[i].response);
    }
  }

  JsonlWriter responses(out_dir / "responses.jsonl");
  JsonlWriter log(out_dir / "requests.jsonl");
  std::size_t failures = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    nlohmann::ordered_json r;
    r["id"] = item.id;
    r["scene"] = item.scene;
    r["benchmark"] = item.benchmark;
    r["task"] = std::string(task_name(item.task()));
    r["question"] = item.question;
    if (slots[i].ok()) {
      const auto refined = refine_answer(slots[i].response->text, item.task());
      r["response"] = slots[i].response->text;
      r["answer"] = refined.text;
      r["object_ids"] = refined.object_ids;
      r["error"] = nullptr;
    } else {
      ++failures;
      r["response"] = nullptr;
      r["answer"] = nullptr;
      r["object_ids"] = nlohmann::ordered_json::array();
      r["error"] = slots[i].error;
    }
    r["status"] = slots[i].status;
    r["attempts"] = slots[i].attempts;
    responses.write(r);

    nlohmann::ordered_json l;
    l["id"] = item.id;
    l["cache_key"] = keys[i];
    l["cached"] = static_cast<bool>(cached[i]);
    l["request"] = nlohmann::ordered_json::parse(bodies[i]);
    l["response"] = slots[i].ok() ? response_to_json(*slots[i].response)
                                  : nlohmann::ordered_json();
    l["error"] = slots[i].ok() ? nlohmann::ordered_json() : nlohmann::ordered_json(slots[i].error);
    log.write(l);
  }

  const std::size_t hits = static_cast<std::size_t>(std::count(cached.begin(), cached.end(), true));
  out << "query: " << items.size() << " questions, " << hits << " from cache, "
      << misses.size() << " sent, " << failures << " failed -> "
      << (out_dir / "responses.jsonl").string() << "\n";
  if (failures > 0) {
    err << "query: " << failures << " of " << items.size()
        << " questions failed; see the error fields in responses.jsonl\n";
    return kExitEndpoint;
  }
  write_manifest(out_dir, m);
  return kExitOk;
}

// ---- evaluate ------------------------------------------------------------

struct EvaluateArgs {
  std::string responses;
  std::string bench;
  std::string scene_root;
  std::string out;
  std::vector<double> thresholds;
  std::vector<std::string> benchmarks;
};

std::optional<Aabb> instance_box(const SceneBundle& scene, int id) {
  const Instance* inst = scene.find_instance(id);
  if (inst == nullptr) return std::nullopt;
  return inst->aabb;
}

int cmd_evaluate(const EvaluateArgs& a, RunConfig config, std::ostream& out) {
  if (!a.benchmarks.empty()) config.benchmarks = a.benchmarks;
  if (!a.thresholds.empty()) config.thresholds = parse_thresholds(a.thresholds);
  if (a.responses.empty() || a.bench.empty()) {
    throw InvalidArgument("evaluate: --responses and --bench are required");
  }
  const fs::path out_dir =
      a.out.empty() ? fs::path(a.responses).parent_path() / "eval" : fs::path(a.out);
  const fs::path scene_root =
      a.scene_root.empty() ? fs::path(config.scene_root) : fs::path(a.scene_root);

  std::map<std::string, BenchmarkItem> refs;
  std::vector<std::string> order;
  for (auto& item : read_benchmark(a.bench)) {
    if (!selected(config, item.benchmark)) continue;
    order.push_back(item.id);
    refs.emplace(item.id, std::move(item));
  }
  std::map<std::string, nlohmann::json> preds;
  std::vector<std::string> issues;
  for (auto& r : read_jsonl(a.responses)) {
    const std::string id = r.value("id", "");
    if (!selected(config, r.value("benchmark", refs.count(id) ? refs.at(id).benchmark : ""))) {
      continue;
    }
    if (!refs.count(id)) {
      issues.push_back("response '" + id + "' has no reference item");
      continue;
    }
    if (!preds.emplace(id, std::move(r)).second) {
      issues.push_back("response '" + id + "' appears more than once");
    }
  }
  for (const auto& id : order) {
    if (!preds.count(id)) issues.push_back("reference item '" + id + "' has no response");
  }
  if (!issues.empty()) throw ValidationError(issues);
  if (order.empty()) throw InvalidArgument("evaluate: no items selected");

  fs::create_directories(out_dir);
  DirLock lock(out_dir);

  SceneCache scenes(scene_root);
  std::set<std::string> scene_ids;
  for (const auto& id : order) {
    if (refs.at(id).task() != TaskKind::qa) scene_ids.insert(refs.at(id).scene);
  }

  RunManifest m;
  m.command = "evaluate";
  m.params["benchmarks"] = config.benchmarks;
  m.config["thresholds"] = config.thresholds;
  m.inputs["responses"] = sha256_file(a.responses);
  m.inputs["bench"] = sha256_file(a.bench);
  for (const auto& s : scene_ids) m.inputs["scene:" + s] = scenes.hash(s);
  m.outputs = {"report.json", "report.txt", "per_record.jsonl"};
  if (up_to_date(out_dir, m)) {
    out << read_bytes(out_dir / "report.txt");
    return kExitOk;
  }

  std::map<std::string, std::vector<EvalRecord>> groups;
  std::vector<std::string> group_order;
  for (const auto& id : order) {
    const auto& item = refs.at(id);
    const auto& pred = preds.at(id);
    EvalRecord rec;
    rec.id = id;
    rec.task = item.task();
    const auto raw = pred.contains("response") && pred["response"].is_string()
                         ? pred["response"].get<std::string>()
                         : std::string();
    const auto refined = refine_answer(raw, rec.task);
    rec.prediction = refined.text;
    rec.references = item.answers;
    if (rec.task != TaskKind::qa) {
      const SceneBundle& scene = scenes.get(item.scene);
      rec.gt_boxes = ground_truth_boxes(item, scene);
      if (rec.task == TaskKind::dense_caption) {
        // The caption names its object; that instance's box is the prediction.
        rec.predicted_ids = item.target_ids;
      } else if (item.benchmark == "scanrefer") {
        if (!refined.object_ids.empty()) rec.predicted_ids = {refined.object_ids.front()};
      } else {
        rec.predicted_ids = refined.object_ids;
      }
      for (int pid : rec.predicted_ids) rec.predicted_boxes.push_back(instance_box(scene, pid));
      rec.distractor = item.distractor;
    }
    if (!groups.count(item.benchmark)) group_order.push_back(item.benchmark);
    groups[item.benchmark].push_back(std::move(rec));
  }

  nlohmann::ordered_json report_json = nlohmann::ordered_json::object();
  std::string table;
  JsonlWriter per_record(out_dir / "per_record.jsonl");
  for (const auto& bench : group_order) {
    const auto& recs = groups.at(bench);
    Evaluation ev;
    switch (benchmark_task(bench)) {
      case TaskKind::qa:
        ev = evaluate_qa(recs);
        break;
      case TaskKind::dense_caption:
        ev = evaluate_captions(recs, config.thresholds);
        break;
      case TaskKind::visual_grounding:
        ev = bench == "scanrefer" ? evaluate_grounding(recs, config.thresholds)
                                  : evaluate_multiref(recs, config.thresholds);
        break;
    }
    ev.report.title = bench;
    report_json[bench] = ev.report.to_json();
    table += ev.report.to_table() + "\n";
    for (const auto& pr : ev.per_record) {
      nlohmann::ordered_json line;
      line["id"] = pr.id;
      line["benchmark"] = bench;
      line["scores"] = pr.scores;
      per_record.write(line);
    }
  }
  write_text(out_dir / "report.json", report_json.dump(2) + "\n");
  write_text(out_dir / "report.txt", table);
  write_manifest(out_dir, m);
  out << table;
  return kExitOk;
}

// ---- gpt-score -----------------------------------------------------------

struct GptScoreArgs {
  long long wins = -1;
  long long ties = -1;
  long long losses = -1;
  CLI::Option* wins_opt = nullptr;
  std::string pairs;
  std::string mock;
  bool fixed_order = false;
  bool negative_loss = false;
  std::string out;
};

int cmd_gpt_score(const GptScoreArgs& a, RunConfig config, std::ostream& out) {
  GptWeights weights = config.gpt_weights;
  if (a.negative_loss) weights = kGptWeightsNegativeLoss;
  long long win = a.wins, tie = a.ties, lose = a.losses;
  nlohmann::ordered_json result;
  if (!a.pairs.empty()) {
    std::vector<JudgePair> pairs;
    for (const auto& j : read_jsonl(a.pairs)) {
      try {
        pairs.push_back({j.at("id").get<std::string>(), j.at("question").get<std::string>(),
                         j.at("reference").get<std::string>(),
                         j.at("answer1").get<std::string>(),
                         j.at("answer2").get<std::string>()});
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("judge pair: ") + e.what(), 0);
      }
    }
    std::unique_ptr<MockServer> mock;
    if (!a.mock.empty()) {
      if (a.mock != "a" && a.mock != "b" && a.mock != "tie") {
        throw InvalidArgument("gpt-score: mock verdict must be a, b or tie");
      }
      const std::string verdict = a.mock == "tie" ? "tie" : a.mock == "a" ? "A" : "B";
      mock = std::make_unique<MockServer>(MockServer::fixed("Answer: " + verdict));
    }
    JudgeConfig jc;
    jc.endpoint = config.endpoint;
    if (mock) {
      jc.endpoint.base_url = mock->base_url();
      jc.endpoint.api_key_env.clear();
    }
    jc.seed = config.seed;
    jc.randomize_order = config.judge_randomize_order && !a.fixed_order;
    const auto outcome = gpt_judge(pairs, jc);
    win = outcome.win;
    tie = outcome.tie;
    lose = outcome.lose;
    result["unparsed"] = outcome.unparsed;
    result["failed"] = outcome.failed;
    if (outcome.unparsed > 0) {
      out << "gpt-score: warning: " << outcome.unparsed
          << " verdicts could not be read and count as ties\n";
    }
    if (outcome.failed > 0) {
      throw CommandFailure("gpt-score: " + std::to_string(outcome.failed) +
                               " judge requests failed",
                           kExitEndpoint);
    }
  } else if (a.wins < 0 || a.ties < 0 || a.losses < 0) {
    throw CommandFailure("gpt-score: give --wins, --ties and --losses, or --pairs",
                         kExitUsage);
  }
  const long long score = gpt_score(win, tie, lose, weights);
  result["win"] = win;
  result["tie"] = tie;
  result["lose"] = lose;
  result["weights"] = {weights.win, weights.tie, weights.lose};
  result["score"] = score;
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    DirLock lock(a.out);
    write_text(fs::path(a.out) / "gpt_score.json", result.dump(2) + "\n");
    RunManifest m;
    m.command = "gpt-score";
    m.params = result;
    m.outputs = {"gpt_score.json"};
    write_manifest(a.out, m);
  }
  out << "win " << win << "  tie " << tie << "  lose " << lose << "  score " << score << "\n";
  return kExitOk;
}

// ---- build-dataset -------------------------------------------------------

struct BuildArgs {
  std::vector<std::string> benches;
  std::string scene_root;
  std::string out;
  std::string templates;
  bool dry_run = false;
  std::string counts;
  bool skip_missing = false;
  AnnotateArgs annotate;
};

int cmd_build_dataset(const BuildArgs& a, RunConfig config, std::ostream& out) {
  apply_annotate_flags(a.annotate, config);
  DatasetConfig dc;
  dc.annotate = config.annotate;
  dc.template_seed = config.seed;
  dc.skip_unresolved = a.skip_missing;
  const fs::path out_dir = a.out.empty() ? fs::path(config.output_root) / "dataset"
                                         : fs::path(a.out);
  if (out_dir.empty()) throw InvalidArgument("build-dataset: --out is required");

  if (a.dry_run) {
    const fs::path counts_path =
        a.counts.empty() ? data_dir() / "scanalign_counts.json" : fs::path(a.counts);
    const auto manifest = dry_run_manifest(read_source_counts(counts_path), dc);
    fs::create_directories(out_dir);
    DirLock lock(out_dir);
    write_text(out_dir / kManifestName, manifest.to_json().dump(2) + "\n");
    for (const auto& s : scanalign_sources()) {
      if (manifest.counts.count(s)) out << s << " " << manifest.counts.at(s) << "\n";
    }
    out << "total " << manifest.total << "\n";
    return kExitOk;
  }

  if (a.benches.empty()) throw InvalidArgument("build-dataset: --bench is required");
  const fs::path scene_root =
      a.scene_root.empty() ? fs::path(config.scene_root) : fs::path(a.scene_root);
  const fs::path tmpl_path =
      a.templates.empty() ? data_dir() / "templates.tsv" : fs::path(a.templates);
  const auto templates = TemplateLibrary::load(tmpl_path);
  std::vector<BenchmarkItem> items;
  std::set<std::string> ids;
  for (const auto& b : a.benches) {
    for (auto& item : read_benchmark(b)) {
      if (!selected(config, item.benchmark)) continue;
      if (!ids.insert(item.id).second) {
        throw InvalidArgument("build-dataset: duplicate annotation id '" + item.id + "'");
      }
      items.push_back(std::move(item));
    }
  }

  fs::create_directories(out_dir);
  DirLock lock(out_dir);
  const auto ds = build_dataset(scene_root, items, templates, dc, out_dir);
  write_dataset(ds, out_dir);
  for (const auto& w : ds.manifest.warnings) out << "build-dataset: warning: " << w << "\n";
  for (const auto& s : scanalign_sources()) {
    out << s << " " << (ds.manifest.counts.count(s) ? ds.manifest.counts.at(s) : 0) << "\n";
  }
  out << "total " << ds.manifest.total << "\n";
  return kExitOk;
}

int exit_code_for(const std::exception& e) {
  if (const auto* f = dynamic_cast<const CommandFailure*>(&e)) return f->code;
  if (dynamic_cast<const EndpointError*>(&e)) return kExitEndpoint;
  return kExitData;
}

}  // namespace

nlohmann::ordered_json endpoint_to_json(const EndpointConfig& c) {
  nlohmann::ordered_json j;
  j["base_url"] = c.base_url;
  j["model"] = c.model;
  j["api_key_env"] = c.api_key_env;
  j["timeout_s"] = c.timeout_s;
  j["max_in_flight"] = c.max_in_flight;
  j["retry"]["max_attempts"] = c.retry.max_attempts;
  j["retry"]["backoff_base_ms"] = c.retry.backoff_base_ms;
  j["max_payload_bytes"] = c.max_payload_bytes;
  return j;
}

EndpointConfig endpoint_from_json(const nlohmann::json& j) {
  EndpointConfig c;
  c.base_url = j.value("base_url", c.base_url);
  c.model = j.value("model", c.model);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.timeout_s = j.value("timeout_s", c.timeout_s);
  c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  if (j.contains("retry")) {
    c.retry.max_attempts = j["retry"].value("max_attempts", c.retry.max_attempts);
    c.retry.backoff_base_ms = j["retry"].value("backoff_base_ms", c.retry.backoff_base_ms);
  }
  c.max_payload_bytes = j.value("max_payload_bytes", c.max_payload_bytes);
  c.validate();
  return c;
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["scene_root"] = scene_root;
  j["output_root"] = output_root;
  j["seed"] = seed;
  j["annotate"] = annotate.to_json();
  j["endpoint"] = endpoint_to_json(endpoint);
  j["benchmarks"] = benchmarks;
  j["cache"] = cache;
  j["qa_include_bev"] = qa_include_bev;
  j["thresholds"] = thresholds;
  j["gpt_weights"] = {gpt_weights.win, gpt_weights.tie, gpt_weights.lose};
  j["judge_randomize_order"] = judge_randomize_order;
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  if (!j.is_object()) throw ParseError("config: expected a JSON object", 0);
  static const std::set<std::string> known = {
      "scene_root", "output_root", "seed",       "annotate",   "endpoint",
      "benchmarks", "cache",       "qa_include_bev", "thresholds", "gpt_weights",
      "judge_randomize_order"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ParseError("config: unknown key '" + k + "'", 0);
  }
  try {
    c.scene_root = j.value("scene_root", c.scene_root);
    c.output_root = j.value("output_root", c.output_root);
    c.seed = j.value("seed", c.seed);
    if (j.contains("annotate")) c.annotate = AnnotateConfig::from_json(j["annotate"]);
    if (j.contains("endpoint")) c.endpoint = endpoint_from_json(j["endpoint"]);
    if (j.contains("benchmarks")) c.benchmarks = j["benchmarks"].get<std::vector<std::string>>();
    for (const auto& b : c.benchmarks) benchmark_task(b);
    c.cache = j.value("cache", c.cache);
    c.qa_include_bev = j.value("qa_include_bev", c.qa_include_bev);
    if (j.contains("thresholds")) c.thresholds = parse_thresholds(j["thresholds"]);
    if (j.contains("gpt_weights")) {
      const auto w = j["gpt_weights"].get<std::vector<long long>>();
      if (w.size() != 3) throw InvalidArgument("gpt_weights needs [win, tie, lose]");
      c.gpt_weights = {w[0], w[1], w[2]};
    }
    c.judge_randomize_order = j.value("judge_randomize_order", c.judge_randomize_order);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: ") + e.what(), 0);
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("config " + path.string() + ": " + e.what(), e.byte);
  }
}

DirLock::DirLock(const fs::path& dir) : path_(dir / kFileName) {
  fs::create_directories(dir);
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (f == nullptr) {
    path_.clear();
    throw Error("output directory " + dir.string() +
                " is in use by another run (remove " + kFileName + " if it is stale)");
  }
  std::fclose(f);
}

DirLock::~DirLock() {
  if (!path_.empty()) {
    std::error_code ec;
    fs::remove(path_, ec);
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Annotate indoor scenes with object markers, query vision-language "
               "models about them and score the answers."};
  app.name("scenemark");
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON run configuration")
      ->check(CLI::ExistingFile);
  g.seed_opt = app.add_option("--seed", g.seed, "Seed for generation, templates and judging");
  g.preset_opt = app.add_option("--preset", g.preset, "Rendering preset")
                     ->check(CLI::IsMember({"base", "hd", "hdm"}));

  SynthArgs synth;
  auto* s_synth = app.add_subcommand("synth", "Generate a synthetic scene and its questions");
  s_synth->add_option("--out", synth.out, "Scene root to write into");
  s_synth->add_option("--scene-id", synth.scene_id, "Scene directory name");
  s_synth->add_option("--objects", synth.objects, "Number of objects")->check(CLI::NonNegativeNumber);
  s_synth->add_option("--frames", synth.frames, "Trajectory length")->check(CLI::PositiveNumber);
  s_synth->add_option("--points", synth.points, "Points per object")->check(CLI::PositiveNumber);

  AnnotateArgs ann;
  auto* s_ann = app.add_subcommand("annotate", "Render marked frames, BEV and stitch for a scene");
  s_ann->add_option("--scene", ann.scene, "Scene directory")->required();
  s_ann->add_option("--out", ann.out, "Output directory");
  ann.frames_opt = s_ann->add_option("--frames,-n", ann.frames, "Frames to sample")
                       ->check(CLI::PositiveNumber);
  ann.dropout_opt = s_ann->add_option("--dropout", ann.dropout, "Fraction of markers to omit")
                        ->check(CLI::Range(0.0, 0.999999));
  s_ann->add_flag("--adaptive-radius", ann.adaptive, "Scale markers with object size");

  StitchArgs st;
  auto* s_st = app.add_subcommand("stitch", "Resize images to the preset and tile them");
  s_st->add_option("inputs", st.inputs, "Input PNG files")->required()->check(CLI::ExistingFile);
  s_st->add_option("--out", st.out, "Output PNG")->required();
  s_st->add_option("--rows", st.rows, "Grid rows");
  s_st->add_option("--cols", st.cols, "Grid columns");

  QueryArgs q;
  auto* s_q = app.add_subcommand("query", "Ask the model every benchmark question");
  s_q->add_option("--bench", q.bench, "Benchmark JSONL")->required()->check(CLI::ExistingFile);
  s_q->add_option("--annotations", q.annotations, "Root of per-scene annotate outputs");
  s_q->add_option("--scene-root", q.scene_root, "Scene root for scenes not yet annotated");
  s_q->add_option("--out", q.out, "Output directory");
  s_q->add_option("--mock", q.mock, "Serve answers from a local mock endpoint")
      ->check(CLI::IsMember({"oracle", "fail", "echo"}));
  s_q->add_flag("--no-cache", q.no_cache, "Ignore and do not fill the response cache");
  s_q->add_option("--benchmark", q.benchmarks, "Restrict to these benchmarks");
  s_q->add_option("--max-in-flight", q.max_in_flight, "Concurrent requests")
      ->check(CLI::PositiveNumber);
  s_q->add_option("--attempts", q.attempts, "Attempts per request")->check(CLI::PositiveNumber);
  s_q->add_option("--backoff-ms", q.backoff_ms, "Base retry backoff in milliseconds")
      ->check(CLI::NonNegativeNumber);

  EvaluateArgs ev;
  auto* s_ev = app.add_subcommand("evaluate", "Score responses against the references");
  s_ev->add_option("--responses", ev.responses, "responses.jsonl from query")
      ->required()->check(CLI::ExistingFile);
  s_ev->add_option("--bench", ev.bench, "Benchmark JSONL")->required()->check(CLI::ExistingFile);
  s_ev->add_option("--scene-root", ev.scene_root, "Scene root for boxes");
  s_ev->add_option("--out", ev.out, "Output directory");
  s_ev->add_option("--thresholds", ev.thresholds, "IoU thresholds");
  s_ev->add_option("--benchmark", ev.benchmarks, "Restrict to these benchmarks");

  GptScoreArgs gs;
  auto* s_gs = app.add_subcommand("gpt-score", "Pairwise judge score from counts or a judge run");
  gs.wins_opt = s_gs->add_option("--wins", gs.wins, "Wins of the scored model");
  s_gs->add_option("--ties", gs.ties, "Ties");
  s_gs->add_option("--losses", gs.losses, "Losses");
  s_gs->add_option("--pairs", gs.pairs, "Answer pairs JSONL to judge")->check(CLI::ExistingFile);
  s_gs->add_option("--mock", gs.mock, "Local judge that always answers a, b or tie");
  s_gs->add_flag("--fixed-order", gs.fixed_order, "Always show the scored answer first");
  s_gs->add_flag("--negative-loss", gs.negative_loss, "Score a loss as -1 instead of 0");
  s_gs->add_option("--out", gs.out, "Output directory");

  BuildArgs bd;
  auto* s_bd = app.add_subcommand("build-dataset", "Build a fine-tuning corpus");
  s_bd->add_option("--bench", bd.benches, "Annotation JSONL files")->check(CLI::ExistingFile);
  s_bd->add_option("--scene-root", bd.scene_root, "Scene root");
  s_bd->add_option("--out", bd.out, "Output directory");
  s_bd->add_option("--templates", bd.templates, "Template file")->check(CLI::ExistingFile);
  s_bd->add_flag("--dry-run", bd.dry_run, "Only total the per-source counts");
  s_bd->add_option("--counts", bd.counts, "Per-source counts for a dry run")
      ->check(CLI::ExistingFile);
  s_bd->add_flag("--skip-missing", bd.skip_missing, "Skip annotations of unknown scenes");
  bd.annotate.frames_opt = s_bd->add_option("--frames,-n", bd.annotate.frames, "Frames per scene")
                               ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig config = effective_config(g);
    if (s_synth->parsed()) return cmd_synth(synth, config, out);
    if (s_ann->parsed()) return cmd_annotate(ann, config, out);
    if (s_st->parsed()) return cmd_stitch(st, config, out);
    if (s_q->parsed()) return cmd_query(q, config, out, err);
    if (s_ev->parsed()) return cmd_evaluate(ev, config, out);
    if (s_gs->parsed()) return cmd_gpt_score(gs, config, out);
    if (s_bd->parsed()) return cmd_build_dataset(bd, config, out);
  } catch (const std::exception& e) {
    err << "scenemark: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitUsage;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("scenemark");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace scenemark

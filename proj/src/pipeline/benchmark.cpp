// SPDX-License-Identifier: Apache-2.0

#include "scenemark/benchmark.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <set>

#include "scenemark/errors.hpp"

namespace scenemark {
namespace {

constexpr std::array<std::string_view, 4> kAbsentPool = {"white", "pink", "gray",
                                                         "silver"};
constexpr std::array<std::string_view, 4> kAbsentLabels = {"lamp", "piano", "sink",
                                                           "toilet"};

nlohmann::ordered_json box_to_json(const Aabb& box) {
  nlohmann::ordered_json out;
  out["min"] = {box.min().x(), box.min().y(), box.min().z()};
  out["max"] = {box.max().x(), box.max().y(), box.max().z()};
  return out;
}

Aabb box_from_json(const nlohmann::json& j) {
  const auto lo = j.at("min").get<std::vector<double>>();
  const auto hi = j.at("max").get<std::vector<double>>();
  if (lo.size() != 3 || hi.size() != 3) throw std::invalid_argument("box needs 3 coords");
  return Aabb(Vec3(lo[0], lo[1], lo[2]), Vec3(hi[0], hi[1], hi[2]));
}

std::string joined_ids(const std::vector<int>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(ids[i]);
  }
  return out;
}

}  // namespace

std::string BenchmarkItem::oracle_answer() const {
  if (task() == TaskKind::visual_grounding) {
    return target_ids.empty() ? "none" : joined_ids(target_ids);
  }
  return answers.empty() ? std::string() : answers.front();
}

nlohmann::ordered_json item_to_json(const BenchmarkItem& item) {
  nlohmann::ordered_json j;
  j["id"] = item.id;
  j["scene"] = item.scene;
  j["benchmark"] = item.benchmark;
  j["task"] = std::string(task_name(item.task()));
  j["question"] = item.question;
  j["answers"] = item.answers;
  j["target_ids"] = item.target_ids;
  if (!item.gt_boxes.empty()) {
    auto& boxes = j["gt_boxes"] = nlohmann::ordered_json::array();
    for (const auto& b : item.gt_boxes) boxes.push_back(box_to_json(b));
  }
  j["distractor"] = item.distractor;
  return j;
}

BenchmarkItem item_from_json(const nlohmann::json& j) {
  const auto field = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'", 0);
    return j.at(key);
  };
  BenchmarkItem item;
  try {
    item.id = field("id").get<std::string>();
    item.scene = field("scene").get<std::string>();
    item.benchmark = field("benchmark").get<std::string>();
    item.question = field("question").get<std::string>();
    if (j.contains("answers")) item.answers = j.at("answers").get<std::vector<std::string>>();
    if (j.contains("target_ids")) item.target_ids = j.at("target_ids").get<std::vector<int>>();
    if (j.contains("gt_boxes")) {
      for (const auto& b : j.at("gt_boxes")) item.gt_boxes.push_back(box_from_json(b));
    }
    item.distractor = j.value("distractor", false);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad field type: ") + e.what(), 0);
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), 0);
  }
  try {
    const TaskKind task = item.task();
    if (j.contains("task") && j.at("task") != std::string(task_name(task))) {
      throw ParseError("task does not match benchmark '" + item.benchmark + "'", 0);
    }
    if (task != TaskKind::visual_grounding && item.answers.empty()) {
      throw ParseError("item needs at least one answer", 0);
    }
    if (task == TaskKind::dense_caption && item.target_ids.size() != 1) {
      throw ParseError("caption item needs exactly one target id", 0);
    }
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what(), 0);
  }
  return item;
}

std::vector<BenchmarkItem> read_benchmark(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open benchmark file " + path.string());
  std::vector<BenchmarkItem> items;
  std::vector<std::string> issues;
  std::set<std::string> seen;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(lineno);
    try {
      auto item = item_from_json(nlohmann::json::parse(line));
      if (!seen.insert(item.id).second) {
        issues.push_back(where + ": duplicate id '" + item.id + "'");
        continue;
      }
      items.push_back(std::move(item));
    } catch (const nlohmann::json::exception& e) {
      issues.push_back(where + ": invalid JSON: " + e.what());
    } catch (const ParseError& e) {
      issues.push_back(where + ": " + e.what());
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return items;
}

void write_benchmark(const std::filesystem::path& path,
                     std::span<const BenchmarkItem> items) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& item : items) out << item_to_json(item).dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<Aabb> ground_truth_boxes(const BenchmarkItem& item, const SceneBundle& scene) {
  if (!item.gt_boxes.empty()) return item.gt_boxes;
  std::vector<Aabb> out;
  for (int id : item.target_ids) {
    const Instance* inst = scene.find_instance(id);
    if (inst == nullptr) {
      throw InvalidArgument("item " + item.id + ": target id " + std::to_string(id) +
                            " is not an instance of scene " + scene.scene_id);
    }
    out.push_back(inst->aabb);
  }
  return out;
}

std::vector<BenchmarkItem> synth_benchmark(const SynthScene& scene) {
  const std::string& sid = scene.bundle.scene_id;
  const auto& objs = scene.objects;
  std::vector<BenchmarkItem> items;
  std::map<std::string, int> counters;
  auto add = [&](std::string bench, std::string question, std::vector<std::string> answers,
                 std::vector<int> targets, bool distractor) {
    BenchmarkItem item;
    item.id = sid + "-" + bench + "-" + std::to_string(counters[bench]++);
    item.scene = sid;
    item.benchmark = std::move(bench);
    item.question = std::move(question);
    item.answers = std::move(answers);
    item.target_ids = std::move(targets);
    item.distractor = distractor;
    items.push_back(std::move(item));
  };

  std::map<std::string, int> label_count;
  std::set<std::string> colors_used;
  for (const auto& o : objs) {
    ++label_count[o.label];
    colors_used.insert(o.color_name);
  }

  for (const auto& o : objs) {
    if (label_count[o.label] == 1) {
      add("scanqa", "What color is the " + o.label + "?", {o.color_name}, {}, false);
    }
    add("scanqa", "What kind of object is the " + o.color_name + " one?", {o.label}, {},
        false);
  }
  add("scanqa", "How many objects are in the room?", {std::to_string(objs.size())}, {},
      false);

  for (const auto& o : objs) {
    add("scanrefer", "the " + o.color_name + " " + o.label + ".", {std::to_string(o.id)},
        {o.id}, label_count[o.label] > 1);
    add("scan2cap", "Describe the object represented by C_" + std::to_string(o.id) + ".",
        {"a " + o.color_name + " " + o.label + ".",
         "this is a " + o.color_name + " " + o.label + " in the room."},
        {o.id}, false);
    add("multi3dref", "all " + o.color_name + " objects.", {}, {o.id},
        label_count[o.label] > 1);
  }

  std::string absent_color;
  for (auto c : kAbsentPool) {
    if (!colors_used.count(std::string(c))) {
      absent_color = std::string(c);
      break;
    }
  }
  std::string absent_label;
  for (auto l : kAbsentLabels) {
    if (!label_count.count(std::string(l))) {
      absent_label = std::string(l);
      break;
    }
  }
  add("multi3dref", "all " + absent_color + " " + absent_label + "s.", {}, {}, false);
  if (!objs.empty()) {
    add("multi3dref", "all " + absent_color + " " + objs.front().label + "s.", {}, {},
        true);
  }
  if (objs.size() >= 3) {
    const auto& excluded = objs.front();
    std::vector<int> rest;
    for (const auto& o : objs) {
      if (o.id != excluded.id) rest.push_back(o.id);
    }
    add("multi3dref", "every object that is not " + excluded.color_name + ".", {}, rest,
        false);
  }
  return items;
}

}  // namespace scenemark

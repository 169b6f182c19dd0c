// SPDX-License-Identifier: Apache-2.0

#include "scenemark/scene_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <nlohmann/json.hpp>
#include <sstream>

#include "scenemark/errors.hpp"
#include "scenemark/ply.hpp"

namespace fs = std::filesystem;

namespace scenemark {
namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> read_numbers(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    double v = 0.0;
    const char* end = token.data() + token.size();
    const auto res = std::from_chars(token.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) {
      throw InvalidArgument(path.filename().string() + ": bad number '" + token +
                            "'");
    }
    values.push_back(v);
  }
  return values;
}

// Frame index from "<index>.<ext>" file names; nullopt for anything else.
std::optional<int> index_of(const fs::path& file, std::string_view ext) {
  if (file.extension() != ext) return std::nullopt;
  const std::string stem = file.stem().string();
  int idx = 0;
  const char* end = stem.data() + stem.size();
  const auto res = std::from_chars(stem.data(), end, idx);
  if (res.ec != std::errc() || res.ptr != end || stem.empty()) return std::nullopt;
  return idx;
}

std::map<int, fs::path> list_indexed(const fs::path& dir, std::string_view ext) {
  std::map<int, fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (auto idx = index_of(entry.path(), ext)) out[*idx] = entry.path();
  }
  return out;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace

SceneBundle load_scene(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw ValidationError({"scene directory " + dir.string() + " does not exist"});
  }
  SceneBundle bundle;
  bundle.scene_id = fs::absolute(dir).lexically_normal().filename().string();
  if (bundle.scene_id.empty()) {
    bundle.scene_id = fs::absolute(dir).lexically_normal().parent_path().filename().string();
  }
  std::vector<std::string> issues;

  const fs::path cloud_path = dir / "cloud.ply";
  if (!fs::exists(cloud_path)) {
    issues.emplace_back("missing file cloud.ply");
  } else {
    try {
      bundle.cloud = read_ply(cloud_path);
    } catch (const Error& e) {
      issues.push_back(std::string("cloud.ply: ") + e.what());
    }
  }

  const fs::path intr_path = dir / "intrinsics.txt";
  if (!fs::exists(intr_path)) {
    issues.emplace_back("missing file intrinsics.txt");
  } else {
    try {
      const auto v = read_numbers(intr_path);
      if (v.size() != 6) {
        issues.push_back("intrinsics.txt: expected 6 values, found " +
                         std::to_string(v.size()));
      } else {
        bundle.intrinsics = {v[0], v[1], v[2], v[3], static_cast<int>(v[4]),
                             static_cast<int>(v[5])};
      }
    } catch (const Error& e) {
      issues.emplace_back(e.what());
    }
  }

  const auto poses = list_indexed(dir / "poses", ".txt");
  const auto images = list_indexed(dir / "frames", ".png");
  if (poses.size() != images.size()) {
    issues.push_back("pose count (" + std::to_string(poses.size()) +
                     ") does not match frame count (" +
                     std::to_string(images.size()) + ")");
  }
  std::set<int> all;
  for (const auto& [idx, _] : poses) all.insert(idx);
  for (const auto& [idx, _] : images) all.insert(idx);
  for (int idx : all) {
    const auto pose_it = poses.find(idx);
    const auto image_it = images.find(idx);
    const std::string tag = "frame " + std::to_string(idx);
    if (pose_it == poses.end()) {
      issues.push_back(tag + ": missing pose file poses/" + std::to_string(idx) +
                       ".txt");
      continue;
    }
    if (image_it == images.end()) {
      issues.push_back(tag + ": missing image frames/" + std::to_string(idx) +
                       ".png");
      continue;
    }
    try {
      const auto v = read_numbers(pose_it->second);
      if (v.size() != 16) {
        issues.push_back(tag + ": pose has " + std::to_string(v.size()) +
                         " values, expected 16");
        continue;
      }
      Mat4 m;
      for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) m(r, c) = v[r * 4 + c];
      }
      bundle.frames.push_back(
          {idx, "frames/" + std::to_string(idx) + ".png", CameraPose::from_matrix(m)});
    } catch (const Error& e) {
      issues.push_back(tag + ": " + e.what());
    }
  }

  const fs::path inst_path = dir / "instances.json";
  if (!fs::exists(inst_path)) {
    issues.emplace_back("missing file instances.json");
  } else {
    try {
      const auto doc = nlohmann::json::parse(read_text(inst_path));
      if (!doc.is_array()) throw InvalidArgument("instances.json: expected an array");
      for (const auto& item : doc) {
        Instance inst;
        inst.id = item.at("id").get<int>();
        if (item.contains("label") && !item["label"].is_null()) {
          inst.label = item["label"].get<std::string>();
        }
        inst.point_indices = item.at("point_indices").get<std::vector<std::size_t>>();
        bundle.instances.push_back(std::move(inst));
      }
    } catch (const nlohmann::json::exception& e) {
      issues.push_back(std::string("instances.json: ") + e.what());
    } catch (const Error& e) {
      issues.emplace_back(e.what());
    }
  }

  for (auto& inst : bundle.instances) {
    bool ok = !inst.point_indices.empty();
    for (std::size_t idx : inst.point_indices) ok = ok && idx < bundle.cloud.size();
    if (ok) inst.aabb = compute_instance_aabb(bundle.cloud, inst.point_indices);
  }

  // Structural checks need the cloud; without it every instance would be
  // reported out of range.
  if (!bundle.cloud.empty()) {
    auto more = validate_bundle(bundle);
    issues.insert(issues.end(), more.begin(), more.end());
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return bundle;
}

void write_scene(const SceneBundle& bundle, const fs::path& dir,
                 std::span<const RgbImage> frame_images) {
  if (!frame_images.empty() && frame_images.size() != bundle.frames.size()) {
    throw InvalidArgument("write_scene: need one image per frame");
  }
  fs::create_directories(dir / "poses");
  fs::create_directories(dir / "frames");
  write_ply(dir / "cloud.ply", bundle.cloud);

  {
    const auto& K = bundle.intrinsics;
    std::ofstream out(dir / "intrinsics.txt");
    out << format_double(K.fx) << ' ' << format_double(K.fy) << ' '
        << format_double(K.cx) << ' ' << format_double(K.cy) << ' ' << K.width
        << ' ' << K.height << '\n';
    if (!out) throw IoError("cannot write intrinsics.txt");
  }

  for (std::size_t i = 0; i < bundle.frames.size(); ++i) {
    const auto& frame = bundle.frames[i];
    std::ofstream out(dir / "poses" / (std::to_string(frame.index) + ".txt"));
    const Mat4 m = frame.pose.matrix();
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) {
        out << format_double(m(r, c)) << (c == 3 ? '\n' : ' ');
      }
    }
    if (!out) throw IoError("cannot write pose " + std::to_string(frame.index));
    if (!frame_images.empty()) write_png(dir / frame.image, frame_images[i]);
  }

  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& inst : bundle.instances) {
    nlohmann::ordered_json item;
    item["id"] = inst.id;
    if (inst.label) item["label"] = *inst.label;
    item["point_indices"] = inst.point_indices;
    doc.push_back(std::move(item));
  }
  std::ofstream out(dir / "instances.json");
  out << doc.dump() << '\n';
  if (!out) throw IoError("cannot write instances.json");
}

}  // namespace scenemark

// SPDX-License-Identifier: Apache-2.0

#include "scenemark/annotate.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "scenemark/errors.hpp"
#include "scenemark/sampler.hpp"

namespace fs = std::filesystem;

namespace scenemark {
namespace {

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

bool contains(const std::vector<int>& ids, int id) {
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

nlohmann::ordered_json style_json(const MarkerStyle& s) {
  nlohmann::ordered_json j;
  j["radius_at_512"] = s.radius_at_512;
  j["adaptive"] = s.adaptive;
  j["adaptive_gain"] = s.adaptive_gain;
  j["adaptive_min"] = s.adaptive_min;
  j["adaptive_max"] = s.adaptive_max;
  j["fill"] = {s.fill.r, s.fill.g, s.fill.b};
  j["outline"] = {s.outline.r, s.outline.g, s.outline.b};
  j["text"] = {s.text.r, s.text.g, s.text.b};
  j["text_height"] = s.text_height;
  j["dropout_fraction"] = s.dropout_fraction;
  j["dropout_seed"] = s.dropout_seed;
  return j;
}

Rgb rgb_from(const nlohmann::json& j, Rgb fallback) {
  if (!j.is_array() || j.size() != 3) return fallback;
  return {j[0].get<std::uint8_t>(), j[1].get<std::uint8_t>(), j[2].get<std::uint8_t>()};
}

MarkerStyle style_from(const nlohmann::json& j) {
  MarkerStyle s;
  s.radius_at_512 = j.value("radius_at_512", s.radius_at_512);
  s.adaptive = j.value("adaptive", s.adaptive);
  s.adaptive_gain = j.value("adaptive_gain", s.adaptive_gain);
  s.adaptive_min = j.value("adaptive_min", s.adaptive_min);
  s.adaptive_max = j.value("adaptive_max", s.adaptive_max);
  if (j.contains("fill")) s.fill = rgb_from(j["fill"], s.fill);
  if (j.contains("outline")) s.outline = rgb_from(j["outline"], s.outline);
  if (j.contains("text")) s.text = rgb_from(j["text"], s.text);
  s.text_height = j.value("text_height", s.text_height);
  s.dropout_fraction = j.value("dropout_fraction", s.dropout_fraction);
  s.dropout_seed = j.value("dropout_seed", s.dropout_seed);
  return s;
}

}  // namespace

int AnnotateConfig::frame_count() const {
  return frames.value_or(preset_info(preset).frames);
}

std::pair<int, int> AnnotateConfig::grid_shape() const {
  return grid.value_or(default_grid(frame_count()));
}

nlohmann::ordered_json AnnotateConfig::to_json() const {
  nlohmann::ordered_json j;
  j["preset"] = std::string(preset_name(preset));
  j["frames"] = frame_count();
  const auto g = grid_shape();
  j["grid"] = {g.first, g.second};
  j["marker"] = style_json(style);
  j["visibility"]["min_visible_fraction"] = visibility.min_visible_fraction;
  j["visibility"]["occlusion_tolerance"] = visibility.occlusion_tolerance;
  j["visibility"]["min_depth"] = visibility.min_depth;
  j["zbuffer_splat"] = zbuffer_splat;
  j["bev_margin_px"] = bev_margin_px;
  j["z_clip_percentile"] =
      z_clip_percentile ? nlohmann::ordered_json(*z_clip_percentile) : nlohmann::ordered_json();
  return j;
}

AnnotateConfig AnnotateConfig::from_json(const nlohmann::json& j) {
  AnnotateConfig c;
  if (j.contains("preset")) c.preset = parse_preset(j["preset"].get<std::string>());
  if (j.contains("frames") && !j["frames"].is_null()) c.frames = j["frames"].get<int>();
  if (j.contains("grid") && j["grid"].is_array() && j["grid"].size() == 2) {
    c.grid = std::make_pair(j["grid"][0].get<int>(), j["grid"][1].get<int>());
  }
  if (j.contains("marker")) c.style = style_from(j["marker"]);
  if (j.contains("visibility")) {
    const auto& v = j["visibility"];
    c.visibility.min_visible_fraction =
        v.value("min_visible_fraction", c.visibility.min_visible_fraction);
    c.visibility.occlusion_tolerance =
        v.value("occlusion_tolerance", c.visibility.occlusion_tolerance);
    c.visibility.min_depth = v.value("min_depth", c.visibility.min_depth);
  }
  c.zbuffer_splat = j.value("zbuffer_splat", c.zbuffer_splat);
  c.bev_margin_px = j.value("bev_margin_px", c.bev_margin_px);
  if (j.contains("z_clip_percentile")) {
    c.z_clip_percentile = j["z_clip_percentile"].is_null()
                              ? std::nullopt
                              : std::optional<double>(j["z_clip_percentile"].get<double>());
  }
  return c;
}

FrameLoader directory_loader(fs::path scene_dir) {
  return [dir = std::move(scene_dir)](const Frame& frame) {
    return read_png(dir / frame.image);
  };
}

AnnotatedScene annotate_scene(const SceneBundle& scene, const FrameLoader& load,
                              const AnnotateConfig& config) {
  config.style.validate();
  const auto info = preset_info(config.preset);
  const int n = config.frame_count();
  const auto [rows, cols] = config.grid_shape();
  if (rows * cols != n) {
    throw InvalidArgument("annotate: grid " + std::to_string(rows) + "x" +
                          std::to_string(cols) + " does not hold " + std::to_string(n) +
                          " frames");
  }
  const auto plan =
      sample_indices(static_cast<std::int64_t>(scene.frames.size()), n);

  AnnotatedScene out;
  out.scene_id = scene.scene_id;
  const auto& K = scene.intrinsics;
  const double sx = static_cast<double>(info.width) / K.width;
  const double sy = static_cast<double>(info.height) / K.height;
  for (const auto idx : plan.indices) {
    const Frame& frame = scene.frames[static_cast<std::size_t>(idx - 1)];
    AnnotatedFrame af;
    af.index = idx;
    const auto zbuf = render_frame_zbuffer(scene.cloud, frame.pose, K, config.zbuffer_splat);
    af.markers = frame_markers(scene, frame.pose, zbuf, config.visibility);
    af.placed = place_frame_markers(af.markers, sx, sy);
    RgbImage source = load(frame);
    if (source.empty()) throw InvalidArgument("annotate: empty image for frame " +
                                              std::to_string(frame.index));
    const RgbImage resized = resize_bilinear(source, info.width, info.height);
    auto drawn = overlay_markers(resized, af.placed, config.style);
    af.image = std::move(drawn.image);
    af.drawn_ids = std::move(drawn.drawn_ids);
    af.dropped_ids = std::move(drawn.dropped_ids);
    out.frames.push_back(std::move(af));
  }

  std::vector<RgbImage> tiles;
  tiles.reserve(out.frames.size());
  for (const auto& f : out.frames) tiles.push_back(f.image);
  out.stitched = stitch(tiles, rows, cols);

  BevConfig bev_cfg;
  bev_cfg.width = info.width;
  bev_cfg.height = info.height;
  bev_cfg.margin_px = config.bev_margin_px;
  bev_cfg.z_clip_percentile = config.z_clip_percentile;
  out.bev = render_bev(scene.cloud, bev_cfg);
  out.bev_markers = bev_markers(scene);
  out.bev_placed = place_bev_markers(out.bev_markers, out.bev);
  auto drawn = overlay_markers(out.bev.pixels, out.bev_placed, config.style);
  out.bev_image = std::move(drawn.image);
  out.bev_drawn_ids = std::move(drawn.drawn_ids);
  out.bev_dropped_ids = std::move(drawn.dropped_ids);
  return out;
}

nlohmann::ordered_json bev_meta_json(const BevImage& bev) {
  nlohmann::ordered_json j;
  j["width"] = bev.pixels.width();
  j["height"] = bev.pixels.height();
  j["meters_per_pixel"] = bev.meters_per_pixel;
  const auto& A = bev.world_to_pixel;
  j["world_to_pixel"] = {A(0, 0), A(0, 1), A(0, 2), A(1, 0), A(1, 1), A(1, 2)};
  j["z_clip"] = bev.z_clip ? nlohmann::ordered_json(*bev.z_clip) : nlohmann::ordered_json();
  return j;
}

nlohmann::ordered_json markers_json(const AnnotatedScene& scene) {
  const auto layout = annotation_layout(scene.frames.size());
  nlohmann::ordered_json j;
  j["scene"] = scene.scene_id;
  auto& frames = j["frames"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < scene.frames.size(); ++i) {
    const auto& f = scene.frames[i];
    nlohmann::ordered_json fj;
    fj["frame"] = f.index;
    fj["image"] = layout.frames[i].generic_string();
    auto& ms = fj["markers"] = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < f.markers.size(); ++k) {
      const auto& m = f.markers[k];
      nlohmann::ordered_json mj;
      mj["id"] = m.object_id;
      mj["u"] = f.placed[k].pixel.x();
      mj["v"] = f.placed[k].pixel.y();
      mj["source_u"] = m.pixel.x();
      mj["source_v"] = m.pixel.y();
      mj["depth"] = m.mean_depth;
      mj["visible_fraction"] = m.visible_fraction;
      mj["drawn"] = contains(f.drawn_ids, m.object_id);
      ms.push_back(std::move(mj));
    }
    frames.push_back(std::move(fj));
  }
  auto& bev = j["bev"];
  bev["image"] = layout.bev.generic_string();
  auto& bm = bev["markers"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < scene.bev_markers.size(); ++k) {
    const auto& m = scene.bev_markers[k];
    nlohmann::ordered_json mj;
    mj["id"] = m.object_id;
    mj["x"] = m.world_xy.x();
    mj["y"] = m.world_xy.y();
    mj["u"] = scene.bev_placed[k].pixel.x();
    mj["v"] = scene.bev_placed[k].pixel.y();
    mj["point_count"] = m.point_count;
    mj["drawn"] = contains(scene.bev_drawn_ids, m.object_id);
    bm.push_back(std::move(mj));
  }
  return j;
}

AnnotationFiles annotation_layout(std::size_t frame_count) {
  AnnotationFiles files;
  for (std::size_t i = 0; i < frame_count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%02zu.png", i + 1);
    files.frames.push_back(fs::path("frames") / name);
  }
  files.bev = "bev.png";
  files.stitched = "stitched.png";
  files.markers = "markers.json";
  files.bev_meta = "bev_meta.json";
  return files;
}

AnnotationFiles write_annotation(const AnnotatedScene& scene, const fs::path& dir) {
  const auto files = annotation_layout(scene.frames.size());
  fs::create_directories(dir / "frames");
  for (std::size_t i = 0; i < scene.frames.size(); ++i) {
    write_png(dir / files.frames[i], scene.frames[i].image);
  }
  write_png(dir / files.bev, scene.bev_image);
  write_png(dir / files.stitched, scene.stitched.pixels);
  write_json(dir / files.markers, markers_json(scene));
  write_json(dir / files.bev_meta, bev_meta_json(scene.bev));
  return files;
}

}  // namespace scenemark

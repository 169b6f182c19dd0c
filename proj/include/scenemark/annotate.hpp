// SPDX-License-Identifier: Apache-2.0
//
// Scene annotation: sample frames, place object markers in each frame and in
// the BEV image, resize to a preset and stitch.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scenemark/image.hpp"
#include "scenemark/markers.hpp"
#include "scenemark/overlay.hpp"
#include "scenemark/render.hpp"
#include "scenemark/types.hpp"

namespace scenemark {

struct AnnotateConfig {
  Preset preset = Preset::base;
  std::optional<int> frames;  // defaults to the preset's frame count
  MarkerStyle style;
  VisibilityParams visibility;
  int zbuffer_splat = 2;
  std::optional<std::pair<int, int>> grid;  // defaults to default_grid(frames)
  int bev_margin_px = 4;
  std::optional<double> z_clip_percentile = 95.0;

  int frame_count() const;
  std::pair<int, int> grid_shape() const;
  nlohmann::ordered_json to_json() const;
  static AnnotateConfig from_json(const nlohmann::json& json);
};

struct AnnotatedFrame {
  std::int64_t index = 0;           // 1-based position in the trajectory
  RgbImage image;                   // preset resolution, markers drawn
  std::vector<Marker2D> markers;    // source-resolution positions
  std::vector<PlacedMarker> placed; // preset-resolution positions
  std::vector<int> drawn_ids;
  std::vector<int> dropped_ids;
};

struct AnnotatedScene {
  std::string scene_id;
  std::vector<AnnotatedFrame> frames;
  StitchedImage stitched;
  BevImage bev;          // unannotated raster with its transform
  RgbImage bev_image;    // markers drawn
  std::vector<Marker3D> bev_markers;
  std::vector<PlacedMarker> bev_placed;
  std::vector<int> bev_drawn_ids;
  std::vector<int> bev_dropped_ids;
};

using FrameLoader = std::function<RgbImage(const Frame& frame)>;

/// Loads frame images from `<scene_dir>/<frame.image>`.
FrameLoader directory_loader(std::filesystem::path scene_dir);

/// Throws InvalidArgument when more frames are requested than recorded.
AnnotatedScene annotate_scene(const SceneBundle& scene, const FrameLoader& load,
                              const AnnotateConfig& config);

/// Every frame and BEV marker with its id, pixel and world position.
nlohmann::ordered_json markers_json(const AnnotatedScene& scene);
nlohmann::ordered_json bev_meta_json(const BevImage& bev);

struct AnnotationFiles {
  std::vector<std::filesystem::path> frames;  // relative to the output dir
  std::filesystem::path bev;
  std::filesystem::path stitched;
  std::filesystem::path markers;
  std::filesystem::path bev_meta;
};

/// Writes frames/frame_NN.png, bev.png, stitched.png, markers.json and
/// bev_meta.json under `dir`.
AnnotationFiles write_annotation(const AnnotatedScene& scene,
                                 const std::filesystem::path& dir);

/// Names `write_annotation` uses, without writing anything.
AnnotationFiles annotation_layout(std::size_t frame_count);

}  // namespace scenemark

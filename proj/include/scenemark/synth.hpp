// SPDX-License-Identifier: Apache-2.0
//
// Deterministic synthetic indoor scenes: a walled room with box-shaped
// objects and a camera circling inward. Ground truth for questions about the
// scene is derived from the generator's own object list.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scenemark/image.hpp"
#include "scenemark/rng.hpp"
#include "scenemark/types.hpp"

namespace scenemark {

struct SynthSpec {
  std::string scene_id = "synth";
  double room_x = 6.0;  // meters
  double room_y = 5.0;
  double wall_height = 2.5;
  int object_count = 3;
  int points_per_object = 6000;
  int frame_count = 24;
  double surface_spacing = 0.04;  // floor and wall sampling pitch, meters
  CameraIntrinsics intrinsics{400.0, 400.0, 320.0, 240.0, 640, 480};
  double camera_height = 1.6;
  int splat_radius = 2;  // for the rendered frame images
  int max_placement_attempts = 500;

  void validate() const;
};

struct SynthObject {
  int id = 0;
  std::string label;
  std::string color_name;
  Rgb color;
  Aabb nominal_box;  // the sampled box; the instance box is the tight fit
};

struct SynthScene {
  SceneBundle bundle;
  std::vector<RgbImage> frame_images;
  std::vector<SynthObject> objects;
};

/// Throws Error when the objects cannot be placed disjointly within the
/// room after the configured number of attempts.
SynthScene synth_scene(const SynthSpec& spec, std::uint64_t seed);

}  // namespace scenemark

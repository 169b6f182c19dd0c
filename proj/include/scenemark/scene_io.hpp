// SPDX-License-Identifier: Apache-2.0
//
// Scene bundle directory layout:
//
//   cloud.ply                  binary little-endian PLY, xyz + rgb
//   intrinsics.txt             fx fy cx cy width height
//   poses/<frame_index>.txt    4x4 row-major camera-to-world
//   frames/<frame_index>.png   frame image
//   instances.json             [{"id", "label"?, "point_indices"}]

#pragma once

#include <filesystem>
#include <span>

#include "scenemark/image.hpp"
#include "scenemark/types.hpp"

namespace scenemark {

/// Reads and validates a bundle. Every problem found is collected into a
/// single ValidationError. The scene id is the directory name.
SceneBundle load_scene(const std::filesystem::path& dir);

/// Writes the bundle's cloud, intrinsics, poses and instances. When
/// `frame_images` is non-empty it must hold one image per frame, written to
/// each frame's image path.
void write_scene(const SceneBundle& bundle, const std::filesystem::path& dir,
                 std::span<const RgbImage> frame_images = {});

}  // namespace scenemark

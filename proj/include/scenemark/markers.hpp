// SPDX-License-Identifier: Apache-2.0
//
// Object marker placement: one 3D marker per instance on the ground plane and
// one 2D marker per instance per frame at the centroid of its visible
// projection.

#pragma once

#include <optional>
#include <vector>

#include "scenemark/render.hpp"
#include "scenemark/types.hpp"

namespace scenemark {

struct Marker2D {
  int object_id = 0;
  Vec2 pixel = Vec2::Zero();
  double mean_depth = 0.0;
  double visible_fraction = 0.0;
  std::size_t visible_points = 0;
};

struct Marker3D {
  int object_id = 0;
  Vec2 world_xy = Vec2::Zero();
  std::size_t point_count = 0;
};

struct VisibilityParams {
  double min_visible_fraction = 0.15;
  double occlusion_tolerance = 0.05;  // meters
  double min_depth = 1e-4;            // meters
};

/// Center of the instance's bounding box projected to the xy plane.
Marker3D bev_marker(const Instance& instance, const PointCloud& cloud);

/// Visible points are those that project inside the image with depth within
/// `occlusion_tolerance` of the z-buffer. Returns nullopt when the visible
/// fraction is below `min_visible_fraction`.
std::optional<Marker2D> frame_marker(const Instance& instance,
                                     const PointCloud& cloud,
                                     const CameraPose& pose,
                                     const CameraIntrinsics& intrinsics,
                                     const DepthMap& zbuffer,
                                     const VisibilityParams& params = {});

/// Fraction of the instance's points that pass the visibility test.
double visible_fraction(const Instance& instance, const PointCloud& cloud,
                        const CameraPose& pose,
                        const CameraIntrinsics& intrinsics,
                        const DepthMap& zbuffer,
                        const VisibilityParams& params = {});

/// 2D markers of all instances in one frame, ascending by object id.
std::vector<Marker2D> frame_markers(const SceneBundle& scene,
                                    const CameraPose& pose,
                                    const DepthMap& zbuffer,
                                    const VisibilityParams& params = {});

std::vector<Marker3D> bev_markers(const SceneBundle& scene);

}  // namespace scenemark

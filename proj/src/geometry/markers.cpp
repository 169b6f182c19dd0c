// SPDX-License-Identifier: Apache-2.0

#include "scenemark/markers.hpp"

#include <algorithm>
#include <cmath>

#include "scenemark/errors.hpp"
#include "scenemark/geometry.hpp"

namespace scenemark {
namespace {

struct VisibleSet {
  Vec2 pixel_sum = Vec2::Zero();
  double depth_sum = 0.0;
  std::size_t kept = 0;
};

VisibleSet collect_visible(const Instance& instance, const PointCloud& cloud,
                           const CameraPose& pose, const CameraIntrinsics& K,
                           const DepthMap& zbuffer,
                           const VisibilityParams& params) {
  if (zbuffer.rows() != K.height || zbuffer.cols() != K.width) {
    throw InvalidArgument("frame_marker: z-buffer size does not match intrinsics");
  }
  VisibleSet set;
  for (std::size_t idx : instance.point_indices) {
    const auto px = project_point(cloud.positions[idx], pose, K, params.min_depth);
    if (!px) continue;
    if (!(px->u >= 0.0 && px->u < K.width && px->v >= 0.0 && px->v < K.height)) {
      continue;
    }
    const auto x = static_cast<Eigen::Index>(px->u);
    const auto y = static_cast<Eigen::Index>(px->v);
    if (px->depth > zbuffer(y, x) + params.occlusion_tolerance) continue;
    set.pixel_sum += Vec2(px->u, px->v);
    set.depth_sum += px->depth;
    ++set.kept;
  }
  return set;
}

}  // namespace

Marker3D bev_marker(const Instance& instance, const PointCloud& cloud) {
  if (instance.point_indices.empty()) {
    throw InvalidArgument("bev_marker: instance " + std::to_string(instance.id) +
                          " has no points");
  }
  const Aabb box = compute_instance_aabb(cloud, instance.point_indices);
  return {instance.id, box.center().head<2>(), instance.point_indices.size()};
}

double visible_fraction(const Instance& instance, const PointCloud& cloud,
                        const CameraPose& pose, const CameraIntrinsics& K,
                        const DepthMap& zbuffer, const VisibilityParams& params) {
  if (instance.point_indices.empty()) return 0.0;
  const auto set = collect_visible(instance, cloud, pose, K, zbuffer, params);
  return static_cast<double>(set.kept) / instance.point_indices.size();
}

std::optional<Marker2D> frame_marker(const Instance& instance,
                                     const PointCloud& cloud,
                                     const CameraPose& pose,
                                     const CameraIntrinsics& K,
                                     const DepthMap& zbuffer,
                                     const VisibilityParams& params) {
  if (instance.point_indices.empty()) return std::nullopt;
  const auto set = collect_visible(instance, cloud, pose, K, zbuffer, params);
  const double fraction =
      static_cast<double>(set.kept) / instance.point_indices.size();
  if (set.kept == 0 || fraction < params.min_visible_fraction) {
    return std::nullopt;
  }
  const double n = static_cast<double>(set.kept);
  return Marker2D{instance.id, set.pixel_sum / n, set.depth_sum / n, fraction,
                  set.kept};
}

std::vector<Marker2D> frame_markers(const SceneBundle& scene,
                                    const CameraPose& pose,
                                    const DepthMap& zbuffer,
                                    const VisibilityParams& params) {
  std::vector<Marker2D> out;
  for (const auto& inst : scene.instances) {
    if (auto m = frame_marker(inst, scene.cloud, pose, scene.intrinsics, zbuffer,
                              params)) {
      out.push_back(*m);
    }
  }
  std::sort(out.begin(), out.end(), [](const Marker2D& a, const Marker2D& b) {
    return a.object_id < b.object_id;
  });
  return out;
}

std::vector<Marker3D> bev_markers(const SceneBundle& scene) {
  std::vector<Marker3D> out;
  out.reserve(scene.instances.size());
  for (const auto& inst : scene.instances) out.push_back(bev_marker(inst, scene.cloud));
  std::sort(out.begin(), out.end(), [](const Marker3D& a, const Marker3D& b) {
    return a.object_id < b.object_id;
  });
  return out;
}

}  // namespace scenemark

// SPDX-License-Identifier: Apache-2.0
//
// Pinhole projection and axis-aligned box helpers. Everything here is header
// only and works on any Eigen expression of the matching shape.

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <algorithm>
#include <optional>

#include "scenemark/types.hpp"

namespace scenemark {

/// Image-plane location plus camera-frame depth.
template <typename Scalar>
struct PixelDepth {
  Scalar u;
  Scalar v;
  Scalar depth;
};

inline constexpr double kDefaultMinDepth = 1e-4;

/// Projects a world point through `pose` (camera-to-world). Returns nullopt
/// when the camera-frame depth is <= `min_depth`. The pixel may fall outside
/// the image; callers filter.
template <typename Derived>
std::optional<PixelDepth<typename Derived::Scalar>> project_point(
    const Eigen::MatrixBase<Derived>& p_world, const CameraPose& pose,
    const CameraIntrinsics& K, double min_depth = kDefaultMinDepth) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3);
  using Scalar = typename Derived::Scalar;
  const Eigen::Matrix<Scalar, 3, 1> p_cam =
      pose.world_to_camera().template cast<Scalar>() * p_world.eval();
  if (!(p_cam.z() > Scalar(min_depth))) return std::nullopt;
  return PixelDepth<Scalar>{Scalar(K.fx) * p_cam.x() / p_cam.z() + Scalar(K.cx),
                            Scalar(K.fy) * p_cam.y() / p_cam.z() + Scalar(K.cy),
                            p_cam.z()};
}

/// Inverse of project_point: the world point on the ray through (u, v) at
/// camera-frame depth `depth`.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> back_project(const PixelDepth<Scalar>& px,
                                         const CameraPose& pose,
                                         const CameraIntrinsics& K) {
  const Eigen::Matrix<Scalar, 3, 1> p_cam(
      (px.u - Scalar(K.cx)) / Scalar(K.fx) * px.depth,
      (px.v - Scalar(K.cy)) / Scalar(K.fy) * px.depth, px.depth);
  return pose.camera_to_world().template cast<Scalar>() * p_cam;
}

template <typename Scalar, int Dim>
Scalar box_volume(const Eigen::AlignedBox<Scalar, Dim>& box) {
  if (box.isEmpty()) return Scalar(0);
  return box.sizes().prod();
}

/// Intersection over union of two axis-aligned boxes. Two zero-volume boxes
/// score 1 when identical and 0 otherwise.
template <typename Scalar, int Dim>
Scalar aabb_iou(const Eigen::AlignedBox<Scalar, Dim>& a,
                const Eigen::AlignedBox<Scalar, Dim>& b) {
  const Scalar inter = box_volume(a.intersection(b));
  const Scalar uni = box_volume(a) + box_volume(b) - inter;
  if (uni <= Scalar(0)) {
    return (a.min() == b.min() && a.max() == b.max()) ? Scalar(1) : Scalar(0);
  }
  return std::clamp(inter / uni, Scalar(0), Scalar(1));
}

}  // namespace scenemark

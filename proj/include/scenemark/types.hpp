// SPDX-License-Identifier: Apache-2.0
//
// Scene-level domain types. World frame is right-handed, z-up, meters.
// Poses are camera-to-world; the camera looks along +z with +x right and
// +y down (pinhole convention).

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace scenemark {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat4 = Eigen::Matrix4d;
using Aabb = Eigen::AlignedBox3d;

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws InvalidArgument unless fx, fy > 0 and the principal point lies
  /// inside the image.
  void validate() const;

  friend bool operator==(const CameraIntrinsics&,
                         const CameraIntrinsics&) = default;
};

/// Rigid camera-to-world transform.
class CameraPose {
 public:
  CameraPose() = default;

  /// Validates rigidity (orthonormal rotation, det +1, affine bottom row) to
  /// within `tol`; throws InvalidArgument otherwise.
  static CameraPose from_matrix(const Mat4& camera_to_world,
                                double tol = 1e-6);

  /// Pose at `eye` looking at `target`; `up` gives the world direction that
  /// should appear up in the image.
  static CameraPose look_at(const Vec3& eye, const Vec3& target,
                            const Vec3& up = Vec3::UnitZ());

  const Eigen::Isometry3d& camera_to_world() const { return camera_to_world_; }
  const Eigen::Isometry3d& world_to_camera() const { return world_to_camera_; }
  Mat4 matrix() const { return camera_to_world_.matrix(); }
  Vec3 center() const { return camera_to_world_.translation(); }

  friend bool operator==(const CameraPose& a, const CameraPose& b) {
    return a.camera_to_world_.matrix() == b.camera_to_world_.matrix();
  }

 private:
  explicit CameraPose(const Eigen::Isometry3d& c2w);

  Eigen::Isometry3d camera_to_world_ = Eigen::Isometry3d::Identity();
  Eigen::Isometry3d world_to_camera_ = Eigen::Isometry3d::Identity();
};

struct PointCloud {
  std::vector<Vec3> positions;
  std::vector<Rgb> colors;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }

  friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

struct Instance {
  int id = 0;
  std::vector<std::size_t> point_indices;
  std::optional<std::string> label;
  Aabb aabb;

  friend bool operator==(const Instance& a, const Instance& b) {
    return a.id == b.id && a.point_indices == b.point_indices &&
           a.label == b.label && a.aabb.min() == b.aabb.min() &&
           a.aabb.max() == b.aabb.max();
  }
};

struct Frame {
  int index = 0;          // 1-based position in the video
  std::string image;      // path relative to the bundle root
  CameraPose pose;

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct SceneBundle {
  std::string scene_id;
  PointCloud cloud;
  CameraIntrinsics intrinsics;
  std::vector<Frame> frames;
  std::vector<Instance> instances;

  const Instance* find_instance(int id) const;

  friend bool operator==(const SceneBundle&, const SceneBundle&) = default;
};

/// Componentwise min/max over the referenced points. Throws InvalidArgument
/// on an empty index list or out-of-range index.
Aabb compute_instance_aabb(const PointCloud& cloud,
                           const std::vector<std::size_t>& point_indices);

/// Every invariant violation in the bundle, one message per issue. Empty on
/// success.
std::vector<std::string> validate_bundle(const SceneBundle& bundle);

}  // namespace scenemark

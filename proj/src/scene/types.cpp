// SPDX-License-Identifier: Apache-2.0

#include "scenemark/types.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "scenemark/errors.hpp"

namespace scenemark {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw InvalidArgument("intrinsics: focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw InvalidArgument("intrinsics: image size must be positive");
  }
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw InvalidArgument("intrinsics: principal point outside the image");
  }
}

CameraPose::CameraPose(const Eigen::Isometry3d& c2w)
    : camera_to_world_(c2w), world_to_camera_(c2w.inverse()) {}

CameraPose CameraPose::from_matrix(const Mat4& m, double tol) {
  if (!m.allFinite()) throw InvalidArgument("pose: non-finite entries");
  if (m.row(3) != Eigen::RowVector4d(0, 0, 0, 1)) {
    throw InvalidArgument("pose: bottom row must be (0, 0, 0, 1)");
  }
  const Eigen::Matrix3d R = m.topLeftCorner<3, 3>();
  const double ortho_err =
      (R * R.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho_err > tol) {
    throw InvalidArgument("pose: rotation is not orthonormal");
  }
  if (R.determinant() <= 0.0) {
    throw InvalidArgument("pose: rotation has negative determinant");
  }
  Eigen::Isometry3d iso;
  iso.matrix() = m;
  return CameraPose(iso);
}

CameraPose CameraPose::look_at(const Vec3& eye, const Vec3& target,
                               const Vec3& up) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-9) {
    throw InvalidArgument("look_at: view direction parallel to up vector");
  }
  right.normalize();
  // Image +y points down, so the camera's y axis is forward x right.
  const Vec3 down = forward.cross(right);
  Eigen::Isometry3d iso = Eigen::Isometry3d::Identity();
  iso.linear().col(0) = right;
  iso.linear().col(1) = down;
  iso.linear().col(2) = forward;
  iso.translation() = eye;
  return CameraPose(iso);
}

const Instance* SceneBundle::find_instance(int id) const {
  for (const auto& inst : instances) {
    if (inst.id == id) return &inst;
  }
  return nullptr;
}

Aabb compute_instance_aabb(const PointCloud& cloud,
                           const std::vector<std::size_t>& point_indices) {
  if (point_indices.empty()) {
    throw InvalidArgument("compute_instance_aabb: empty index list");
  }
  Aabb box;  // default-constructed box is empty
  for (std::size_t idx : point_indices) {
    if (idx >= cloud.size()) {
      throw InvalidArgument("compute_instance_aabb: index " +
                            std::to_string(idx) + " out of range");
    }
    box.extend(cloud.positions[idx]);
  }
  return box;
}

std::vector<std::string> validate_bundle(const SceneBundle& bundle) {
  std::vector<std::string> issues;
  const auto& cloud = bundle.cloud;

  if (cloud.empty()) issues.emplace_back("point cloud is empty");
  if (cloud.positions.size() != cloud.colors.size()) {
    issues.emplace_back("point cloud has " +
                        std::to_string(cloud.positions.size()) +
                        " positions but " + std::to_string(cloud.colors.size()) +
                        " colors");
  }
  for (std::size_t i = 0; i < cloud.positions.size(); ++i) {
    if (!cloud.positions[i].allFinite()) {
      issues.push_back("point " + std::to_string(i) + " is not finite");
      break;
    }
  }

  try {
    bundle.intrinsics.validate();
  } catch (const InvalidArgument& e) {
    issues.emplace_back(e.what());
  }

  if (bundle.frames.empty()) issues.emplace_back("scene has no frames");
  for (std::size_t i = 0; i < bundle.frames.size(); ++i) {
    const int idx = bundle.frames[i].index;
    if (i == 0 && idx != 1) {
      issues.push_back("first frame index is " + std::to_string(idx) +
                       ", expected 1");
    }
    if (i > 0 && idx <= bundle.frames[i - 1].index) {
      issues.push_back("frame index " + std::to_string(idx) +
                       " is not strictly increasing");
    }
  }

  std::set<int> seen;
  for (const auto& inst : bundle.instances) {
    const std::string tag = "instance " + std::to_string(inst.id);
    if (inst.id <= 0) issues.push_back(tag + ": id must be positive");
    if (!seen.insert(inst.id).second) issues.push_back(tag + ": duplicate id");
    if (inst.point_indices.empty()) {
      issues.push_back(tag + ": no points");
      continue;
    }
    bool in_range = true;
    for (std::size_t idx : inst.point_indices) {
      if (idx >= cloud.size()) {
        issues.push_back(tag + ": point index " + std::to_string(idx) +
                         " out of range (cloud has " +
                         std::to_string(cloud.size()) + " points)");
        in_range = false;
        break;
      }
    }
    if (!in_range) continue;
    const Aabb box = compute_instance_aabb(cloud, inst.point_indices);
    if (box.min() != inst.aabb.min() || box.max() != inst.aabb.max()) {
      issues.push_back(tag + ": stored box does not match its points");
    }
  }
  return issues;
}

}  // namespace scenemark

// SPDX-License-Identifier: Apache-2.0
//
// Fixtures shared by the unit and acceptance tests.

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "scenemark/rng.hpp"
#include "scenemark/types.hpp"

namespace testing {

namespace fs = std::filesystem;

// Fresh directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "scenemark") {
    static int counter = 0;
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            (tag + "-" + std::to_string(rd()) + "-" + std::to_string(++counter));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

inline scenemark::Aabb box(double x0, double y0, double z0, double x1, double y1, double z1) {
  return scenemark::Aabb(scenemark::Vec3(x0, y0, z0), scenemark::Vec3(x1, y1, z1));
}

// Random rigid camera-to-world matrix.
inline scenemark::Mat4 random_pose(scenemark::SplitRng& rng) {
  const Eigen::Vector4d q(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                          rng.uniform(-1, 1));
  Eigen::Quaterniond rot(q[0], q[1], q[2], q[3]);
  if (rot.norm() < 1e-3) rot = Eigen::Quaterniond::Identity();
  rot.normalize();
  scenemark::Mat4 m = scenemark::Mat4::Identity();
  m.topLeftCorner<3, 3>() = rot.toRotationMatrix();
  m.topRightCorner<3, 1>() =
      scenemark::Vec3(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
  return m;
}

// Points on a regular grid over all six faces of a box.
inline void sample_box_surface(const scenemark::Aabb& b, double spacing, scenemark::Rgb color,
                               scenemark::PointCloud& cloud) {
  const scenemark::Vec3 lo = b.min(), hi = b.max();
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3, v = (axis + 2) % 3;
    const int nu = static_cast<int>(std::ceil((hi[u] - lo[u]) / spacing));
    const int nv = static_cast<int>(std::ceil((hi[v] - lo[v]) / spacing));
    for (double side : {lo[axis], hi[axis]}) {
      for (int i = 0; i <= nu; ++i) {
        for (int j = 0; j <= nv; ++j) {
          scenemark::Vec3 p;
          p[axis] = side;
          p[u] = lo[u] + (hi[u] - lo[u]) * i / nu;
          p[v] = lo[v] + (hi[v] - lo[v]) * j / nv;
          cloud.positions.push_back(p);
          cloud.colors.push_back(color);
        }
      }
    }
  }
}

}  // namespace testing

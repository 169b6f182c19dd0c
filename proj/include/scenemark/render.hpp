// SPDX-License-Identifier: Apache-2.0
//
// Point-cloud rasterization: perspective depth/color splatting for frames and
// the orthographic top-down (BEV) view.

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "scenemark/image.hpp"
#include "scenemark/types.hpp"

namespace scenemark {

/// Per-pixel depth, indexed (row = v, col = u). +inf marks empty pixels.
using DepthMap =
    Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kEmptyDepth = std::numeric_limits<double>::infinity();

/// Minimum camera-frame depth per pixel over all points, each point covering
/// the disk of `splat_radius` pixels around its projection.
DepthMap render_frame_zbuffer(const PointCloud& cloud, const CameraPose& pose,
                              const CameraIntrinsics& intrinsics,
                              int splat_radius = 1);

/// Color of the nearest splatted point per pixel; `background` elsewhere.
RgbImage render_frame_color(const PointCloud& cloud, const CameraPose& pose,
                            const CameraIntrinsics& intrinsics,
                            int splat_radius = 1, Rgb background = {0, 0, 0});

struct BevConfig {
  int width = 512;
  int height = 490;
  int margin_px = 4;
  Rgb background{255, 255, 255};
  /// Points above this nearest-rank height percentile are dropped before
  /// rasterization; nullopt keeps every point.
  std::optional<double> z_clip_percentile = 95.0;
};

struct BevImage {
  RgbImage pixels;
  /// Affine map (u, v) = A * (x, y, 1); image up is world +y.
  Eigen::Matrix<double, 2, 3> world_to_pixel;
  double meters_per_pixel = 0.0;
  /// Height threshold actually applied, if any.
  std::optional<double> z_clip;
  /// Index of the point shown in each pixel (row-major), -1 for background.
  std::vector<std::int64_t> top_point;

  Vec2 to_pixel(const Vec2& world_xy) const {
    return world_to_pixel.leftCols<2>() * world_xy + world_to_pixel.col(2);
  }
  Vec2 to_world(const Vec2& pixel) const {
    return world_to_pixel.leftCols<2>().inverse() *
           (pixel - world_to_pixel.col(2));
  }
  /// Raster cell holding a world point, clamped into the image.
  Eigen::Vector2i cell_of(const Vec2& world_xy) const;
  std::int64_t top_point_at(int x, int y) const {
    return top_point[static_cast<std::size_t>(y) * pixels.width() + x];
  }
};

/// Orthographic top-down rendering. The cloud's xy bounding box plus the
/// margin is fitted to the raster with a uniform scale; each cell shows the
/// highest point that falls in it (earlier points win ties).
BevImage render_bev(const PointCloud& cloud, const BevConfig& config = {});

/// Nearest-rank percentile of the point heights.
double height_percentile(const PointCloud& cloud, double percentile);

}  // namespace scenemark

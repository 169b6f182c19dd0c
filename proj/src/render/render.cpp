// SPDX-License-Identifier: Apache-2.0

#include "scenemark/render.hpp"

#include <algorithm>
#include <cmath>

#include "scenemark/errors.hpp"
#include "scenemark/geometry.hpp"

namespace scenemark {
namespace {

// Visits every pixel covered by each projected point.
template <typename Visit>
void splat_points(const PointCloud& cloud, const CameraPose& pose,
                  const CameraIntrinsics& K, int radius, Visit&& visit) {
  const int r2 = radius * radius;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto px = project_point(cloud.positions[i], pose, K);
    if (!px) continue;
    const double fu = std::floor(px->u);
    const double fv = std::floor(px->v);
    if (fu < -radius || fv < -radius || fu >= K.width + radius ||
        fv >= K.height + radius) {
      continue;
    }
    const int u = static_cast<int>(fu);
    const int v = static_cast<int>(fv);
    for (int dy = -radius; dy <= radius; ++dy) {
      const int y = v + dy;
      if (y < 0 || y >= K.height) continue;
      for (int dx = -radius; dx <= radius; ++dx) {
        const int x = u + dx;
        if (x < 0 || x >= K.width || dx * dx + dy * dy > r2) continue;
        visit(x, y, px->depth, i);
      }
    }
  }
}

}  // namespace

DepthMap render_frame_zbuffer(const PointCloud& cloud, const CameraPose& pose,
                              const CameraIntrinsics& K, int splat_radius) {
  if (splat_radius < 0) throw InvalidArgument("splat radius must be >= 0");
  DepthMap depth = DepthMap::Constant(K.height, K.width, kEmptyDepth);
  splat_points(cloud, pose, K, splat_radius,
               [&](int x, int y, double d, std::size_t) {
                 double& cell = depth(y, x);
                 if (d < cell) cell = d;
               });
  return depth;
}

RgbImage render_frame_color(const PointCloud& cloud, const CameraPose& pose,
                            const CameraIntrinsics& K, int splat_radius,
                            Rgb background) {
  if (splat_radius < 0) throw InvalidArgument("splat radius must be >= 0");
  DepthMap depth = DepthMap::Constant(K.height, K.width, kEmptyDepth);
  RgbImage image(K.width, K.height, background);
  splat_points(cloud, pose, K, splat_radius,
               [&](int x, int y, double d, std::size_t i) {
                 double& cell = depth(y, x);
                 if (d < cell) {
                   cell = d;
                   image.set(x, y, cloud.colors[i]);
                 }
               });
  return image;
}

double height_percentile(const PointCloud& cloud, double percentile) {
  if (cloud.empty()) throw InvalidArgument("height_percentile: empty cloud");
  if (!(percentile > 0.0 && percentile <= 100.0)) {
    throw InvalidArgument("height_percentile: percentile must be in (0, 100]");
  }
  std::vector<double> z(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) z[i] = cloud.positions[i].z();
  const auto n = static_cast<double>(z.size());
  auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, z.size());
  std::nth_element(z.begin(), z.begin() + (rank - 1), z.end());
  return z[rank - 1];
}

Eigen::Vector2i BevImage::cell_of(const Vec2& world_xy) const {
  const Vec2 uv = to_pixel(world_xy);
  const int x = std::clamp(static_cast<int>(std::floor(uv.x())), 0,
                           pixels.width() - 1);
  const int y = std::clamp(static_cast<int>(std::floor(uv.y())), 0,
                           pixels.height() - 1);
  return {x, y};
}

BevImage render_bev(const PointCloud& cloud, const BevConfig& config) {
  if (cloud.empty()) throw InvalidArgument("render_bev: empty cloud");
  const int W = config.width;
  const int H = config.height;
  if (W <= 0 || H <= 0) throw InvalidArgument("render_bev: bad raster size");
  if (config.margin_px < 0 || 2 * config.margin_px >= std::min(W, H)) {
    throw InvalidArgument("render_bev: margin leaves no drawable area");
  }

  Eigen::AlignedBox2d extent;
  for (const auto& p : cloud.positions) extent.extend(p.head<2>());
  const Vec2 size = extent.sizes();
  const double usable_w = W - 2.0 * config.margin_px;
  const double usable_h = H - 2.0 * config.margin_px;
  double mpp = std::max(size.x() / usable_w, size.y() / usable_h);
  if (!(mpp > 0.0)) mpp = 0.01;  // a single point or a degenerate line

  BevImage bev;
  bev.meters_per_pixel = mpp;
  const Vec2 c = extent.center();
  bev.world_to_pixel << 1.0 / mpp, 0.0, W / 2.0 - c.x() / mpp,  //
      0.0, -1.0 / mpp, H / 2.0 + c.y() / mpp;

  double z_limit = std::numeric_limits<double>::infinity();
  if (config.z_clip_percentile) {
    z_limit = height_percentile(cloud, *config.z_clip_percentile);
    bev.z_clip = z_limit;
  }

  bev.pixels = RgbImage(W, H, config.background);
  bev.top_point.assign(static_cast<std::size_t>(W) * H, -1);
  std::vector<double> top_z(bev.top_point.size(),
                            -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.positions[i];
    if (p.z() > z_limit) continue;
    const auto cell = bev.cell_of(p.head<2>());
    const std::size_t k = static_cast<std::size_t>(cell.y()) * W + cell.x();
    if (p.z() > top_z[k]) {
      top_z[k] = p.z();
      bev.top_point[k] = static_cast<std::int64_t>(i);
      bev.pixels.set(cell.x(), cell.y(), cloud.colors[i]);
    }
  }
  return bev;
}

}  // namespace scenemark

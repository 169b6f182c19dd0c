// SPDX-License-Identifier: Apache-2.0

#include "scenemark/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "scenemark/errors.hpp"
#include "scenemark/render.hpp"

namespace scenemark {
namespace {

struct NamedColor {
  const char* name;
  Rgb rgb;
};

constexpr std::array<NamedColor, 8> kColors = {{
    {"red", {200, 40, 40}},
    {"green", {40, 160, 60}},
    {"blue", {40, 70, 200}},
    {"yellow", {220, 200, 40}},
    {"purple", {130, 50, 160}},
    {"orange", {230, 120, 30}},
    {"brown", {120, 80, 40}},
    {"black", {30, 30, 30}},
}};

constexpr std::array<const char*, 8> kLabels = {
    "chair", "table", "sofa", "cabinet", "bed", "desk", "bookshelf", "box"};

const Rgb kFloorColor{170, 160, 140};
const Rgb kWallColor{205, 205, 215};

Rgb shade(Rgb c, double factor) {
  auto s = [factor](std::uint8_t v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v * factor), 0L, 255L));
  };
  return {s(c.r), s(c.g), s(c.b)};
}

// Stratified samples over a rectangle spanned by `origin + s * du + t * dv`,
// s, t in [0, 1]: `count` distinct cells of a grid, jittered within cells.
void sample_face(SplitRng& rng, const Vec3& origin, const Vec3& du,
                 const Vec3& dv, std::size_t count, Rgb color,
                 PointCloud& cloud) {
  if (count == 0) return;
  const double lu = du.norm();
  const double lv = dv.norm();
  const double aspect = lv > 0 ? lu / lv : 1.0;
  auto cols = static_cast<std::size_t>(
      std::max(1.0, std::ceil(std::sqrt(static_cast<double>(count) * aspect))));
  auto rows = static_cast<std::size_t>(
      std::ceil(static_cast<double>(count) / static_cast<double>(cols)));
  std::vector<std::size_t> cells(rows * cols);
  std::iota(cells.begin(), cells.end(), 0);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.below(cells.size() - i);
    std::swap(cells[i], cells[j]);
    const std::size_t r = cells[i] / cols;
    const std::size_t c = cells[i] % cols;
    const double s = (c + rng.uniform()) / cols;
    const double t = (r + rng.uniform()) / rows;
    cloud.positions.push_back(origin + s * du + t * dv);
    cloud.colors.push_back(color);
  }
}

void sample_grid(const Vec3& origin, const Vec3& du, const Vec3& dv,
                 double spacing, Rgb color, PointCloud& cloud,
                 const std::vector<Aabb>& exclude_xy = {}) {
  const auto nu = static_cast<int>(std::floor(du.norm() / spacing)) + 1;
  const auto nv = static_cast<int>(std::floor(dv.norm() / spacing)) + 1;
  const Vec3 step_u = du.normalized() * spacing;
  const Vec3 step_v = dv.normalized() * spacing;
  for (int j = 0; j < nv; ++j) {
    for (int i = 0; i < nu; ++i) {
      const Vec3 p = origin + i * step_u + j * step_v;
      const bool covered = std::any_of(
          exclude_xy.begin(), exclude_xy.end(), [&](const Aabb& b) {
            return p.x() >= b.min().x() && p.x() <= b.max().x() &&
                   p.y() >= b.min().y() && p.y() <= b.max().y();
          });
      if (covered) continue;
      cloud.positions.push_back(p);
      cloud.colors.push_back(color);
    }
  }
}

// Five visible faces of a box resting on the floor (no bottom face).
void sample_box(SplitRng& rng, const Aabb& box, std::size_t total, Rgb color,
                PointCloud& cloud) {
  const Vec3 lo = box.min();
  const Vec3 sz = box.sizes();
  struct Face {
    Vec3 origin, du, dv;
    double shade;
  };
  const std::array<Face, 5> faces = {{
      {Vec3(lo.x(), lo.y(), lo.z() + sz.z()), Vec3(sz.x(), 0, 0), Vec3(0, sz.y(), 0), 1.15},
      {lo, Vec3(sz.x(), 0, 0), Vec3(0, 0, sz.z()), 0.85},
      {Vec3(lo.x(), lo.y() + sz.y(), lo.z()), Vec3(sz.x(), 0, 0), Vec3(0, 0, sz.z()), 0.8},
      {lo, Vec3(0, sz.y(), 0), Vec3(0, 0, sz.z()), 0.95},
      {Vec3(lo.x() + sz.x(), lo.y(), lo.z()), Vec3(0, sz.y(), 0), Vec3(0, 0, sz.z()), 0.9},
  }};
  std::array<double, 5> area{};
  double sum = 0.0;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    area[f] = faces[f].du.cross(faces[f].dv).norm();
    sum += area[f];
  }
  std::size_t assigned = 0;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const std::size_t n =
        f + 1 == faces.size()
            ? total - assigned
            : static_cast<std::size_t>(std::floor(total * area[f] / sum));
    assigned += n;
    sample_face(rng, faces[f].origin, faces[f].du, faces[f].dv, n,
                shade(color, faces[f].shade), cloud);
  }
}

}  // namespace

void SynthSpec::validate() const {
  if (!(room_x > 1.0 && room_y > 1.0 && wall_height > 0.5)) {
    throw InvalidArgument("synth: room must be at least 1 m x 1 m");
  }
  if (object_count < 0) throw InvalidArgument("synth: negative object count");
  if (object_count > 0 && points_per_object < 10) {
    throw InvalidArgument("synth: need at least 10 points per object");
  }
  if (frame_count < 1) throw InvalidArgument("synth: need at least one frame");
  if (!(surface_spacing > 0.0)) throw InvalidArgument("synth: bad surface spacing");
  intrinsics.validate();
}

SynthScene synth_scene(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  SplitRng rng(seed);
  SynthScene out;
  auto& bundle = out.bundle;
  bundle.scene_id = spec.scene_id;
  bundle.intrinsics = spec.intrinsics;

  // Place objects as disjoint footprints with a clearance gap.
  constexpr double kGap = 0.25;
  constexpr double kWallClearance = 0.2;
  std::vector<Aabb> boxes;
  int attempts = 0;
  while (static_cast<int>(boxes.size()) < spec.object_count) {
    if (++attempts > spec.max_placement_attempts) {
      throw Error("synth: could not place " + std::to_string(spec.object_count) +
                  " disjoint objects in a " + std::to_string(spec.room_x) + " x " +
                  std::to_string(spec.room_y) + " m room after " +
                  std::to_string(spec.max_placement_attempts) + " attempts");
    }
    const Vec3 size(rng.uniform(0.4, 1.2), rng.uniform(0.4, 1.2),
                    rng.uniform(0.4, 1.3));
    const double x_hi = spec.room_x - kWallClearance - size.x();
    const double y_hi = spec.room_y - kWallClearance - size.y();
    if (x_hi <= kWallClearance || y_hi <= kWallClearance) continue;
    const Vec3 lo(rng.uniform(kWallClearance, x_hi),
                  rng.uniform(kWallClearance, y_hi), 0.0);
    const Aabb candidate(lo, lo + size);
    const bool clash = std::any_of(boxes.begin(), boxes.end(), [&](const Aabb& b) {
      return lo.x() < b.max().x() + kGap && b.min().x() < candidate.max().x() + kGap &&
             lo.y() < b.max().y() + kGap && b.min().y() < candidate.max().y() + kGap;
    });
    if (!clash) boxes.push_back(candidate);
  }

  // Colors are distinct per object; labels may repeat.
  std::vector<std::size_t> color_order(kColors.size());
  std::iota(color_order.begin(), color_order.end(), 0);
  for (std::size_t i = 0; i + 1 < color_order.size(); ++i) {
    std::swap(color_order[i], color_order[i + rng.below(color_order.size() - i)]);
  }

  PointCloud& cloud = bundle.cloud;
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    const auto& named = kColors[color_order[k % kColors.size()]];
    SynthObject obj;
    obj.id = static_cast<int>(k) + 1;
    obj.label = kLabels[rng.below(kLabels.size())];
    obj.color_name = named.name;
    obj.color = named.rgb;
    obj.nominal_box = boxes[k];

    Instance inst;
    inst.id = obj.id;
    inst.label = obj.label;
    const std::size_t first = cloud.size();
    sample_box(rng, boxes[k], static_cast<std::size_t>(spec.points_per_object),
               obj.color, cloud);
    inst.point_indices.resize(cloud.size() - first);
    std::iota(inst.point_indices.begin(), inst.point_indices.end(), first);
    inst.aabb = compute_instance_aabb(cloud, inst.point_indices);
    bundle.instances.push_back(std::move(inst));
    out.objects.push_back(std::move(obj));
  }

  // Floor (not under objects) and four walls.
  const double s = spec.surface_spacing;
  sample_grid(Vec3(0, 0, 0), Vec3(spec.room_x, 0, 0), Vec3(0, spec.room_y, 0), s,
              kFloorColor, cloud, boxes);
  const double h = spec.wall_height;
  sample_grid(Vec3(0, 0, 0), Vec3(spec.room_x, 0, 0), Vec3(0, 0, h), s,
              shade(kWallColor, 0.95), cloud);
  sample_grid(Vec3(0, spec.room_y, 0), Vec3(spec.room_x, 0, 0), Vec3(0, 0, h), s,
              shade(kWallColor, 0.9), cloud);
  sample_grid(Vec3(0, 0, 0), Vec3(0, spec.room_y, 0), Vec3(0, 0, h), s,
              shade(kWallColor, 1.0), cloud);
  sample_grid(Vec3(spec.room_x, 0, 0), Vec3(0, spec.room_y, 0), Vec3(0, 0, h), s,
              shade(kWallColor, 0.85), cloud);

  // Camera loop: an ellipse inside the room, every view aimed at the center.
  const Vec3 center(spec.room_x / 2, spec.room_y / 2, 0.3);
  const double ax = 0.38 * spec.room_x;
  const double ay = 0.38 * spec.room_y;
  const double phase = rng.uniform(0.0, 2.0 * M_PI);
  for (int i = 0; i < spec.frame_count; ++i) {
    const double a = phase + 2.0 * M_PI * i / spec.frame_count;
    const Vec3 eye(center.x() + ax * std::cos(a), center.y() + ay * std::sin(a),
                   spec.camera_height);
    bundle.frames.push_back({i + 1, "frames/" + std::to_string(i + 1) + ".png",
                             CameraPose::look_at(eye, center)});
  }

  out.frame_images.reserve(bundle.frames.size());
  for (const auto& frame : bundle.frames) {
    out.frame_images.push_back(render_frame_color(
        cloud, frame.pose, bundle.intrinsics, spec.splat_radius, Rgb{0, 0, 0}));
  }
  return out;
}

}  // namespace scenemark

// SPDX-License-Identifier: Apache-2.0

#include "scenemark/overlay.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "scenemark/errors.hpp"
#include "scenemark/rng.hpp"

namespace scenemark {
namespace {

// 5x7 bitmap glyphs, one row per byte, bit 4 = leftmost column.
constexpr int kGlyphW = 5;
constexpr int kGlyphH = 7;
constexpr std::array<std::array<std::uint8_t, kGlyphH>, 11> kGlyphs = {{
    {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},  // 0
    {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},  // 1
    {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},  // 2
    {0x1E, 0x01, 0x01, 0x0E, 0x01, 0x01, 0x1E},  // 3
    {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},  // 4
    {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},  // 5
    {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},  // 6
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
    {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},  // 8
    {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},  // 9
    {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00},  // -
}};

void fill_disk(RgbImage& img, const Vec2& center, double radius, Rgb color) {
  const int x0 = static_cast<int>(std::floor(center.x() - radius));
  const int x1 = static_cast<int>(std::ceil(center.x() + radius));
  const int y0 = static_cast<int>(std::floor(center.y() - radius));
  const int y1 = static_cast<int>(std::ceil(center.y() + radius));
  const double r2 = radius * radius;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (!img.contains(x, y)) continue;
      const double dx = x + 0.5 - center.x();
      const double dy = y + 0.5 - center.y();
      if (dx * dx + dy * dy <= r2) img.set(x, y, color);
    }
  }
}

void draw_label(RgbImage& img, const Vec2& center, const std::string& text,
                int scale, Rgb color) {
  const int gw = kGlyphW * scale;
  const int gh = kGlyphH * scale;
  const int total_w =
      static_cast<int>(text.size()) * gw + (static_cast<int>(text.size()) - 1) * scale;
  const int left = static_cast<int>(std::lround(center.x() - total_w / 2.0));
  const int top = static_cast<int>(std::lround(center.y() - gh / 2.0));
  for (std::size_t k = 0; k < text.size(); ++k) {
    const int glyph = text[k] == '-' ? 10 : text[k] - '0';
    const int gx = left + static_cast<int>(k) * (gw + scale);
    for (int row = 0; row < kGlyphH; ++row) {
      for (int col = 0; col < kGlyphW; ++col) {
        if (!(kGlyphs[glyph][row] & (0x10 >> col))) continue;
        for (int sy = 0; sy < scale; ++sy) {
          for (int sx = 0; sx < scale; ++sx) {
            const int x = gx + col * scale + sx;
            const int y = top + row * scale + sy;
            if (img.contains(x, y)) img.set(x, y, color);
          }
        }
      }
    }
  }
}

}  // namespace

void MarkerStyle::validate() const {
  if (!adaptive && !(radius_at_512 > 0.0)) {
    throw InvalidArgument("marker style: radius must be positive");
  }
  if (adaptive && !(adaptive_min > 0.0 && adaptive_min <= adaptive_max)) {
    throw InvalidArgument("marker style: bad adaptive radius bounds");
  }
  if (!(dropout_fraction >= 0.0 && dropout_fraction < 1.0)) {
    throw InvalidArgument("marker style: dropout fraction must be in [0, 1)");
  }
  if (text_height < 0) throw InvalidArgument("marker style: negative text size");
}

double marker_radius(const MarkerStyle& style, const PlacedMarker& marker,
                     int image_width) {
  if (style.adaptive) {
    const double r =
        style.adaptive_gain * std::sqrt(static_cast<double>(marker.point_count));
    return std::clamp(r, style.adaptive_min, style.adaptive_max);
  }
  return std::max(1.0, style.radius_at_512 * image_width / 512.0);
}

std::set<int> dropout_ids(std::span<const int> ids, double fraction,
                          std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw InvalidArgument("dropout fraction must be in [0, 1)");
  }
  std::vector<int> unique(ids.begin(), ids.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  const auto n_drop = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(unique.size()) + 1e-9));
  std::vector<std::pair<std::uint64_t, int>> keyed;
  keyed.reserve(unique.size());
  for (int id : unique) {
    keyed.emplace_back(
        mix64(seed ^ mix64(static_cast<std::uint64_t>(id))), id);
  }
  std::sort(keyed.begin(), keyed.end());
  std::set<int> dropped;
  for (std::size_t i = 0; i < n_drop; ++i) dropped.insert(keyed[i].second);
  return dropped;
}

OverlayResult overlay_markers(const RgbImage& image,
                              std::span<const PlacedMarker> markers,
                              const MarkerStyle& style) {
  style.validate();
  OverlayResult result{image, {}, {}, 0};
  if (markers.empty()) return result;

  std::vector<PlacedMarker> order(markers.begin(), markers.end());
  std::stable_sort(order.begin(), order.end(),
                   [](const PlacedMarker& a, const PlacedMarker& b) {
                     return a.object_id < b.object_id;
                   });
  std::vector<int> ids;
  ids.reserve(order.size());
  for (const auto& m : order) ids.push_back(m.object_id);
  const auto dropped =
      style.dropout_fraction > 0.0
          ? dropout_ids(ids, style.dropout_fraction, style.dropout_seed)
          : std::set<int>{};

  auto& img = result.image;
  for (const auto& m : order) {
    if (dropped.count(m.object_id)) {
      result.dropped_ids.push_back(m.object_id);
      continue;
    }
    if (!(m.pixel.x() >= 0.0 && m.pixel.x() < img.width() &&
          m.pixel.y() >= 0.0 && m.pixel.y() < img.height())) {
      ++result.skipped_out_of_bounds;
      continue;
    }
    const double r = marker_radius(style, m, img.width());
    fill_disk(img, m.pixel, r, style.outline);
    if (r > 1.5) fill_disk(img, m.pixel, r - 1.0, style.fill);
    const int scale =
        style.text_height > 0
            ? std::max(1, style.text_height / kGlyphH)
            : std::max(1, static_cast<int>(std::lround(1.2 * r / kGlyphH)));
    draw_label(img, m.pixel, std::to_string(m.object_id), scale, style.text);
    result.drawn_ids.push_back(m.object_id);
  }
  return result;
}

std::vector<PlacedMarker> place_frame_markers(std::span<const Marker2D> markers,
                                              double scale_x, double scale_y) {
  std::vector<PlacedMarker> out;
  out.reserve(markers.size());
  for (const auto& m : markers) {
    out.push_back({m.object_id,
                   Vec2(m.pixel.x() * scale_x, m.pixel.y() * scale_y),
                   m.visible_points});
  }
  return out;
}

std::vector<PlacedMarker> place_bev_markers(std::span<const Marker3D> markers,
                                            const BevImage& bev) {
  std::vector<PlacedMarker> out;
  out.reserve(markers.size());
  for (const auto& m : markers) {
    out.push_back({m.object_id, bev.to_pixel(m.world_xy), m.point_count});
  }
  return out;
}

}  // namespace scenemark

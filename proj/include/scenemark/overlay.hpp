// SPDX-License-Identifier: Apache-2.0
//
// Drawing numeric object markers onto rasters.

#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include "scenemark/image.hpp"
#include "scenemark/markers.hpp"

namespace scenemark {

struct MarkerStyle {
  /// Fixed radius at a 512-pixel-wide image; scaled with the image width.
  double radius_at_512 = 6.0;
  /// Radius grows with sqrt(point count), clamped to the bounds below.
  bool adaptive = false;
  double adaptive_gain = 0.25;
  double adaptive_min = 3.0;
  double adaptive_max = 14.0;
  Rgb fill{20, 20, 20};
  Rgb outline{255, 255, 255};
  Rgb text{255, 255, 255};
  /// Glyph height in pixels; 0 derives it from the radius.
  int text_height = 0;
  /// Fraction of markers left out, chosen deterministically from the seed.
  double dropout_fraction = 0.0;
  std::uint64_t dropout_seed = 0;

  void validate() const;
};

struct PlacedMarker {
  int object_id = 0;
  Vec2 pixel = Vec2::Zero();
  std::size_t point_count = 0;  // drives the adaptive radius
};

struct OverlayResult {
  RgbImage image;
  std::vector<int> drawn_ids;
  std::vector<int> dropped_ids;
  int skipped_out_of_bounds = 0;
};

/// Marker radius in pixels for an image `image_width` wide.
double marker_radius(const MarkerStyle& style, const PlacedMarker& marker,
                     int image_width);

/// Ids removed by dropout: floor(fraction * |ids|) of them, picked by a
/// seeded hash of each id so the choice does not depend on input order.
std::set<int> dropout_ids(std::span<const int> ids, double fraction,
                          std::uint64_t seed);

/// Draws every marker as a filled, outlined circle with its id centered on
/// top, in ascending id order. Markers outside the image are skipped and
/// counted; with no markers the input is returned unchanged.
OverlayResult overlay_markers(const RgbImage& image,
                              std::span<const PlacedMarker> markers,
                              const MarkerStyle& style = {});

std::vector<PlacedMarker> place_frame_markers(std::span<const Marker2D> markers,
                                              double scale_x, double scale_y);
std::vector<PlacedMarker> place_bev_markers(std::span<const Marker3D> markers,
                                            const BevImage& bev);

}  // namespace scenemark

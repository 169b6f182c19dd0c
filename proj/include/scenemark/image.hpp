// SPDX-License-Identifier: Apache-2.0
//
// 8-bit RGB raster, PNG I/O, resampling and tiling.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scenemark/types.hpp"

namespace scenemark {

class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {});

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  Rgb at(int x, int y) const {
    const auto* p = &data_[offset(x, y)];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) {
    auto* p = &data_[offset(x, y)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  std::span<const std::uint8_t> bytes() const { return data_; }
  std::span<std::uint8_t> bytes() { return data_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

std::string encode_png(const RgbImage& image);
RgbImage decode_png(std::string_view bytes);
void write_png(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_png(const std::filesystem::path& path);

/// Bilinear resampling with pixel-center alignment. Returns the input
/// unchanged when the size already matches.
RgbImage resize_bilinear(const RgbImage& image, int width, int height);

/// Output resolution and frame count of a rendering configuration.
enum class Preset { base, hd, hdm };

struct PresetInfo {
  int width;
  int height;
  int frames;
};

PresetInfo preset_info(Preset preset);
/// Throws InvalidArgument for anything but "base", "hd" or "hdm".
Preset parse_preset(std::string_view name);
std::string_view preset_name(Preset preset);

RgbImage resize_preset(const RgbImage& image, Preset preset);

struct StitchedImage {
  RgbImage pixels;
  int rows = 0;
  int cols = 0;
  int tile_width = 0;
  int tile_height = 0;
};

/// Row-major tiling: image k lands at row k / cols, column k % cols. All
/// tiles must share one size and there must be exactly rows * cols of them.
StitchedImage stitch(std::span<const RgbImage> images, int rows, int cols);

/// Grid used for n frames: 2 x 4 for eight frames, otherwise the largest
/// divisor r of n with 2 r^2 <= n gives r rows.
std::pair<int, int> default_grid(int frame_count);

}  // namespace scenemark

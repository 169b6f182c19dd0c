// SPDX-License-Identifier: Apache-2.0

#include "scenemark/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "scenemark/errors.hpp"

namespace scenemark {

RgbImage::RgbImage(int width, int height, Rgb fill)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) {
    throw InvalidArgument("image size must be non-negative");
  }
  data_.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill.r;
    data_[i + 1] = fill.g;
    data_[i + 2] = fill.b;
  }
}

std::string encode_png(const RgbImage& image) {
  if (image.empty()) throw InvalidArgument("encode_png: empty image");
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(image.width());
  desc.height = static_cast<png_uint_32>(image.height());
  desc.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  const auto* pixels = image.bytes().data();
  if (!png_image_write_to_memory(&desc, nullptr, &size, 0, pixels, 0, nullptr)) {
    throw IoError(std::string("png encode failed: ") + desc.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&desc, out.data(), &size, 0, pixels, 0,
                                 nullptr)) {
    throw IoError(std::string("png encode failed: ") + desc.message);
  }
  out.resize(size);
  return out;
}

RgbImage decode_png(std::string_view bytes) {
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&desc, bytes.data(), bytes.size())) {
    throw IoError(std::string("png decode failed: ") + desc.message);
  }
  desc.format = PNG_FORMAT_RGB;
  RgbImage image(static_cast<int>(desc.width), static_cast<int>(desc.height));
  if (!png_image_finish_read(&desc, nullptr, image.bytes().data(), 0,
                             nullptr)) {
    png_image_free(&desc);
    throw IoError(std::string("png decode failed: ") + desc.message);
  }
  return image;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  const std::string bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

RgbImage read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

RgbImage resize_bilinear(const RgbImage& image, int width, int height) {
  if (width <= 0 || height <= 0) {
    throw InvalidArgument("resize: target size must be positive");
  }
  if (image.empty()) throw InvalidArgument("resize: empty source image");
  if (image.width() == width && image.height() == height) return image;

  const double sx = static_cast<double>(image.width()) / width;
  const double sy = static_cast<double>(image.height()) / height;
  RgbImage out(width, height);
  const auto src = image.bytes();
  auto dst = out.bytes();
  const int w = image.width();

  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(image.height() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(w - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, w - 1);
      const double tx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double p00 = src[(static_cast<std::size_t>(y0) * w + x0) * 3 + c];
        const double p01 = src[(static_cast<std::size_t>(y0) * w + x1) * 3 + c];
        const double p10 = src[(static_cast<std::size_t>(y1) * w + x0) * 3 + c];
        const double p11 = src[(static_cast<std::size_t>(y1) * w + x1) * 3 + c];
        const double top = p00 + (p01 - p00) * tx;
        const double bottom = p10 + (p11 - p10) * tx;
        const double v = top + (bottom - top) * ty;
        dst[(static_cast<std::size_t>(y) * width + x) * 3 + c] =
            static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

PresetInfo preset_info(Preset preset) {
  switch (preset) {
    case Preset::base:
      return {128, 123, 8};
    case Preset::hd:
      return {512, 490, 8};
    case Preset::hdm:
      return {512, 490, 32};
  }
  throw InvalidArgument("unknown preset");
}

Preset parse_preset(std::string_view name) {
  if (name == "base") return Preset::base;
  if (name == "hd") return Preset::hd;
  if (name == "hdm") return Preset::hdm;
  throw InvalidArgument("unknown preset '" + std::string(name) +
                        "' (expected base, hd or hdm)");
}

std::string_view preset_name(Preset preset) {
  switch (preset) {
    case Preset::base:
      return "base";
    case Preset::hd:
      return "hd";
    case Preset::hdm:
      return "hdm";
  }
  return "?";
}

RgbImage resize_preset(const RgbImage& image, Preset preset) {
  const auto info = preset_info(preset);
  return resize_bilinear(image, info.width, info.height);
}

StitchedImage stitch(std::span<const RgbImage> images, int rows, int cols) {
  if (rows <= 0 || cols <= 0) {
    throw InvalidArgument("stitch: grid must be positive");
  }
  if (images.size() != static_cast<std::size_t>(rows) * cols) {
    throw InvalidArgument("stitch: " + std::to_string(images.size()) +
                          " images for a " + std::to_string(rows) + "x" +
                          std::to_string(cols) + " grid");
  }
  const int tw = images.front().width();
  const int th = images.front().height();
  for (const auto& img : images) {
    if (img.width() != tw || img.height() != th) {
      throw InvalidArgument("stitch: tiles must share one size");
    }
  }
  StitchedImage out{RgbImage(cols * tw, rows * th), rows, cols, tw, th};
  auto dst = out.pixels.bytes();
  const std::size_t row_bytes = static_cast<std::size_t>(tw) * 3;
  const std::size_t stride = static_cast<std::size_t>(cols) * tw * 3;
  for (std::size_t k = 0; k < images.size(); ++k) {
    const int r = static_cast<int>(k) / cols;
    const int c = static_cast<int>(k) % cols;
    const auto src = images[k].bytes();
    for (int y = 0; y < th; ++y) {
      std::copy_n(src.begin() + y * row_bytes, row_bytes,
                  dst.begin() + (static_cast<std::size_t>(r) * th + y) * stride +
                      static_cast<std::size_t>(c) * row_bytes);
    }
  }
  return out;
}

std::pair<int, int> default_grid(int frame_count) {
  if (frame_count <= 0) throw InvalidArgument("grid: frame count must be positive");
  int rows = 1;
  for (int r = 1; 2 * r * r <= frame_count; ++r) {
    if (frame_count % r == 0) rows = r;
  }
  return {rows, frame_count / rows};
}

}  // namespace scenemark

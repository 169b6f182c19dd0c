// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "scenemark/types.hpp"

namespace scenemark {

enum class PlyFormat { ascii, binary_little_endian };

/// Parses the `vertex` element of an ascii or binary little-endian PLY file.
/// Requires x, y, z and red, green, blue vertex properties; other properties
/// and elements are skipped. Integer colors are clamped to [0, 255]; float
/// colors are read as [0, 1] and scaled.
///
/// Throws ParseError carrying the byte offset of the failure.
PointCloud parse_ply(std::string_view bytes);

PointCloud read_ply(const std::filesystem::path& path);

/// Positions are written as doubles, so binary output round-trips exactly.
std::string serialize_ply(const PointCloud& cloud,
                          PlyFormat format = PlyFormat::binary_little_endian);

void write_ply(const std::filesystem::path& path, const PointCloud& cloud,
               PlyFormat format = PlyFormat::binary_little_endian);

}  // namespace scenemark

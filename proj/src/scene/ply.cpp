// SPDX-License-Identifier: Apache-2.0

#include "scenemark/ply.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "scenemark/errors.hpp"

namespace scenemark {
namespace {

enum class ScalarType { i8, u8, i16, u16, i32, u32, f32, f64 };

std::size_t type_size(ScalarType t) {
  switch (t) {
    case ScalarType::i8:
    case ScalarType::u8:
      return 1;
    case ScalarType::i16:
    case ScalarType::u16:
      return 2;
    case ScalarType::i32:
    case ScalarType::u32:
    case ScalarType::f32:
      return 4;
    case ScalarType::f64:
      return 8;
  }
  return 0;
}

bool is_float(ScalarType t) {
  return t == ScalarType::f32 || t == ScalarType::f64;
}

std::optional<ScalarType> parse_type(std::string_view name) {
  if (name == "char" || name == "int8") return ScalarType::i8;
  if (name == "uchar" || name == "uint8") return ScalarType::u8;
  if (name == "short" || name == "int16") return ScalarType::i16;
  if (name == "ushort" || name == "uint16") return ScalarType::u16;
  if (name == "int" || name == "int32") return ScalarType::i32;
  if (name == "uint" || name == "uint32") return ScalarType::u32;
  if (name == "float" || name == "float32") return ScalarType::f32;
  if (name == "double" || name == "float64") return ScalarType::f64;
  return std::nullopt;
}

struct Property {
  std::string name;
  ScalarType type = ScalarType::f32;
  bool is_list = false;
  ScalarType count_type = ScalarType::u8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct Header {
  PlyFormat format = PlyFormat::ascii;
  std::vector<Element> elements;
  std::size_t body_offset = 0;
};

std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) words.push_back(line.substr(start, i - start));
  }
  return words;
}

Header parse_header(std::string_view bytes) {
  Header header;
  std::size_t pos = 0;
  bool saw_format = false;
  bool first = true;
  while (true) {
    const std::size_t line_start = pos;
    const std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) {
      throw ParseError("ply: header not terminated by end_header",
                       bytes.size());
    }
    std::string_view line = bytes.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = nl + 1;

    if (first) {
      if (line != "ply") throw ParseError("ply: missing magic line", 0);
      first = false;
      continue;
    }
    const auto words = split_words(line);
    if (words.empty()) continue;
    const auto& key = words[0];
    if (key == "comment" || key == "obj_info") continue;
    if (key == "end_header") break;
    if (key == "format") {
      if (words.size() != 3) {
        throw ParseError("ply: malformed format line", line_start);
      }
      if (words[1] == "ascii") {
        header.format = PlyFormat::ascii;
      } else if (words[1] == "binary_little_endian") {
        header.format = PlyFormat::binary_little_endian;
      } else {
        throw ParseError("ply: unsupported format '" + std::string(words[1]) +
                             "'",
                         line_start);
      }
      saw_format = true;
    } else if (key == "element") {
      if (words.size() != 3) {
        throw ParseError("ply: malformed element line", line_start);
      }
      Element el;
      el.name = std::string(words[1]);
      const auto* end = words[2].data() + words[2].size();
      if (std::from_chars(words[2].data(), end, el.count).ptr != end) {
        throw ParseError("ply: bad element count", line_start);
      }
      header.elements.push_back(std::move(el));
    } else if (key == "property") {
      if (header.elements.empty()) {
        throw ParseError("ply: property before any element", line_start);
      }
      Property prop;
      if (words.size() == 5 && words[1] == "list") {
        const auto ct = parse_type(words[2]);
        const auto it = parse_type(words[3]);
        if (!ct || !it || is_float(*ct)) {
          throw ParseError("ply: bad list property types", line_start);
        }
        prop.is_list = true;
        prop.count_type = *ct;
        prop.type = *it;
        prop.name = std::string(words[4]);
      } else if (words.size() == 3) {
        const auto t = parse_type(words[1]);
        if (!t) {
          throw ParseError(
              "ply: unknown property type '" + std::string(words[1]) + "'",
              line_start);
        }
        prop.type = *t;
        prop.name = std::string(words[2]);
      } else {
        throw ParseError("ply: malformed property line", line_start);
      }
      header.elements.back().properties.push_back(std::move(prop));
    } else {
      throw ParseError("ply: unknown header keyword '" + std::string(key) + "'",
                       line_start);
    }
  }
  if (!saw_format) throw ParseError("ply: missing format line", 0);
  header.body_offset = pos;
  return header;
}

template <typename T>
T load_le(const char* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto* bytes = reinterpret_cast<unsigned char*>(&value);
    std::reverse(bytes, bytes + sizeof(T));
  }
  return value;
}

double load_scalar(const char* p, ScalarType t) {
  switch (t) {
    case ScalarType::i8:
      return load_le<std::int8_t>(p);
    case ScalarType::u8:
      return load_le<std::uint8_t>(p);
    case ScalarType::i16:
      return load_le<std::int16_t>(p);
    case ScalarType::u16:
      return load_le<std::uint16_t>(p);
    case ScalarType::i32:
      return load_le<std::int32_t>(p);
    case ScalarType::u32:
      return load_le<std::uint32_t>(p);
    case ScalarType::f32:
      return load_le<float>(p);
    case ScalarType::f64:
      return load_le<double>(p);
  }
  return 0.0;
}

std::uint8_t to_color(double value, ScalarType t) {
  const double scaled = is_float(t) ? std::round(value * 255.0) : value;
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

// Column of each required vertex property, or -1.
struct VertexLayout {
  std::array<int, 6> column{-1, -1, -1, -1, -1, -1};  // x y z r g b
};

VertexLayout resolve_layout(const Element& vertex, std::size_t offset) {
  static constexpr std::array<std::string_view, 6> kNames = {
      "x", "y", "z", "red", "green", "blue"};
  VertexLayout layout;
  for (std::size_t i = 0; i < vertex.properties.size(); ++i) {
    const auto& prop = vertex.properties[i];
    for (std::size_t k = 0; k < kNames.size(); ++k) {
      if (prop.name == kNames[k]) {
        if (prop.is_list) {
          throw ParseError("ply: vertex property '" + prop.name +
                               "' must be scalar",
                           offset);
        }
        layout.column[k] = static_cast<int>(i);
      }
    }
  }
  std::string missing;
  for (std::size_t k = 0; k < kNames.size(); ++k) {
    if (layout.column[k] < 0) {
      if (!missing.empty()) missing += ", ";
      missing += kNames[k];
    }
  }
  if (!missing.empty()) {
    throw ParseError("ply: vertex element missing properties: " + missing,
                     offset);
  }
  return layout;
}

void store_vertex(PointCloud& cloud, const VertexLayout& layout,
                  const Element& vertex, const std::vector<double>& row) {
  const auto& c = layout.column;
  cloud.positions.emplace_back(row[c[0]], row[c[1]], row[c[2]]);
  cloud.colors.push_back(Rgb{to_color(row[c[3]], vertex.properties[c[3]].type),
                             to_color(row[c[4]], vertex.properties[c[4]].type),
                             to_color(row[c[5]], vertex.properties[c[5]].type)});
}

PointCloud parse_binary(std::string_view bytes, const Header& header,
                        const Element& vertex, const VertexLayout& layout) {
  PointCloud cloud;
  cloud.positions.reserve(vertex.count);
  cloud.colors.reserve(vertex.count);
  std::vector<double> row(vertex.properties.size());
  std::size_t pos = header.body_offset;

  for (const auto& el : header.elements) {
    const bool is_vertex = (&el == &vertex);
    for (std::size_t n = 0; n < el.count; ++n) {
      const std::size_t record_start = pos;
      auto need = [&](std::size_t size) {
        if (pos + size > bytes.size()) {
          throw ParseError("ply: truncated payload in element '" + el.name +
                               "' record " + std::to_string(n) + " of " +
                               std::to_string(el.count),
                           record_start);
        }
      };
      for (std::size_t p = 0; p < el.properties.size(); ++p) {
        const auto& prop = el.properties[p];
        if (prop.is_list) {
          need(type_size(prop.count_type));
          const double count = load_scalar(bytes.data() + pos, prop.count_type);
          pos += type_size(prop.count_type);
          if (count < 0) throw ParseError("ply: negative list length", pos);
          const std::size_t len =
              static_cast<std::size_t>(count) * type_size(prop.type);
          need(len);
          pos += len;
        } else {
          need(type_size(prop.type));
          row[p] = load_scalar(bytes.data() + pos, prop.type);
          pos += type_size(prop.type);
        }
      }
      if (is_vertex) store_vertex(cloud, layout, vertex, row);
    }
    if (is_vertex) break;
  }
  return cloud;
}

PointCloud parse_ascii(std::string_view bytes, const Header& header,
                       const Element& vertex, const VertexLayout& layout) {
  PointCloud cloud;
  cloud.positions.reserve(vertex.count);
  cloud.colors.reserve(vertex.count);
  std::vector<double> row(vertex.properties.size());
  std::size_t pos = header.body_offset;

  auto next_number = [&](const Element& el, std::size_t n) -> double {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      ++pos;
    }
    if (pos >= bytes.size()) {
      throw ParseError("ply: truncated payload in element '" + el.name +
                           "' record " + std::to_string(n) + " of " +
                           std::to_string(el.count),
                       pos);
    }
    const char* first = bytes.data() + pos;
    const char* last = bytes.data() + bytes.size();
    if (*first == '+') ++first;
    double value = 0.0;
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc() ||
        (res.ptr != last && !std::isspace(static_cast<unsigned char>(*res.ptr)))) {
      throw ParseError("ply: malformed number", pos);
    }
    pos = static_cast<std::size_t>(res.ptr - bytes.data());
    return value;
  };

  for (const auto& el : header.elements) {
    const bool is_vertex = (&el == &vertex);
    for (std::size_t n = 0; n < el.count; ++n) {
      for (std::size_t p = 0; p < el.properties.size(); ++p) {
        const auto& prop = el.properties[p];
        if (prop.is_list) {
          const double count = next_number(el, n);
          for (std::size_t k = 0; k < static_cast<std::size_t>(count); ++k) {
            next_number(el, n);
          }
        } else {
          row[p] = next_number(el, n);
        }
      }
      if (is_vertex) store_vertex(cloud, layout, vertex, row);
    }
    if (is_vertex) break;
  }
  return cloud;
}

}  // namespace

PointCloud parse_ply(std::string_view bytes) {
  const Header header = parse_header(bytes);
  const auto it = std::find_if(header.elements.begin(), header.elements.end(),
                               [](const Element& e) { return e.name == "vertex"; });
  if (it == header.elements.end()) {
    throw ParseError("ply: no vertex element", header.body_offset);
  }
  const VertexLayout layout = resolve_layout(*it, header.body_offset);
  PointCloud cloud = header.format == PlyFormat::ascii
                         ? parse_ascii(bytes, header, *it, layout)
                         : parse_binary(bytes, header, *it, layout);
  for (std::size_t i = 0; i < cloud.positions.size(); ++i) {
    if (!cloud.positions[i].allFinite()) {
      throw ParseError("ply: vertex " + std::to_string(i) + " is not finite",
                       header.body_offset);
    }
  }
  return cloud;
}

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return parse_ply(bytes);
}

std::string serialize_ply(const PointCloud& cloud, PlyFormat format) {
  std::ostringstream out;
  out << "ply\n"
      << "format "
      << (format == PlyFormat::ascii ? "ascii" : "binary_little_endian")
      << " 1.0\n"
      << "element vertex " << cloud.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "end_header\n";
  if (format == PlyFormat::ascii) {
    out.precision(17);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const auto& p = cloud.positions[i];
      const auto& c = cloud.colors[i];
      out << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << int(c.r) << ' '
          << int(c.g) << ' ' << int(c.b) << '\n';
    }
    return out.str();
  }
  std::string body;
  body.reserve(cloud.size() * 27);
  auto put = [&body](const auto& value) {
    auto copy = value;
    auto* bytes = reinterpret_cast<char*>(&copy);
    if constexpr (std::endian::native == std::endian::big && sizeof(copy) > 1) {
      std::reverse(bytes, bytes + sizeof(copy));
    }
    body.append(bytes, sizeof(copy));
  };
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.positions[i];
    const auto& c = cloud.colors[i];
    put(p.x());
    put(p.y());
    put(p.z());
    put(c.r);
    put(c.g);
    put(c.b);
  }
  return out.str() + body;
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud,
               PlyFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const std::string bytes = serialize_ply(cloud, format);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace scenemark

#ifndef DENSIFY_IO_PLY_HPP
#define DENSIFY_IO_PLY_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "densify/common.hpp"
#include "densify/geometry/lidar_cloud.hpp"
#include "densify/io/binary_io.hpp"
#include "densify/sampling/sampling.hpp"

namespace densify {

struct PlyCloud {
  std::vector<std::array<float, 3>> positions;
  std::vector<Rgb8> colors;
  bool has_colors = false;
};

// Binary little-endian PLY with float32 positions and uint8 colors.
inline void write_ply(const SampledCloud& cloud,
                      const std::filesystem::path& path) {
  if (cloud.size() == 0)
    throw Error::data("empty-cloud", "refusing to write an empty PLY");
  std::string header =
      "ply\nformat binary_little_endian 1.0\nelement vertex " +
      std::to_string(cloud.size()) +
      "\nproperty float x\nproperty float y\nproperty float z\n"
      "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      "end_header\n";
  std::vector<char> bytes(header.size() + cloud.size() * 15);
  std::memcpy(bytes.data(), header.data(), header.size());
  char* out = bytes.data() + header.size();
  for (size_t i = 0; i < cloud.size(); ++i) {
    binary_io::store_le(cloud.positions[i][0], out);
    binary_io::store_le(cloud.positions[i][1], out + 4);
    binary_io::store_le(cloud.positions[i][2], out + 8);
    out[12] = static_cast<char>(cloud.colors[i].r);
    out[13] = static_cast<char>(cloud.colors[i].g);
    out[14] = static_cast<char>(cloud.colors[i].b);
    out += 15;
  }
  write_file_bytes(path, bytes);
}

namespace ply_detail {

struct Property {
  std::string type;
  std::string name;
};

inline size_t scalar_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8")
    return 1;
  if (type == "short" || type == "ushort" || type == "int16" ||
      type == "uint16")
    return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" ||
      type == "float" || type == "float32")
    return 4;
  if (type == "double" || type == "float64") return 8;
  return 0;
}

}  // namespace ply_detail

// Reads ascii or binary little-endian PLY vertex clouds: x/y/z as float or
// double, optional red/green/blue as uchar. Unknown scalar vertex properties
// are skipped; anything after the vertex element is ignored.
inline PlyCloud read_ply(const std::filesystem::path& path) {
  using ply_detail::Property;
  const std::vector<char> bytes = read_file_bytes(path);
  size_t pos = 0;
  auto read_line = [&]() -> std::string {
    size_t end = pos;
    while (end < bytes.size() && bytes[end] != '\n') ++end;
    if (end >= bytes.size())
      throw Error::data("ply-header", "unterminated header in " + path.string());
    std::string line(bytes.data() + pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = end + 1;
    return line;
  };

  if (read_line() != "ply")
    throw Error::data("ply-magic", path.string() + " is not a PLY file");
  std::string format;
  size_t vertex_count = 0;
  std::vector<Property> vertex_props;
  bool in_vertex = false, saw_vertex = false;
  for (;;) {
    const std::string line = read_line();
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "comment" || word == "obj_info" || word.empty()) continue;
    if (word == "format") {
      ss >> format;
    } else if (word == "element") {
      std::string name;
      size_t count = 0;
      ss >> name >> count;
      in_vertex = name == "vertex";
      if (in_vertex) {
        vertex_count = count;
        saw_vertex = true;
      }
    } else if (word == "property") {
      if (!in_vertex) continue;
      std::string type, name;
      ss >> type;
      if (type == "list")
        throw Error::data("ply-list",
                          "list properties on vertices are not supported: " +
                              path.string());
      ss >> name;
      vertex_props.push_back({type, name});
    } else if (word == "end_header") {
      break;
    } else {
      throw Error::data("ply-header",
                        "unrecognized header line '" + line + "' in " +
                            path.string());
    }
  }
  if (!saw_vertex)
    throw Error::data("ply-no-vertex", "no vertex element in " + path.string());
  const bool ascii = format == "ascii";
  if (!ascii && format != "binary_little_endian")
    throw Error::data("ply-format",
                      "unsupported PLY format '" + format + "' in " +
                          path.string());

  int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
  std::vector<size_t> offsets(vertex_props.size(), 0);
  size_t stride = 0;
  for (size_t i = 0; i < vertex_props.size(); ++i) {
    const auto& p = vertex_props[i];
    const size_t sz = ply_detail::scalar_size(p.type);
    if (sz == 0)
      throw Error::data("ply-type",
                        "unsupported property type '" + p.type + "' in " +
                            path.string());
    offsets[i] = stride;
    stride += sz;
    if (p.name == "x") ix = static_cast<int>(i);
    if (p.name == "y") iy = static_cast<int>(i);
    if (p.name == "z") iz = static_cast<int>(i);
    if (p.name == "red") ir = static_cast<int>(i);
    if (p.name == "green") ig = static_cast<int>(i);
    if (p.name == "blue") ib = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0)
    throw Error::data("ply-xyz", "missing x/y/z properties in " + path.string());
  auto is_float = [&](int i) {
    const auto& t = vertex_props[i].type;
    return t == "float" || t == "float32";
  };
  auto is_double = [&](int i) {
    const auto& t = vertex_props[i].type;
    return t == "double" || t == "float64";
  };
  auto is_uchar = [&](int i) {
    const auto& t = vertex_props[i].type;
    return t == "uchar" || t == "uint8";
  };
  for (int i : {ix, iy, iz})
    if (!is_float(i) && !is_double(i))
      throw Error::data("ply-type", "x/y/z must be float or double in " +
                                        path.string());
  const bool with_color = ir >= 0 && ig >= 0 && ib >= 0;
  if (with_color)
    for (int i : {ir, ig, ib})
      if (!is_uchar(i))
        throw Error::data("ply-type",
                          "colors must be uchar in " + path.string());

  PlyCloud cloud;
  cloud.has_colors = with_color;
  cloud.positions.resize(vertex_count);
  if (with_color) cloud.colors.resize(vertex_count);

  if (ascii) {
    std::istringstream body(std::string(bytes.data() + pos, bytes.size() - pos));
    std::vector<double> row(vertex_props.size());
    for (size_t v = 0; v < vertex_count; ++v) {
      for (size_t i = 0; i < vertex_props.size(); ++i)
        if (!(body >> row[i]))
          throw Error::data("ply-truncated",
                            "truncated vertex data in " + path.string());
      cloud.positions[v] = {static_cast<float>(row[ix]),
                            static_cast<float>(row[iy]),
                            static_cast<float>(row[iz])};
      if (with_color)
        cloud.colors[v] = {static_cast<uint8_t>(row[ir]),
                           static_cast<uint8_t>(row[ig]),
                           static_cast<uint8_t>(row[ib])};
    }
  } else {
    if (bytes.size() - pos < stride * vertex_count)
      throw Error::data("ply-truncated",
                        "truncated vertex data in " + path.string());
    auto scalar = [&](const char* base, int i) -> double {
      return is_float(i)
                 ? static_cast<double>(binary_io::load_le<float>(base + offsets[i]))
                 : binary_io::load_le<double>(base + offsets[i]);
    };
    for (size_t v = 0; v < vertex_count; ++v) {
      const char* base = bytes.data() + pos + v * stride;
      if (is_float(ix) && is_float(iy) && is_float(iz)) {
        cloud.positions[v] = {binary_io::load_le<float>(base + offsets[ix]),
                              binary_io::load_le<float>(base + offsets[iy]),
                              binary_io::load_le<float>(base + offsets[iz])};
      } else {
        cloud.positions[v] = {static_cast<float>(scalar(base, ix)),
                              static_cast<float>(scalar(base, iy)),
                              static_cast<float>(scalar(base, iz))};
      }
      if (with_color)
        cloud.colors[v] = {static_cast<uint8_t>(base[offsets[ir]]),
                           static_cast<uint8_t>(base[offsets[ig]]),
                           static_cast<uint8_t>(base[offsets[ib]])};
    }
  }
  return cloud;
}

inline SampledCloud read_ply_as_sampled(const std::filesystem::path& path) {
  PlyCloud ply = read_ply(path);
  SampledCloud cloud;
  cloud.positions = std::move(ply.positions);
  cloud.colors = ply.has_colors
                     ? std::move(ply.colors)
                     : std::vector<Rgb8>(cloud.positions.size(), Rgb8{});
  cloud.provenance.resize(cloud.positions.size());
  return cloud;
}

inline LidarCloud read_lidar_ply(const std::filesystem::path& path) {
  PlyCloud ply = read_ply(path);
  LidarCloud cloud;
  cloud.points.reserve(ply.positions.size());
  for (const auto& p : ply.positions)
    cloud.points.emplace_back(p[0], p[1], p[2]);
  if (ply.has_colors) cloud.colors = std::move(ply.colors);
  cloud.validate();
  return cloud;
}

// Writes a LiDAR-style cloud (e.g. synthetic scans). Positions are stored as
// float32, matching what the pipeline reads back.
inline void write_lidar_ply(const LidarCloud& cloud,
                            const std::filesystem::path& path) {
  cloud.validate();
  SampledCloud tmp;
  tmp.positions.reserve(cloud.size());
  for (const auto& p : cloud.points)
    tmp.positions.push_back({static_cast<float>(p.x()),
                             static_cast<float>(p.y()),
                             static_cast<float>(p.z())});
  tmp.colors = cloud.has_colors()
                   ? cloud.colors
                   : std::vector<Rgb8>(cloud.size(), Rgb8{128, 128, 128});
  tmp.provenance.resize(cloud.size());
  write_ply(tmp, path);
}

}  // namespace densify

#endif  // DENSIFY_IO_PLY_HPP

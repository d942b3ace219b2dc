#ifndef DENSIFY_IO_PFM_HPP
#define DENSIFY_IO_PFM_HPP

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "densify/common.hpp"
#include "densify/io/binary_io.hpp"

namespace densify {

// Portable float map, single channel ("Pf"). Rows are stored bottom-to-top;
// the sign of the scale field encodes byte order (negative = little-endian)
// and its magnitude multiplies the samples.
inline Raster<float> read_pfm(const std::filesystem::path& path) {
  const std::vector<char> bytes = read_file_bytes(path);
  size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < bytes.size() &&
           std::isspace(static_cast<unsigned char>(bytes[pos])))
      ++pos;
    const size_t start = pos;
    while (pos < bytes.size() &&
           !std::isspace(static_cast<unsigned char>(bytes[pos])))
      ++pos;
    if (start == pos)
      throw Error::data("pfm-truncated", "truncated PFM header in " +
                                             path.string());
    return std::string(bytes.data() + start, pos - start);
  };

  const std::string magic = next_token();
  if (magic == "PF")
    throw Error::data("pfm-color",
                      "color PFM is not supported for depth: " + path.string());
  if (magic != "Pf")
    throw Error::data("pfm-magic", "not a PFM file: " + path.string());
  int width = 0, height = 0;
  double scale = 0;
  try {
    width = std::stoi(next_token());
    height = std::stoi(next_token());
    scale = std::stod(next_token());
  } catch (const std::exception&) {
    throw Error::data("pfm-header", "malformed PFM header in " + path.string());
  }
  if (width < 1 || height < 1 || scale == 0)
    throw Error::data("pfm-header", "malformed PFM header in " + path.string());
  ++pos;  // single whitespace byte after the scale terminates the header

  const bool little_endian = scale < 0;
  const double factor = std::abs(scale);
  const size_t need = static_cast<size_t>(width) * height * 4;
  if (bytes.size() - pos < need)
    throw Error::data("pfm-truncated", "truncated PFM data in " + path.string());

  Raster<float> out(width, height);
  for (int y = 0; y < height; ++y) {
    const int src_row = height - 1 - y;  // bottom-to-top storage
    const char* row = bytes.data() + pos + static_cast<size_t>(src_row) * width * 4;
    for (int x = 0; x < width; ++x) {
      const float v = little_endian ? binary_io::load_le<float>(row + 4 * x)
                                    : binary_io::load_be<float>(row + 4 * x);
      out.at(x, y) = factor == 1.0 ? v : static_cast<float>(v * factor);
    }
  }
  return out;
}

inline void write_pfm(const Raster<float>& raster,
                      const std::filesystem::path& path) {
  const std::string header = "Pf\n" + std::to_string(raster.width()) + " " +
                             std::to_string(raster.height()) + "\n-1.0\n";
  std::vector<char> bytes(header.size() +
                          raster.size() * 4);
  std::memcpy(bytes.data(), header.data(), header.size());
  char* data = bytes.data() + header.size();
  for (int y = 0; y < raster.height(); ++y) {
    const int dst_row = raster.height() - 1 - y;
    for (int x = 0; x < raster.width(); ++x)
      binary_io::store_le(raster.at(x, y),
                          data + (static_cast<size_t>(dst_row) * raster.width() + x) * 4);
  }
  write_file_bytes(path, bytes);
}

}  // namespace densify

#endif  // DENSIFY_IO_PFM_HPP

#ifndef DENSIFY_IO_BINARY_IO_HPP
#define DENSIFY_IO_BINARY_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <filesystem>
#include <string>
#include <vector>

#include "densify/common.hpp"

namespace densify {

namespace binary_io {

template <typename T>
void store_le(const T& value, char* out) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::memcpy(out, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(out, out + sizeof(T));
}

template <typename T>
T load_le(const char* in) {
  static_assert(std::is_trivially_copyable_v<T>);
  char buf[sizeof(T)];
  std::memcpy(buf, in, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(buf, buf + sizeof(T));
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

template <typename T>
T load_be(const char* in) {
  char buf[sizeof(T)];
  std::memcpy(buf, in, sizeof(T));
  if constexpr (std::endian::native == std::endian::little)
    std::reverse(buf, buf + sizeof(T));
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace binary_io

inline std::vector<char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw Error::data("missing-file", "cannot open " + path.string());
  f.seekg(0, std::ios::end);
  const std::streamoff n = f.tellg();
  f.seekg(0, std::ios::beg);
  std::vector<char> bytes(static_cast<size_t>(n));
  if (n > 0) f.read(bytes.data(), n);
  if (!f)
    throw Error::data("read-failed", "failed reading " + path.string());
  return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path,
                             const std::vector<char>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f)
    throw Error::data("write-failed", "cannot open " + path.string() +
                                           " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f)
    throw Error::data("write-failed", "failed writing " + path.string());
}

}  // namespace densify

#endif  // DENSIFY_IO_BINARY_IO_HPP

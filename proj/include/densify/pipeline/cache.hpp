#ifndef DENSIFY_PIPELINE_CACHE_HPP
#define DENSIFY_PIPELINE_CACHE_HPP

#include <openssl/evp.h>

#include <atomic>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "densify/common.hpp"
#include "densify/io/binary_io.hpp"

namespace densify {

// Streaming SHA-256 used for content-addressed cache keys.
class ContentHash {
 public:
  ContentHash() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1)
      throw Error::internal("hash-init", "SHA-256 init failed");
  }
  ~ContentHash() {
    if (ctx_) EVP_MD_CTX_free(ctx_);
  }
  ContentHash(const ContentHash&) = delete;
  ContentHash& operator=(const ContentHash&) = delete;

  ContentHash& add_bytes(const void* data, size_t n) {
    if (EVP_DigestUpdate(ctx_, data, n) != 1)
      throw Error::internal("hash-update", "SHA-256 update failed");
    return *this;
  }
  ContentHash& add(std::span<const char> bytes) {
    return add_bytes(bytes.data(), bytes.size());
  }
  ContentHash& add(const std::string& s) {
    add_pod(static_cast<uint64_t>(s.size()));
    return add_bytes(s.data(), s.size());
  }
  template <typename T>
  ContentHash& add_pod(const T& value) {
    static_assert(std::is_trivially_copyable_v<T>);
    char buf[sizeof(T)];
    binary_io::store_le(value, buf);
    return add_bytes(buf, sizeof(T));
  }

  std::string hex() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_, digest, &len) != 1)
      throw Error::internal("hash-final", "SHA-256 final failed");
    static const char* k = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
      out.push_back(k[digest[i] >> 4]);
      out.push_back(k[digest[i] & 0xf]);
    }
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

// Content-addressed stage cache: one file per (stage, key). Writes go
// through a temp file plus rename so concurrent workers never observe a
// partial entry.
class StageCache {
 public:
  explicit StageCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  std::optional<std::vector<char>> get(const std::string& stage,
                                       const std::string& key) const {
    const auto path = entry_path(stage, key);
    if (!std::filesystem::exists(path)) {
      ++misses_;
      return std::nullopt;
    }
    ++hits_;
    return read_file_bytes(path);
  }

  void put(const std::string& stage, const std::string& key,
           const std::vector<char>& bytes) const {
    const auto path = entry_path(stage, key);
    const auto tmp = path.string() + ".tmp." +
                     std::to_string(
                         std::hash<std::thread::id>{}(std::this_thread::get_id()));
    write_file_bytes(tmp, bytes);
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
      std::filesystem::remove(tmp, ec);
      if (!std::filesystem::exists(path))
        throw Error::data("cache-write", "cannot publish cache entry " +
                                             path.string());
    }
  }

  int64_t hits() const { return hits_; }
  int64_t misses() const { return misses_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path entry_path(const std::string& stage,
                                   const std::string& key) const {
    return dir_ / (stage + "-" + key + ".bin");
  }

  std::filesystem::path dir_;
  mutable std::atomic<int64_t> hits_{0};
  mutable std::atomic<int64_t> misses_{0};
};

// Minimal binary writer/reader for cache payloads. Little-endian, versioned
// by the stage key, so layouts only have to be self-consistent.
class BlobWriter {
 public:
  template <typename T>
  void pod(const T& value) {
    static_assert(std::is_trivially_copyable_v<T>);
    const size_t at = bytes_.size();
    bytes_.resize(at + sizeof(T));
    binary_io::store_le(value, bytes_.data() + at);
  }
  template <typename T>
  void pod_vector(const std::vector<T>& v) {
    pod(static_cast<uint64_t>(v.size()));
    for (const T& x : v) pod(x);
  }
  void raw(const void* data, size_t n) {
    const size_t at = bytes_.size();
    bytes_.resize(at + n);
    std::memcpy(bytes_.data() + at, data, n);
  }
  std::vector<char> take() { return std::move(bytes_); }

 private:
  std::vector<char> bytes_;
};

class BlobReader {
 public:
  explicit BlobReader(const std::vector<char>& bytes) : bytes_(bytes) {}

  template <typename T>
  T pod() {
    if (pos_ + sizeof(T) > bytes_.size())
      throw Error::data("cache-corrupt", "truncated cache entry");
    T v = binary_io::load_le<T>(bytes_.data() + pos_);
    pos_ += sizeof(T);
    return v;
  }
  template <typename T>
  std::vector<T> pod_vector() {
    const uint64_t n = pod<uint64_t>();
    std::vector<T> v;
    v.reserve(n);
    for (uint64_t i = 0; i < n; ++i) v.push_back(pod<T>());
    return v;
  }
  void raw(void* out, size_t n) {
    if (pos_ + n > bytes_.size())
      throw Error::data("cache-corrupt", "truncated cache entry");
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }

 private:
  const std::vector<char>& bytes_;
  size_t pos_ = 0;
};

}  // namespace densify

#endif  // DENSIFY_PIPELINE_CACHE_HPP

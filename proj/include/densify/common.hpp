#ifndef DENSIFY_COMMON_HPP
#define DENSIFY_COMMON_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace densify {

// Error taxonomy shared by the library and the CLI. `kind` maps onto the
// process exit code (config=2, data=3, internal=4); `code` is a short
// machine-readable tag for errors callers may want to catch selectively.
enum class ErrorKind { config, data, internal };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const { return kind_; }
  const std::string& code() const { return code_; }

  static Error config(const std::string& code, const std::string& msg) {
    return Error(ErrorKind::config, code, msg);
  }
  static Error data(const std::string& code, const std::string& msg) {
    return Error(ErrorKind::data, code, msg);
  }
  static Error internal(const std::string& code, const std::string& msg) {
    return Error(ErrorKind::internal, code, msg);
  }

 private:
  ErrorKind kind_;
  std::string code_;
};

// Dense row-major raster. (0,0) is the top-left pixel, x grows rightward.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<size_t>(width) * height, fill) {
    if (width < 1 || height < 1)
      throw Error::internal("raster-dims", "raster dimensions must be >= 1");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& at(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }
  const T& at(int x, int y) const {
    return data_[static_cast<size_t>(y) * width_ + x];
  }
  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  bool contains(int x, int y) const {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  bool operator==(const Raster& o) const {
    return width_ == o.width_ && height_ == o.height_ && data_ == o.data_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

struct Rgb8 {
  uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb8&) const = default;
};

using ImageU8 = Raster<Rgb8>;

// Median with the even-count convention: mean of the two middle elements.
// Mutates its argument (partial sort).
inline double median_inplace(std::vector<double>& v) {
  if (v.empty())
    throw Error::internal("empty-median", "median of empty sequence");
  const size_t n = v.size();
  const size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (n % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

// splitmix64: tiny deterministic generator used for seed derivation and for
// reproducible sampling. Fully specified, so outputs are stable across
// platforms (std::shuffle would not be).
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform integer in [0, n) via rejection sampling.
  uint64_t bounded(uint64_t n) {
    if (n == 0) throw Error::internal("rng-bound", "bounded(0) is undefined");
    const uint64_t limit =
        std::numeric_limits<uint64_t>::max() -
        std::numeric_limits<uint64_t>::max() % n;
    uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % n;
  }

  // Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  uint64_t state_;
};

inline uint64_t hash_combine(uint64_t seed, uint64_t value) {
  SplitMix64 rng(seed ^ (value + 0x9e3779b97f4a7c15ull));
  return rng.next();
}

inline uint64_t hash_string(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

constexpr bool binary_is_little_endian() {
  return std::endian::native == std::endian::little;
}

// |a - b| measured in units-in-the-last-place of `ref`.
inline double ulp_distance(float a, float b, float ref) {
  const float u = std::nextafter(std::abs(ref), std::numeric_limits<float>::max()) -
                  std::abs(ref);
  if (u <= 0.0f) return a == b ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(static_cast<double>(a) - static_cast<double>(b)) / u;
}

}  // namespace densify

#endif  // DENSIFY_COMMON_HPP

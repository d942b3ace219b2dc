#ifndef DENSIFY_REFINE_DEPTH_MAP_HPP
#define DENSIFY_REFINE_DEPTH_MAP_HPP

#include <cmath>
#include <string>

#include "densify/common.hpp"

namespace densify {

// Stage of the refinement pipeline a depth map belongs to. Operations check
// this tag and reject out-of-order inputs.
enum class DepthStage { raw, global, local };

inline const char* to_string(DepthStage s) {
  switch (s) {
    case DepthStage::raw: return "raw";
    case DepthStage::global: return "global";
    case DepthStage::local: return "local";
  }
  return "?";
}

// Per-pixel depth in meters; 0 marks an invalid pixel.
struct DepthMap {
  Raster<float> values;
  DepthStage stage = DepthStage::raw;

  int width() const { return values.width(); }
  int height() const { return values.height(); }
  bool valid_at(int x, int y) const { return values.at(x, y) > 0.0f; }

  size_t valid_count() const {
    size_t c = 0;
    for (size_t i = 0; i < values.size(); ++i)
      if (values[i] > 0.0f) ++c;
    return c;
  }

  void validate() const {
    for (size_t i = 0; i < values.size(); ++i) {
      const float v = values[i];
      if (!std::isfinite(v) || v < 0.0f)
        throw Error::data("bad-depth-value",
                          "depth values must be finite and >= 0");
    }
  }
};

inline void require_stage(const DepthMap& d, DepthStage expected,
                          const char* op) {
  if (d.stage != expected)
    throw Error::internal("stage-order",
                          std::string(op) + " expects a " +
                              to_string(expected) + " depth map, got " +
                              to_string(d.stage));
}

}  // namespace densify

#endif  // DENSIFY_REFINE_DEPTH_MAP_HPP

#ifndef DENSIFY_REFINE_GLOBAL_SCALE_HPP
#define DENSIFY_REFINE_GLOBAL_SCALE_HPP

#include <cmath>
#include <optional>
#include <vector>

#include "densify/common.hpp"
#include "densify/geometry/anchor_map.hpp"
#include "densify/refine/depth_map.hpp"

namespace densify {

// Median of anchor/estimate depth ratios over pixels that carry both an
// anchor and a valid estimate. nullopt when no such pixel exists.
inline std::optional<double> compute_global_scale(const AnchorMap& anchors,
                                                  const DepthMap& depth) {
  if (anchors.depth.width() != depth.width() ||
      anchors.depth.height() != depth.height())
    throw Error::internal("dim-mismatch",
                          "anchor map and depth map dimensions disagree");
  std::vector<double> ratios;
  ratios.reserve(static_cast<size_t>(anchors.anchor_count));
  for (size_t i = 0; i < depth.values.size(); ++i) {
    const float a = anchors.depth[i];
    const float d = depth.values[i];
    if (a > 0.0f && d > 0.0f)
      ratios.push_back(static_cast<double>(a) / static_cast<double>(d));
  }
  if (ratios.empty()) return std::nullopt;
  return median_inplace(ratios);
}

struct GlobalScaleResult {
  DepthMap scaled;          // stage = global (or raw passthrough on no_anchors)
  int iterations = 0;       // median evaluations performed
  bool converged = false;
  double total_factor = 1;  // product of applied factors
  bool no_anchors = false;
};

// Iterative global rescaling: multiply the whole map by the median ratio
// until the ratio settles at 1 (|g - 1| < tol) or max_iter passes run. A pure
// median converges after one applied factor; the loop cap mirrors the
// documented bound and guards later per-iteration filtering.
inline GlobalScaleResult iterate_global_scaling(const AnchorMap& anchors,
                                                const DepthMap& raw,
                                                double tol = 1e-6,
                                                int max_iter = 5) {
  require_stage(raw, DepthStage::raw, "iterate_global_scaling");
  if (max_iter < 1)
    throw Error::config("bad-max-iter", "max_iter must be >= 1");
  if (!(tol > 0)) throw Error::config("bad-tol", "tol must be > 0");

  GlobalScaleResult result;
  result.scaled = raw;
  for (int t = 0; t < max_iter; ++t) {
    const auto g = compute_global_scale(anchors, result.scaled);
    if (!g) {
      // Scaling never invalidates pixels, so this can only happen up front.
      result.no_anchors = true;
      return result;  // stage stays raw; caller skips the frame
    }
    ++result.iterations;
    if (std::abs(*g - 1.0) < tol) {
      result.converged = true;
      break;
    }
    for (size_t i = 0; i < result.scaled.values.size(); ++i)
      if (result.scaled.values[i] > 0.0f)
        result.scaled.values[i] =
            static_cast<float>(result.scaled.values[i] * *g);
    result.total_factor *= *g;
  }
  result.scaled.stage = DepthStage::global;
  return result;
}

}  // namespace densify

#endif  // DENSIFY_REFINE_GLOBAL_SCALE_HPP

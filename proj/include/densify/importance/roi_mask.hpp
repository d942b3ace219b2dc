#ifndef DENSIFY_IMPORTANCE_ROI_MASK_HPP
#define DENSIFY_IMPORTANCE_ROI_MASK_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "densify/common.hpp"
#include "densify/geometry/anchor_map.hpp"
#include "densify/geometry/camera.hpp"
#include "densify/geometry/lidar_cloud.hpp"

namespace densify {

struct RoiMask {
  Raster<uint8_t> mask;      // nonzero = ROI
  double threshold_ratio = 1.0;
  int dilation_radius = 4;
  bool external = false;     // user-supplied override

  int64_t roi_pixels() const {
    int64_t c = 0;
    for (size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) ++c;
    return c;
  }
};

// Union of dilation disks around the projections of ROI points that are
// HPR-visible in this frame. `roi` and `visible` are ascending index lists.
inline RoiMask project_roi_mask(const LidarCloud& cloud,
                                std::span<const int> roi,
                                std::span<const int> visible, const Pose& pose,
                                const Intrinsics& intr, int dilation_radius) {
  if (roi.empty())
    throw Error::internal("empty-roi-set",
                          "project_roi_mask requires a non-empty ROI set");
  if (dilation_radius < 0)
    throw Error::config("bad-dilation", "dilation radius must be >= 0");

  RoiMask out;
  out.mask = Raster<uint8_t>(intr.width, intr.height, 0);
  out.dilation_radius = dilation_radius;

  std::vector<int> roi_visible;
  roi_visible.reserve(std::min(roi.size(), visible.size()));
  std::set_intersection(roi.begin(), roi.end(), visible.begin(), visible.end(),
                        std::back_inserter(roi_visible));

  const int r = dilation_radius;
  const int r_sq = r * r;
  for (int idx : roi_visible) {
    const auto proj = project_point(cloud.points[idx], pose, intr);
    if (!proj) continue;
    const int px = static_cast<int>(std::lround(proj->uv.x()));
    const int py = static_cast<int>(std::lround(proj->uv.y()));
    if (!out.mask.contains(px, py)) continue;
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx)
        if (dx * dx + dy * dy <= r_sq && out.mask.contains(px + dx, py + dy))
          out.mask.at(px + dx, py + dy) = 255;
  }
  return out;
}

// User-supplied per-frame override; replaces the computed mask.
inline RoiMask ingest_external_mask(const Raster<uint8_t>& raster, int width,
                                    int height) {
  if (raster.width() != width || raster.height() != height)
    throw Error::data("mask-dims",
                      "external mask dimensions do not match the frame");
  RoiMask out;
  out.mask = raster;
  out.external = true;
  return out;
}

}  // namespace densify

#endif  // DENSIFY_IMPORTANCE_ROI_MASK_HPP

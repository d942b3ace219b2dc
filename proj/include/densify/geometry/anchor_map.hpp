#ifndef DENSIFY_GEOMETRY_ANCHOR_MAP_HPP
#define DENSIFY_GEOMETRY_ANCHOR_MAP_HPP

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <vector>

#include "densify/common.hpp"
#include "densify/geometry/camera.hpp"
#include "densify/geometry/hpr.hpp"
#include "densify/geometry/lidar_cloud.hpp"

namespace densify {

// Sparse raster of projected, HPR-visible LiDAR depths for one frame.
// depth == 0 marks "no anchor"; source holds the originating cloud index
// (-1 where empty). The indicator raster of the formulation is depth > 0.
struct AnchorMap {
  Raster<float> depth;
  Raster<int32_t> source;
  int anchor_count = 0;
  bool empty_frame = false;        // no visible point landed in the frustum
  bool hpr_degenerate = false;     // HPR fell back to the full cloud

  bool indicator(int x, int y) const { return depth.at(x, y) > 0.0f; }
};

// One anchor as an entry of the frame's anchor list (row-major raster order;
// the position in that list is the anchor index used by clustering).
struct AnchorPixel {
  int x = 0, y = 0;
  float depth = 0;
  int32_t source = -1;
};

// Rasterize the given visible subset with nearest-pixel rounding and a
// z-buffer (smaller depth wins; equal depths keep the smaller cloud index).
inline AnchorMap rasterize_anchor_map(const LidarCloud& cloud,
                                      std::span<const int> visible,
                                      const Pose& pose,
                                      const Intrinsics& intr) {
  AnchorMap map;
  map.depth = Raster<float>(intr.width, intr.height, 0.0f);
  map.source = Raster<int32_t>(intr.width, intr.height, -1);
  for (int idx : visible) {
    const auto proj = project_point(cloud.points[idx], pose, intr);
    if (!proj) continue;
    const int px = static_cast<int>(std::lround(proj->uv.x()));
    const int py = static_cast<int>(std::lround(proj->uv.y()));
    if (!map.depth.contains(px, py)) continue;
    const float z = static_cast<float>(proj->depth);
    const float cur = map.depth.at(px, py);
    if (cur > 0.0f &&
        (cur < z || (cur == z && map.source.at(px, py) < idx)))
      continue;
    map.depth.at(px, py) = z;
    map.source.at(px, py) = idx;
  }
  for (size_t i = 0; i < map.depth.size(); ++i)
    if (map.depth[i] > 0.0f) ++map.anchor_count;
  map.empty_frame = map.anchor_count == 0;
  return map;
}

inline AnchorMap build_anchor_map(const LidarCloud& cloud, const Pose& pose,
                                  const Intrinsics& intr,
                                  double radius_exponent = 2.0) {
  const HprResult hpr =
      hidden_point_removal(cloud, pose.camera_center(), radius_exponent);
  AnchorMap map = rasterize_anchor_map(cloud, hpr.visible, pose, intr);
  map.hpr_degenerate = hpr.degenerate_fallback;
  return map;
}

// Anchor list in row-major raster order.
inline std::vector<AnchorPixel> collect_anchors(const AnchorMap& map) {
  std::vector<AnchorPixel> anchors;
  anchors.reserve(map.anchor_count);
  for (int y = 0; y < map.depth.height(); ++y)
    for (int x = 0; x < map.depth.width(); ++x)
      if (map.depth.at(x, y) > 0.0f)
        anchors.push_back({x, y, map.depth.at(x, y), map.source.at(x, y)});
  return anchors;
}

}  // namespace densify

#endif  // DENSIFY_GEOMETRY_ANCHOR_MAP_HPP

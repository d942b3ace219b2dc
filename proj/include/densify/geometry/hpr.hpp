#ifndef DENSIFY_GEOMETRY_HPR_HPP
#define DENSIFY_GEOMETRY_HPR_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "densify/common.hpp"
#include "densify/geometry/convex_hull.hpp"
#include "densify/geometry/lidar_cloud.hpp"

namespace densify {

struct HprResult {
  std::vector<int> visible;        // ascending indices into the cloud
  int hull_dimension = 3;
  bool degenerate_fallback = false;  // hull failed; all points returned
};

// Hidden point removal by spherical flipping about the viewpoint followed by
// convex-hull membership. Flip radius R = 10^radius_exponent * max ||p - v||.
// A point is visible iff its flipped image is a vertex of the hull of the
// flipped set plus the viewpoint itself.
inline HprResult hidden_point_removal(const LidarCloud& cloud,
                                      const Eigen::Vector3d& viewpoint,
                                      double radius_exponent = 2.0) {
  cloud.validate();
  const int n = static_cast<int>(cloud.size());

  std::vector<Eigen::Vector3d> flipped(n + 1);
  double max_norm = 0;
  std::vector<double> norms(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d q = cloud.points[i] - viewpoint;
    norms[i] = q.norm();
    if (norms[i] <= 1e-9)
      throw Error::data("viewpoint-on-point",
                        "viewpoint coincides with a cloud point");
    max_norm = std::max(max_norm, norms[i]);
  }
  const double radius = std::pow(10.0, radius_exponent) * max_norm;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d q = cloud.points[i] - viewpoint;
    flipped[i] = q * (2.0 * radius / norms[i] - 1.0);
  }
  flipped[n] = Eigen::Vector3d::Zero();  // the viewpoint itself

  HprResult result;
  try {
    ConvexHullResult hull = convex_hull_vertices(flipped);
    result.hull_dimension = hull.dimension;
    result.visible.reserve(hull.vertices.size());
    for (int idx : hull.vertices)
      if (idx < n) result.visible.push_back(idx);
  } catch (const Error&) {
    result.degenerate_fallback = true;
    result.visible.resize(n);
    for (int i = 0; i < n; ++i) result.visible[i] = i;
  }
  return result;
}

}  // namespace densify

#endif  // DENSIFY_GEOMETRY_HPR_HPP

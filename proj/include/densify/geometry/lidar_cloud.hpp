#ifndef DENSIFY_GEOMETRY_LIDAR_CLOUD_HPP
#define DENSIFY_GEOMETRY_LIDAR_CLOUD_HPP

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "densify/common.hpp"

namespace densify {

// World-frame point cloud (meters). Colors are optional and, when present,
// parallel to `points`.
struct LidarCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<Rgb8> colors;

  size_t size() const { return points.size(); }
  bool has_colors() const { return !colors.empty(); }

  void validate() const {
    if (points.empty())
      throw Error::data("empty-cloud", "LiDAR cloud has no points");
    if (!colors.empty() && colors.size() != points.size())
      throw Error::data("cloud-colors", "color count does not match points");
    for (const auto& p : points)
      if (!p.allFinite())
        throw Error::data("non-finite-point",
                          "LiDAR cloud contains a non-finite coordinate");
  }
};

}  // namespace densify

#endif  // DENSIFY_GEOMETRY_LIDAR_CLOUD_HPP

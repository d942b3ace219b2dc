#ifndef DENSIFY_TESTS_ORACLES_HPP
#define DENSIFY_TESTS_ORACLES_HPP

// Independent reference implementations used to check the library. These are
// deliberately brute force and share no code with the implementation paths
// they verify.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "densify/common.hpp"
#include "densify/geometry/anchor_map.hpp"
#include "densify/refine/clustering.hpp"
#include "densify/refine/depth_map.hpp"

namespace oracles {

// Exhaustive nearest-anchor assignment under the lifted metric, strict
// cutoff, ties to the lowest anchor index.
inline densify::Raster<int32_t> brute_force_cluster(
    const std::vector<densify::AnchorPixel>& anchors,
    const densify::Raster<float>& dtilde, double tau, double depth_weight) {
  densify::Raster<int32_t> out(dtilde.width(), dtilde.height(), -1);
  const double tau_sq = tau * tau;
  for (int y = 0; y < dtilde.height(); ++y)
    for (int x = 0; x < dtilde.width(); ++x) {
      const float d = dtilde.at(x, y);
      if (!(d > 0.0f)) continue;
      double best_sq = std::numeric_limits<double>::infinity();
      int32_t best = -1;
      for (size_t i = 0; i < anchors.size(); ++i) {
        const double du = static_cast<double>(x - anchors[i].x);
        const double dv = static_cast<double>(y - anchors[i].y);
        const double dz = depth_weight * (static_cast<double>(d) -
                                          static_cast<double>(anchors[i].depth));
        const double dist_sq = du * du + dv * dv + dz * dz;
        if (dist_sq < best_sq) {
          best_sq = dist_sq;
          best = static_cast<int32_t>(i);
        }
      }
      out.at(x, y) = best_sq < tau_sq ? best : -1;
    }
  return out;
}

// Direct per-window population variance with replicated borders.
inline double window_variance(const densify::ImageU8& image, int cx, int cy,
                              int kernel) {
  const int r = kernel / 2;
  double total = 0;
  for (int ch = 0; ch < 3; ++ch) {
    double sum = 0, sum_sq = 0;
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) {
        const int x = std::clamp(cx + dx, 0, image.width() - 1);
        const int y = std::clamp(cy + dy, 0, image.height() - 1);
        const densify::Rgb8 c = image.at(x, y);
        const double v = ch == 0 ? c.r : ch == 1 ? c.g : c.b;
        sum += v;
        sum_sq += v * v;
      }
    const double n = static_cast<double>(kernel) * kernel;
    const double mean = sum / n;
    total += std::max(0.0, sum_sq / n - mean * mean);
  }
  return total / 3.0;
}

inline std::set<std::pair<int, int>> disk_pixels(int cx, int cy, int radius,
                                                 int width, int height) {
  std::set<std::pair<int, int>> out;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= radius * radius)
        out.insert({x, y});
  return out;
}

// Analytic visibility of points lying on a sphere: the point is visible iff
// the ray from the viewpoint reaches it before re-entering the sphere.
inline std::vector<char> sphere_visibility(
    const std::vector<Eigen::Vector3d>& points, const Eigen::Vector3d& center,
    double radius, const Eigen::Vector3d& viewpoint) {
  std::vector<char> visible(points.size(), 0);
  for (size_t i = 0; i < points.size(); ++i) {
    const Eigen::Vector3d d = points[i] - viewpoint;
    const Eigen::Vector3d o = viewpoint - center;
    const double a = d.squaredNorm();
    const double b = 2.0 * o.dot(d);
    const double c = o.squaredNorm() - radius * radius;
    const double disc = b * b - 4 * a * c;
    double t_first = 1.0;
    if (disc > 0) {
      const double t0 = (-b - std::sqrt(disc)) / (2 * a);
      if (t0 > 1e-12) t_first = t0;
    }
    visible[i] = t_first >= 1.0 - 1e-9 ? 1 : 0;
  }
  return visible;
}

// Ray-cast visibility against a triangle mesh (used for the octahedron).
// A point is hidden iff some triangle blocks the segment strictly before it.
inline std::vector<char> mesh_visibility(
    const std::vector<Eigen::Vector3d>& points,
    const std::vector<std::array<Eigen::Vector3d, 3>>& triangles,
    const Eigen::Vector3d& viewpoint) {
  auto intersect = [](const Eigen::Vector3d& orig, const Eigen::Vector3d& dir,
                      const std::array<Eigen::Vector3d, 3>& tri)
      -> std::optional<double> {
    const Eigen::Vector3d e1 = tri[1] - tri[0];
    const Eigen::Vector3d e2 = tri[2] - tri[0];
    const Eigen::Vector3d p = dir.cross(e2);
    const double det = e1.dot(p);
    if (std::abs(det) < 1e-14) return std::nullopt;
    const Eigen::Vector3d t = orig - tri[0];
    const double u = t.dot(p) / det;
    if (u < -1e-12 || u > 1 + 1e-12) return std::nullopt;
    const Eigen::Vector3d q = t.cross(e1);
    const double v = dir.dot(q) / det;
    if (v < -1e-12 || u + v > 1 + 1e-12) return std::nullopt;
    return e2.dot(q) / det;
  };
  std::vector<char> visible(points.size(), 1);
  for (size_t i = 0; i < points.size(); ++i) {
    const Eigen::Vector3d dir = points[i] - viewpoint;
    for (const auto& tri : triangles) {
      const auto t = intersect(viewpoint, dir, tri);
      if (t && *t > 1e-9 && *t < 1.0 - 1e-9) {
        visible[i] = 0;
        break;
      }
    }
  }
  return visible;
}

// Support-function check: every direction's farthest input point must be a
// hull vertex (within eps of the attained maximum).
inline bool hull_supports_directions(
    const std::vector<Eigen::Vector3d>& points,
    const std::vector<int>& hull_vertices,
    const std::vector<Eigen::Vector3d>& directions, double eps) {
  std::vector<char> is_vertex(points.size(), 0);
  for (int v : hull_vertices) is_vertex[v] = 1;
  for (const Eigen::Vector3d& d : directions) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& p : points) best = std::max(best, d.dot(p));
    bool attained_by_vertex = false;
    for (int v : hull_vertices)
      if (d.dot(points[v]) >= best - eps) {
        attained_by_vertex = true;
        break;
      }
    if (!attained_by_vertex) return false;
  }
  return true;
}

// Sorted-copy median with the even-count mean-of-middles convention.
inline double sorted_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace oracles

#endif  // DENSIFY_TESTS_ORACLES_HPP

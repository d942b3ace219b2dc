#ifndef DENSIFY_REFINE_CLUSTERING_HPP
#define DENSIFY_REFINE_CLUSTERING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "densify/common.hpp"
#include "densify/geometry/anchor_map.hpp"
#include "densify/refine/depth_map.hpp"

namespace densify {

// Pixel -> nearest-anchor assignment under the lifted metric
//   d^2 = (u_q - u_p)^2 + (v_q - v_p)^2 + (w * (D~(q) - A(p)))^2
// A pixel is assigned iff d < tau; ties break to the lowest anchor index.
struct ClusterAssignment {
  Raster<int32_t> anchor_of;        // index into `anchors`, -1 = unassigned
  std::vector<AnchorPixel> anchors; // row-major anchor list of the frame
  double tau = 0;
  double depth_weight = 1;
  int64_t assigned_count = 0;
  int64_t valid_count = 0;

  static constexpr int32_t kUnassigned = -1;
};

namespace cluster_detail {

inline double lifted_sq(int px, int py, float pd, const AnchorPixel& a,
                        double w) {
  const double du = static_cast<double>(px - a.x);
  const double dv = static_cast<double>(py - a.y);
  const double dz =
      w * (static_cast<double>(pd) - static_cast<double>(a.depth));
  return du * du + dv * dv + dz * dz;
}

// Uniform 2D grid over anchor pixel positions.
struct AnchorGrid {
  int cell = 16;
  int cols = 0, rows = 0;
  std::vector<int32_t> heads;   // first anchor in cell, -1 = empty
  std::vector<int32_t> next;    // linked list over anchors

  AnchorGrid(const std::vector<AnchorPixel>& anchors, int width, int height,
             double tau) {
    cell = std::clamp(static_cast<int>(std::ceil(tau / 4.0)), 4, 256);
    cols = (width + cell - 1) / cell;
    rows = (height + cell - 1) / cell;
    heads.assign(static_cast<size_t>(cols) * rows, -1);
    next.assign(anchors.size(), -1);
    // Insert in reverse so each cell's list iterates in ascending index order.
    for (int i = static_cast<int>(anchors.size()) - 1; i >= 0; --i) {
      const size_t c = static_cast<size_t>(anchors[i].y / cell) * cols +
                       anchors[i].x / cell;
      next[i] = heads[c];
      heads[c] = i;
    }
  }
};

}  // namespace cluster_detail

inline ClusterAssignment cluster_pixels(const AnchorMap& anchor_map,
                                        const DepthMap& dtilde, double tau,
                                        double depth_weight = 1.0) {
  using namespace cluster_detail;
  require_stage(dtilde, DepthStage::global, "cluster_pixels");
  if (!(tau > 0)) throw Error::config("bad-tau", "tau must be > 0");
  if (!(depth_weight > 0))
    throw Error::config("bad-depth-weight", "depth_weight must be > 0");
  if (anchor_map.depth.width() != dtilde.width() ||
      anchor_map.depth.height() != dtilde.height())
    throw Error::internal("dim-mismatch",
                          "anchor map and depth map dimensions disagree");

  ClusterAssignment out;
  out.anchors = collect_anchors(anchor_map);
  out.tau = tau;
  out.depth_weight = depth_weight;
  out.anchor_of = Raster<int32_t>(dtilde.width(), dtilde.height(),
                                  ClusterAssignment::kUnassigned);
  if (out.anchors.empty()) return out;

  const AnchorGrid grid(out.anchors, dtilde.width(), dtilde.height(), tau);
  const double tau_sq = tau * tau;
  const int max_ring =
      static_cast<int>(std::ceil(tau / grid.cell)) + 1;

  for (int y = 0; y < dtilde.height(); ++y) {
    const int cy = y / grid.cell;
    for (int x = 0; x < dtilde.width(); ++x) {
      const float d = dtilde.values.at(x, y);
      if (!(d > 0.0f)) continue;
      ++out.valid_count;
      const int cx = x / grid.cell;

      double best_sq = tau_sq;                  // strict cutoff: d^2 < tau^2
      int32_t best = ClusterAssignment::kUnassigned;
      for (int ring = 0; ring <= max_ring; ++ring) {
        // Cells at Chebyshev ring r are at least (r-1)*cell pixels away.
        if (ring >= 2) {
          const double lb = static_cast<double>(ring - 1) * grid.cell;
          if (lb * lb > best_sq) break;
        }
        const int x0 = cx - ring, x1 = cx + ring;
        const int y0 = cy - ring, y1 = cy + ring;
        for (int gy = y0; gy <= y1; ++gy) {
          if (gy < 0 || gy >= grid.rows) continue;
          const bool edge_row = gy == y0 || gy == y1;
          const int step = edge_row ? 1 : x1 - x0;
          for (int gx = x0; gx <= x1; gx += std::max(step, 1)) {
            if (gx < 0 || gx >= grid.cols) continue;
            for (int32_t ai = grid.heads[static_cast<size_t>(gy) * grid.cols + gx];
                 ai >= 0; ai = grid.next[ai]) {
              const double dist_sq =
                  lifted_sq(x, y, d, out.anchors[ai], depth_weight);
              if (dist_sq < best_sq ||
                  (dist_sq == best_sq && dist_sq < tau_sq && ai < best))
                { best_sq = dist_sq; best = ai; }
            }
          }
        }
      }
      out.anchor_of.at(x, y) = best;
      if (best != ClusterAssignment::kUnassigned) ++out.assigned_count;
    }
  }
  return out;
}

}  // namespace densify

#endif  // DENSIFY_REFINE_CLUSTERING_HPP

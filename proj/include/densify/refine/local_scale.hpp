#ifndef DENSIFY_REFINE_LOCAL_SCALE_HPP
#define DENSIFY_REFINE_LOCAL_SCALE_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "densify/common.hpp"
#include "densify/geometry/anchor_map.hpp"
#include "densify/refine/clustering.hpp"
#include "densify/refine/depth_map.hpp"
#include "densify/refine/global_scale.hpp"

namespace densify {

struct LocalScaleResult {
  DepthMap refined;            // stage = local
  int dissolved_clusters = 0;  // anchors whose pixel had no valid estimate
};

// Per-cluster scaling: every pixel assigned to anchor i is multiplied by
// gamma_i = A(p_i) / D~(p_i). Unassigned pixels pass through bit-identical.
// An anchor whose own pixel has no valid estimate cannot define gamma; its
// cluster dissolves (pixels pass through) and is counted.
inline LocalScaleResult local_scale(const ClusterAssignment& assignment,
                                    const AnchorMap& anchor_map,
                                    const DepthMap& dtilde) {
  require_stage(dtilde, DepthStage::global, "local_scale");
  if (assignment.anchor_of.width() != dtilde.width() ||
      assignment.anchor_of.height() != dtilde.height())
    throw Error::internal("dim-mismatch",
                          "assignment and depth map dimensions disagree");

  LocalScaleResult result;
  const size_t n_anchors = assignment.anchors.size();
  std::vector<double> gamma(n_anchors, 1.0);
  std::vector<char> dissolved(n_anchors, 0);
  for (size_t i = 0; i < n_anchors; ++i) {
    const AnchorPixel& a = assignment.anchors[i];
    const float est = dtilde.values.at(a.x, a.y);
    if (est > 0.0f) {
      gamma[i] = static_cast<double>(a.depth) / static_cast<double>(est);
    } else {
      dissolved[i] = 1;
      ++result.dissolved_clusters;
    }
  }

  result.refined = dtilde;
  result.refined.stage = DepthStage::local;
  for (size_t i = 0; i < result.refined.values.size(); ++i) {
    const int32_t a = assignment.anchor_of[i];
    if (a == ClusterAssignment::kUnassigned || dissolved[a]) continue;
    if (result.refined.values[i] > 0.0f)
      result.refined.values[i] =
          static_cast<float>(result.refined.values[i] * gamma[a]);
  }
  return result;
}

struct RefineParams {
  double tol = 1e-6;
  int max_iter = 5;
  double tau = 0;           // required; pipeline defaults to 0.05 * diagonal
  double depth_weight = 1.0;
};

struct RefinementReport {
  bool no_anchors = false;
  int iterations = 0;
  bool converged = false;
  double global_factor = 1;
  int anchor_count = 0;
  double assigned_fraction = 0;
  int dissolved_clusters = 0;
  int self_assigned_anchors = 0;
  double max_anchor_residual = 0;   // |D^(p_i) - A(p_i)| over self-assigned
  double mean_anchor_residual = 0;
};

struct RefineResult {
  DepthMap refined;
  ClusterAssignment assignment;
  RefinementReport report;
};

// Global-then-local refinement of one frame. With no usable anchors the raw
// map is returned untouched and the report carries the skip flag.
inline RefineResult refine_frame(const AnchorMap& anchors, const DepthMap& raw,
                                 const RefineParams& params) {
  RefineResult out;
  out.report.anchor_count = anchors.anchor_count;

  GlobalScaleResult global =
      iterate_global_scaling(anchors, raw, params.tol, params.max_iter);
  out.report.iterations = global.iterations;
  out.report.converged = global.converged;
  out.report.global_factor = global.total_factor;
  if (global.no_anchors) {
    out.report.no_anchors = true;
    out.refined = std::move(global.scaled);  // still the raw map
    return out;
  }

  out.assignment = cluster_pixels(anchors, global.scaled, params.tau,
                                  params.depth_weight);
  LocalScaleResult local = local_scale(out.assignment, anchors, global.scaled);
  out.report.dissolved_clusters = local.dissolved_clusters;
  out.report.assigned_fraction =
      out.assignment.valid_count == 0
          ? 0.0
          : static_cast<double>(out.assignment.assigned_count) /
                static_cast<double>(out.assignment.valid_count);

  double residual_sum = 0;
  for (size_t i = 0; i < out.assignment.anchors.size(); ++i) {
    const AnchorPixel& a = out.assignment.anchors[i];
    if (out.assignment.anchor_of.at(a.x, a.y) != static_cast<int32_t>(i))
      continue;
    ++out.report.self_assigned_anchors;
    const double r = std::abs(
        static_cast<double>(local.refined.values.at(a.x, a.y)) -
        static_cast<double>(a.depth));
    residual_sum += r;
    out.report.max_anchor_residual = std::max(out.report.max_anchor_residual, r);
  }
  if (out.report.self_assigned_anchors > 0)
    out.report.mean_anchor_residual =
        residual_sum / out.report.self_assigned_anchors;

  out.refined = std::move(local.refined);
  return out;
}

}  // namespace densify

#endif  // DENSIFY_REFINE_LOCAL_SCALE_HPP

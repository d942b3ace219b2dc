#ifndef DENSIFY_IMPORTANCE_SPATIAL_IMPORTANCE_HPP
#define DENSIFY_IMPORTANCE_SPATIAL_IMPORTANCE_HPP

#include <cstdint>
#include <vector>

#include "densify/common.hpp"
#include "densify/importance/pixel_importance.hpp"
#include "densify/refine/clustering.hpp"

namespace densify {

struct AnchorImportance {
  std::vector<double> scores;      // parallel to assignment.anchors
  std::vector<int64_t> pixel_counts;
  int empty_clusters = 0;
};

// Mean pixel importance over each anchor's cluster. Anchors with an empty
// cluster score 0 (they still count as observations downstream).
inline AnchorImportance anchor_importance(const ClusterAssignment& assignment,
                                          const PixelImportance& pix) {
  if (assignment.anchor_of.width() != pix.scores.width() ||
      assignment.anchor_of.height() != pix.scores.height())
    throw Error::internal("dim-mismatch",
                          "assignment and importance dimensions disagree");
  AnchorImportance out;
  out.scores.assign(assignment.anchors.size(), 0.0);
  out.pixel_counts.assign(assignment.anchors.size(), 0);
  for (size_t i = 0; i < assignment.anchor_of.size(); ++i) {
    const int32_t a = assignment.anchor_of[i];
    if (a == ClusterAssignment::kUnassigned) continue;
    out.scores[a] += pix.scores[i];
    ++out.pixel_counts[a];
  }
  for (size_t i = 0; i < out.scores.size(); ++i) {
    if (out.pixel_counts[i] > 0)
      out.scores[i] /= static_cast<double>(out.pixel_counts[i]);
    else
      ++out.empty_clusters;
  }
  return out;
}

struct SpatialImportance {
  std::vector<double> per_point;         // length N, 0 where unobserved
  std::vector<int32_t> observation_count;

  int64_t observed() const {
    int64_t c = 0;
    for (int32_t v : observation_count)
      if (v > 0) ++c;
    return c;
  }
};

// Accumulates per-anchor scores into per-LiDAR-point means across frames.
// Frames must be added in a fixed order for bit-reproducible sums; the
// pipeline always adds them in manifest order.
class SpatialAccumulator {
 public:
  explicit SpatialAccumulator(size_t point_count)
      : sum_(point_count, 0.0), count_(point_count, 0) {}

  void add_frame(const std::vector<AnchorPixel>& anchors,
                 const std::vector<double>& anchor_scores) {
    if (anchors.size() != anchor_scores.size())
      throw Error::internal("score-mismatch",
                            "anchor list and score list lengths disagree");
    for (size_t i = 0; i < anchors.size(); ++i) {
      const int32_t src = anchors[i].source;
      if (src < 0 || static_cast<size_t>(src) >= sum_.size())
        throw Error::internal("bad-source-index",
                              "anchor source index out of range");
      sum_[src] += anchor_scores[i];
      ++count_[src];
    }
  }

  SpatialImportance finalize() const {
    SpatialImportance out;
    out.per_point.assign(sum_.size(), 0.0);
    out.observation_count = count_;
    for (size_t i = 0; i < sum_.size(); ++i)
      if (count_[i] > 0) out.per_point[i] = sum_[i] / count_[i];
    return out;
  }

 private:
  std::vector<double> sum_;
  std::vector<int32_t> count_;
};

// Points whose score reaches threshold_ratio times the median of observed
// scores. Throws "empty-roi" when nothing was observed or every observed
// score is zero (textureless input carries no usable signal).
inline std::vector<int> roi_select(const SpatialImportance& spatial,
                                   double threshold_ratio = 1.0) {
  if (threshold_ratio < 0)
    throw Error::config("bad-threshold", "threshold_ratio must be >= 0");
  std::vector<double> observed;
  observed.reserve(spatial.per_point.size());
  double max_score = 0;
  for (size_t i = 0; i < spatial.per_point.size(); ++i)
    if (spatial.observation_count[i] > 0) {
      observed.push_back(spatial.per_point[i]);
      max_score = std::max(max_score, spatial.per_point[i]);
    }
  if (observed.empty())
    throw Error::data("empty-roi", "no LiDAR point was ever observed");
  if (max_score == 0)
    throw Error::data("empty-roi",
                      "all observed importance scores are zero");
  const double median = median_inplace(observed);
  const double cutoff = threshold_ratio * median;
  std::vector<int> roi;
  for (size_t i = 0; i < spatial.per_point.size(); ++i)
    if (spatial.observation_count[i] > 0 && spatial.per_point[i] >= cutoff)
      roi.push_back(static_cast<int>(i));
  return roi;
}

}  // namespace densify

#endif  // DENSIFY_IMPORTANCE_SPATIAL_IMPORTANCE_HPP

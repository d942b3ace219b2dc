#include <catch2/catch_amalgamated.hpp>

#include "densify/refine/clustering.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace densify;

namespace {

struct Built {
  AnchorMap anchors;
  DepthMap dtilde;
};

Built build(int w, int h, const std::vector<float>& depth,
            const std::vector<std::tuple<int, int, float>>& anchor_px) {
  Built b;
  b.dtilde.values = Raster<float>(w, h, 0.0f);
  for (int i = 0; i < w * h; ++i) b.dtilde.values[i] = depth[i];
  b.dtilde.stage = DepthStage::global;
  b.anchors.depth = Raster<float>(w, h, 0.0f);
  b.anchors.source = Raster<int32_t>(w, h, -1);
  int src = 0;
  for (const auto& [x, y, d] : anchor_px) {
    b.anchors.depth.at(x, y) = d;
    b.anchors.source.at(x, y) = src++;
    ++b.anchors.anchor_count;
  }
  return b;
}

// Random raster + anchors; returns true when the grid search matches the
// exhaustive oracle exactly.
bool matches_oracle(SplitMix64& rng, int max_side, int max_anchors) {
  const int w = 2 + static_cast<int>(rng.bounded(max_side - 1));
  const int h = 2 + static_cast<int>(rng.bounded(max_side - 1));
  std::vector<float> depth(static_cast<size_t>(w) * h);
  for (auto& d : depth) {
    const double r = rng.uniform();
    // Mix invalid pixels and quantized depths so exact ties happen.
    d = r < 0.1 ? 0.0f
                : static_cast<float>(0.5 + 0.25 * std::floor(r * 16.0));
  }
  std::vector<std::tuple<int, int, float>> anchors;
  const int n = 1 + static_cast<int>(rng.bounded(max_anchors));
  for (int i = 0; i < n; ++i)
    anchors.push_back({static_cast<int>(rng.bounded(w)),
                       static_cast<int>(rng.bounded(h)),
                       static_cast<float>(0.5 + 0.25 * rng.bounded(16))});
  const double tau = 0.5 + rng.uniform() * (w + h);
  const double weight = rng.uniform() < 0.5 ? 1.0 : 0.25 + rng.uniform() * 4;

  const Built b = build(w, h, depth, anchors);
  const ClusterAssignment got = cluster_pixels(b.anchors, b.dtilde, tau, weight);
  const Raster<int32_t> want =
      oracles::brute_force_cluster(got.anchors, b.dtilde.values, tau, weight);
  return got.anchor_of == want;
}

}  // namespace

TEST_CASE("pixel coincident with an anchor is assigned at distance zero") {
  const Built b = build(3, 3, {1, 1, 1, 1, 2, 1, 1, 1, 1}, {{1, 1, 2.0f}});
  const auto assignment = cluster_pixels(b.anchors, b.dtilde, 5.0);
  CHECK(assignment.anchor_of.at(1, 1) == 0);
}

TEST_CASE("4x4 raster with two anchors equals the exhaustive search") {
  const std::vector<float> depth{1, 1, 2, 2, 1, 1, 2, 2,
                                 1, 1, 2, 2, 1, 1, 2, 2};
  const Built b = build(4, 4, depth, {{0, 0, 1.0f}, {3, 3, 2.0f}});
  const auto got = cluster_pixels(b.anchors, b.dtilde, 10.0);
  const auto want =
      oracles::brute_force_cluster(got.anchors, b.dtilde.values, 10.0, 1.0);
  CHECK(got.anchor_of == want);
  CHECK(got.assigned_count == 16);
}

TEST_CASE("pixels beyond tau stay unassigned") {
  const Built b = build(8, 1, {1, 1, 1, 1, 1, 1, 1, 1}, {{0, 0, 50.0f}});
  // Lifted distance to the anchor is dominated by the 49 m depth gap.
  const auto assignment = cluster_pixels(b.anchors, b.dtilde, 2.0);
  CHECK(assignment.assigned_count == 0);
  for (int x = 0; x < 8; ++x)
    CHECK(assignment.anchor_of.at(x, 0) == ClusterAssignment::kUnassigned);
}

TEST_CASE("cutoff is strict and ties break to the lowest anchor index") {
  // Two anchors, both at lifted distance exactly 2 from the middle pixel.
  const Built b = build(5, 1, {1, 1, 1, 1, 1}, {{0, 0, 1.0f}, {4, 0, 1.0f}});
  SECTION("tie goes to anchor 0") {
    const auto assignment = cluster_pixels(b.anchors, b.dtilde, 2.5);
    CHECK(assignment.anchor_of.at(2, 0) == 0);
  }
  SECTION("distance exactly tau is excluded") {
    const auto assignment = cluster_pixels(b.anchors, b.dtilde, 2.0);
    CHECK(assignment.anchor_of.at(2, 0) == ClusterAssignment::kUnassigned);
    CHECK(assignment.anchor_of.at(1, 0) == 0);  // distance 1 < tau
  }
}

TEST_CASE("grid search equals the exhaustive oracle on random rasters") {
  SplitMix64 rng(31);
  for (int i = 0; i < 40; ++i) REQUIRE(matches_oracle(rng, 24, 8));
}

TEST_CASE("clustering requires a globally scaled map and positive tau") {
  Built b = build(2, 1, {1, 1}, {{0, 0, 1.0f}});
  CHECK_THROWS_AS(cluster_pixels(b.anchors, b.dtilde, 0.0), Error);
  b.dtilde.stage = DepthStage::raw;
  CHECK_THROWS_AS(cluster_pixels(b.anchors, b.dtilde, 5.0), Error);
}

TEST_CASE("no anchors leaves every pixel unassigned") {
  const Built b = build(3, 1, {1, 1, 1}, {});
  const auto assignment = cluster_pixels(b.anchors, b.dtilde, 5.0);
  CHECK(assignment.assigned_count == 0);
  CHECK(assignment.anchors.empty());
}

#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

#include "densify/sampling/sampling.hpp"
#include "test_util.hpp"

using namespace densify;

namespace {

DepthMap uniform_depth(int w, int h, float value = 2.0f) {
  DepthMap d;
  d.values = Raster<float>(w, h, value);
  d.stage = DepthStage::local;
  return d;
}

RoiMask left_half_mask(int w, int h) {
  RoiMask m;
  m.mask = Raster<uint8_t>(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w / 2; ++x) m.mask.at(x, y) = 255;
  return m;
}

}  // namespace

TEST_CASE("allocation honors the 30:1 density ratio") {
  SamplingConfig cfg;
  cfg.total_budget = 62;
  cfg.density_ratio = 30;
  const std::vector<FrameStrata> frames{{100, 100}};
  const AllocationResult alloc = allocate_frame_budgets(frames, cfg);
  CHECK(alloc.budgets[0].roi == 60);
  CHECK(alloc.budgets[0].nonroi == 2);
  CHECK(alloc.total == 62);
  CHECK_FALSE(alloc.clipped);
}

TEST_CASE("ratio 1 allocates proportionally to pixel counts") {
  SamplingConfig cfg;
  cfg.total_budget = 90;
  cfg.density_ratio = 1;
  const std::vector<FrameStrata> frames{{100, 200}, {300, 300}};
  const AllocationResult alloc = allocate_frame_budgets(frames, cfg);
  CHECK(alloc.budgets[0].roi == 10);
  CHECK(alloc.budgets[0].nonroi == 20);
  CHECK(alloc.budgets[1].roi == 30);
  CHECK(alloc.budgets[1].nonroi == 30);
}

TEST_CASE("frames with an empty mask get only non-roi samples") {
  SamplingConfig cfg;
  cfg.total_budget = 50;
  const std::vector<FrameStrata> frames{{0, 500}};
  const AllocationResult alloc = allocate_frame_budgets(frames, cfg);
  CHECK(alloc.budgets[0].roi == 0);
  CHECK(alloc.budgets[0].nonroi == 50);
}

TEST_CASE("budget larger than the pixel supply is clipped") {
  SamplingConfig cfg;
  cfg.total_budget = 1000;
  const std::vector<FrameStrata> frames{{30, 50}, {0, 20}};
  const AllocationResult alloc = allocate_frame_budgets(frames, cfg);
  CHECK(alloc.clipped);
  CHECK(alloc.total == 100);
  CHECK(alloc.budgets[0].roi == 30);
  CHECK(alloc.budgets[0].nonroi == 50);
  CHECK(alloc.budgets[1].nonroi == 20);
}

TEST_CASE("saturated roi strata respill into the remaining cells") {
  SamplingConfig cfg;
  cfg.total_budget = 100;
  cfg.density_ratio = 30;
  // Tiny ROI stratum saturates; the rest must still be allocated.
  const std::vector<FrameStrata> frames{{2, 1000}};
  const AllocationResult alloc = allocate_frame_budgets(frames, cfg);
  CHECK(alloc.budgets[0].roi == 2);
  CHECK(alloc.budgets[0].nonroi == 98);
}

TEST_CASE("per-frame cap trims a frame without redistribution") {
  SamplingConfig cfg;
  cfg.total_budget = 200;
  cfg.density_ratio = 1;
  cfg.per_frame_cap = 40;
  const std::vector<FrameStrata> frames{{100, 100}, {100, 100}};
  const AllocationResult alloc = allocate_frame_budgets(frames, cfg);
  for (const FrameBudget& b : alloc.budgets)
    CHECK(b.roi + b.nonroi == 40);
  CHECK(alloc.total == 80);
}

TEST_CASE("sampling the whole stratum returns exactly the stratum") {
  const DepthMap depth = uniform_depth(10, 10);
  const RoiMask mask = left_half_mask(10, 10);
  const FrameSampleResult got =
      sample_pixels(depth, &mask, FrameBudget{50, 0}, 1234);
  CHECK(got.pixels.size() == 50);
  CHECK(got.roi_shortfall == 0);
  std::set<std::pair<int, int>> seen;
  for (const PixelSample& s : got.pixels) {
    CHECK(s.roi);
    CHECK(s.x < 5);
    seen.insert({s.x, s.y});
  }
  CHECK(seen.size() == 50);  // without replacement
}

TEST_CASE("same seed reproduces the same pixel list") {
  const DepthMap depth = uniform_depth(20, 20);
  const RoiMask mask = left_half_mask(20, 20);
  const auto a = sample_pixels(depth, &mask, FrameBudget{30, 40}, 777);
  const auto b = sample_pixels(depth, &mask, FrameBudget{30, 40}, 777);
  REQUIRE(a.pixels.size() == b.pixels.size());
  for (size_t i = 0; i < a.pixels.size(); ++i) {
    CHECK(a.pixels[i].x == b.pixels[i].x);
    CHECK(a.pixels[i].y == b.pixels[i].y);
    CHECK(a.pixels[i].roi == b.pixels[i].roi);
  }
  const auto c = sample_pixels(depth, &mask, FrameBudget{30, 40}, 778);
  bool any_diff = false;
  for (size_t i = 0; i < a.pixels.size(); ++i)
    any_diff |= a.pixels[i].x != c.pixels[i].x || a.pixels[i].y != c.pixels[i].y;
  CHECK(any_diff);
}

TEST_CASE("invalid-depth pixels are never sampled") {
  DepthMap depth = uniform_depth(10, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x)
      if ((x + y) % 3 == 0) depth.values.at(x, y) = 0.0f;
  const FrameSampleResult got =
      sample_pixels(depth, nullptr, FrameBudget{0, 100}, 5);
  for (const PixelSample& s : got.pixels)
    CHECK(depth.values.at(s.x, s.y) > 0.0f);
  CHECK(got.nonroi_shortfall > 0);  // fewer valid pixels than requested
}

TEST_CASE("stratum shortfall takes everything and reports the gap") {
  const DepthMap depth = uniform_depth(4, 4);
  const RoiMask mask = left_half_mask(4, 4);
  const FrameSampleResult got =
      sample_pixels(depth, &mask, FrameBudget{20, 3}, 9);
  CHECK(got.roi_shortfall == 12);  // stratum holds only 8
  int roi_count = 0;
  for (const PixelSample& s : got.pixels) roi_count += s.roi ? 1 : 0;
  CHECK(roi_count == 8);
}

TEST_CASE("lift places the principal-point sample on the optical axis") {
  const DepthMap depth = uniform_depth(100, 100);
  ImageU8 image(100, 100, Rgb8{10, 20, 30});
  image.at(50, 50) = Rgb8{200, 100, 50};
  const Intrinsics intr{100.0, 100.0, 50.0, 50.0, 100, 100};
  const std::vector<PixelSample> pixels{{50, 50, true}};
  const SampledCloud cloud =
      lift_samples(pixels, depth, image, Pose(), intr, 3);
  REQUIRE(cloud.size() == 1);
  CHECK(cloud.positions[0][0] == 0.0f);
  CHECK(cloud.positions[0][1] == 0.0f);
  CHECK(cloud.positions[0][2] == 2.0f);
  CHECK(cloud.colors[0] == Rgb8{200, 100, 50});
  CHECK(cloud.provenance[0].frame == 3);
  CHECK(cloud.provenance[0].px == 50);
  CHECK(cloud.provenance[0].roi == 1);
}

TEST_CASE("every lifted point reprojects onto its source pixel") {
  SplitMix64 rng(55);
  const Intrinsics intr{90.0, 110.0, 40.0, 30.0, 80, 60};
  const Pose pose = testutil::look_at({1, 2, -3}, {0, 0, 2});
  DepthMap depth;
  depth.values = Raster<float>(80, 60, 0.0f);
  depth.stage = DepthStage::local;
  for (size_t i = 0; i < depth.values.size(); ++i)
    depth.values[i] = static_cast<float>(0.5 + rng.uniform() * 8);
  const ImageU8 image(80, 60, Rgb8{1, 2, 3});
  const FrameSampleResult samples =
      sample_pixels(depth, nullptr, FrameBudget{0, 500}, 42);
  const SampledCloud cloud =
      lift_samples(samples.pixels, depth, image, pose, intr, 0);
  REQUIRE(cloud.size() == 500);
  for (size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d p(cloud.positions[i][0], cloud.positions[i][1],
                            cloud.positions[i][2]);
    const auto proj = project_point(p, pose, intr);
    REQUIRE(proj.has_value());
    CHECK(std::abs(proj->uv.x() - cloud.provenance[i].px) < 0.5);
    CHECK(std::abs(proj->uv.y() - cloud.provenance[i].py) < 0.5);
  }
}

TEST_CASE("fragment size equals the allocation when nothing is short") {
  const DepthMap depth = uniform_depth(20, 20);
  const RoiMask mask = left_half_mask(20, 20);
  const auto got = sample_pixels(depth, &mask, FrameBudget{30, 40}, 6);
  CHECK(got.pixels.size() == 70);
  CHECK(got.roi_shortfall == 0);
  CHECK(got.nonroi_shortfall == 0);
}

TEST_CASE("fuse preserves fragment order") {
  SampledCloud a, b;
  for (int i = 0; i < 10; ++i) {
    a.positions.push_back({static_cast<float>(i), 0, 0});
    a.colors.push_back(Rgb8{1, 0, 0});
    a.provenance.push_back({0, static_cast<uint16_t>(i), 0, 0});
    b.positions.push_back({static_cast<float>(100 + i), 0, 0});
    b.colors.push_back(Rgb8{2, 0, 0});
    b.provenance.push_back({1, static_cast<uint16_t>(i), 0, 0});
  }
  const std::vector<SampledCloud> fragments{a, b};
  const SampledCloud fused = fuse(fragments);
  REQUIRE(fused.size() == 20);
  CHECK(fused.positions[0][0] == 0.0f);
  CHECK(fused.positions[10][0] == 100.0f);
  CHECK(fused.provenance[19].frame == 1);
}

TEST_CASE("dedup collapses points sharing a voxel") {
  SampledCloud a;
  a.positions = {{1.0f, 1.0f, 1.0f}, {1.001f, 1.0f, 1.0f}};
  a.colors = {Rgb8{9, 9, 9}, Rgb8{7, 7, 7}};
  a.provenance.resize(2);
  const std::vector<SampledCloud> fragments{a};
  const SampledCloud fused = fuse(fragments, 0.01);
  REQUIRE(fused.size() == 1);
  CHECK(fused.colors[0] == Rgb8{9, 9, 9});  // first point wins
}

TEST_CASE("no two deduped points share a voxel cell") {
  SplitMix64 rng(88);
  SampledCloud a;
  for (int i = 0; i < 3000; ++i) {
    a.positions.push_back({static_cast<float>(rng.uniform()),
                           static_cast<float>(rng.uniform()),
                           static_cast<float>(rng.uniform())});
    a.colors.push_back(Rgb8{});
    a.provenance.push_back({});
  }
  const double voxel = 0.05;
  const std::vector<SampledCloud> fragments{a};
  const SampledCloud fused = fuse(fragments, voxel);
  std::map<std::tuple<int64_t, int64_t, int64_t>, int> cells;
  for (const auto& p : fused.positions) {
    const auto key = std::make_tuple(
        static_cast<int64_t>(std::floor(p[0] / voxel)),
        static_cast<int64_t>(std::floor(p[1] / voxel)),
        static_cast<int64_t>(std::floor(p[2] / voxel)));
    CHECK(++cells[key] == 1);
  }
}

TEST_CASE("fusing nothing is an error") {
  SampledCloud empty;
  const std::vector<SampledCloud> fragments{empty};
  CHECK_THROWS_AS(fuse(fragments), Error);
}

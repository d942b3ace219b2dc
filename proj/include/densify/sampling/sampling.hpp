#ifndef DENSIFY_SAMPLING_SAMPLING_HPP
#define DENSIFY_SAMPLING_SAMPLING_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include "densify/common.hpp"
#include "densify/geometry/camera.hpp"
#include "densify/importance/roi_mask.hpp"
#include "densify/refine/depth_map.hpp"

namespace densify {

struct SamplingConfig {
  int64_t total_budget = 600000;
  double density_ratio = 30.0;  // rho_ROI / rho_non-ROI
  uint64_t seed = 0;
  std::optional<int64_t> per_frame_cap;
  std::optional<double> dedup_voxel;  // meters; unset = off

  void validate() const {
    if (total_budget < 1)
      throw Error::config("bad-budget", "total_budget must be >= 1");
    if (!(density_ratio > 0))
      throw Error::config("bad-ratio", "density_ratio must be > 0");
    if (per_frame_cap && *per_frame_cap < 0)
      throw Error::config("bad-frame-cap", "per_frame_cap must be >= 0");
    if (dedup_voxel && !(*dedup_voxel > 0))
      throw Error::config("bad-dedup", "dedup voxel size must be > 0");
  }
};

struct FrameStrata {
  int64_t roi_pixels = 0;     // valid-depth pixels inside the mask
  int64_t nonroi_pixels = 0;  // valid-depth pixels outside the mask
};

struct FrameBudget {
  int64_t roi = 0;
  int64_t nonroi = 0;
};

struct AllocationResult {
  std::vector<FrameBudget> budgets;
  int64_t total = 0;
  bool clipped = false;  // fewer valid pixels than budget
};

// Splits the total budget across (frame, stratum) cells so that the expected
// per-pixel rate in ROI strata is density_ratio times the non-ROI rate,
// via weights (pixel_count * rate_weight). Cells that would exceed their
// pixel count saturate and the remainder re-flows to the rest; fractional
// allocations round by largest remainder. Fully deterministic.
inline AllocationResult allocate_frame_budgets(
    std::span<const FrameStrata> frames, const SamplingConfig& config) {
  config.validate();
  const size_t n_cells = frames.size() * 2;
  std::vector<double> weight(n_cells, 0.0);
  std::vector<int64_t> capacity(n_cells, 0);
  for (size_t f = 0; f < frames.size(); ++f) {
    weight[2 * f] = static_cast<double>(frames[f].roi_pixels) *
                    config.density_ratio;
    weight[2 * f + 1] = static_cast<double>(frames[f].nonroi_pixels);
    capacity[2 * f] = frames[f].roi_pixels;
    capacity[2 * f + 1] = frames[f].nonroi_pixels;
  }

  AllocationResult out;
  out.budgets.assign(frames.size(), FrameBudget{});
  int64_t total_capacity = 0;
  for (int64_t c : capacity) total_capacity += c;
  int64_t budget = config.total_budget;
  if (total_capacity < budget) {
    budget = total_capacity;
    out.clipped = true;
  }

  std::vector<int64_t> alloc(n_cells, 0);
  std::vector<char> saturated(n_cells, 0);
  // Water-filling: saturate cells whose proportional share exceeds capacity.
  while (budget > 0) {
    double active_weight = 0;
    for (size_t i = 0; i < n_cells; ++i)
      if (!saturated[i]) active_weight += weight[i];
    if (active_weight <= 0) break;
    bool saturated_any = false;
    for (size_t i = 0; i < n_cells; ++i) {
      if (saturated[i]) continue;
      const double ideal = budget * weight[i] / active_weight;
      if (ideal >= static_cast<double>(capacity[i] - alloc[i])) {
        alloc[i] = capacity[i];
        saturated[i] = 1;
        saturated_any = true;
      }
    }
    if (!saturated_any) break;
    int64_t used = 0;
    for (size_t i = 0; i < n_cells; ++i)
      if (saturated[i]) used += alloc[i];
    budget = std::min(config.total_budget, total_capacity) - used;
  }

  // Largest-remainder rounding over the remaining cells.
  double active_weight = 0;
  for (size_t i = 0; i < n_cells; ++i)
    if (!saturated[i]) active_weight += weight[i];
  if (budget > 0 && active_weight > 0) {
    std::vector<std::pair<double, size_t>> remainders;
    int64_t assigned = 0;
    for (size_t i = 0; i < n_cells; ++i) {
      if (saturated[i]) continue;
      const double ideal = budget * weight[i] / active_weight;
      const int64_t base = static_cast<int64_t>(std::floor(ideal));
      alloc[i] = base;
      assigned += base;
      remainders.push_back({ideal - static_cast<double>(base), i});
    }
    std::sort(remainders.begin(), remainders.end(),
              [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
              });
    int64_t leftover = budget - assigned;
    for (const auto& [rem, i] : remainders) {
      if (leftover <= 0) break;
      if (alloc[i] < capacity[i]) {
        ++alloc[i];
        --leftover;
      }
    }
  }

  for (size_t f = 0; f < frames.size(); ++f) {
    FrameBudget fb{alloc[2 * f], alloc[2 * f + 1]};
    if (config.per_frame_cap && fb.roi + fb.nonroi > *config.per_frame_cap) {
      // Proportional trim within the frame; the surplus is not redistributed.
      const double scale = static_cast<double>(*config.per_frame_cap) /
                           static_cast<double>(fb.roi + fb.nonroi);
      int64_t roi = static_cast<int64_t>(std::floor(fb.roi * scale));
      int64_t nonroi = static_cast<int64_t>(std::floor(fb.nonroi * scale));
      while (roi + nonroi < *config.per_frame_cap)
        (fb.roi * scale - roi >= fb.nonroi * scale - nonroi) ? ++roi : ++nonroi;
      fb.roi = roi;
      fb.nonroi = nonroi;
    }
    out.budgets[f] = fb;
    out.total += fb.roi + fb.nonroi;
  }
  return out;
}

// Derives the per-frame RNG stream from the run seed and the frame index.
inline uint64_t frame_seed(uint64_t run_seed, uint64_t frame_index) {
  return run_seed ^ hash_combine(0x5eedf00dULL, frame_index);
}

// Deterministic partial Fisher-Yates: draw `k` elements without replacement.
template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> pool, size_t k,
                                          SplitMix64& rng) {
  k = std::min(k, pool.size());
  for (size_t i = 0; i < k; ++i) {
    const size_t j = i + static_cast<size_t>(rng.bounded(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

struct PixelSample {
  int x = 0, y = 0;
  bool roi = false;
};

struct FrameSampleResult {
  std::vector<PixelSample> pixels;  // ROI picks first, then non-ROI
  int64_t roi_shortfall = 0;
  int64_t nonroi_shortfall = 0;
};

// Uniform without-replacement sampling within each stratum. Pixels without a
// valid refined depth are never candidates. A single RNG stream per frame,
// ROI stratum drawn first.
inline FrameSampleResult sample_pixels(const DepthMap& refined,
                                       const RoiMask* mask,
                                       const FrameBudget& budget,
                                       uint64_t seed) {
  require_stage(refined, DepthStage::local, "sample_pixels");
  if (mask && (mask->mask.width() != refined.width() ||
               mask->mask.height() != refined.height()))
    throw Error::internal("dim-mismatch", "mask and depth dimensions disagree");

  std::vector<std::pair<int, int>> roi_pool, nonroi_pool;
  for (int y = 0; y < refined.height(); ++y)
    for (int x = 0; x < refined.width(); ++x) {
      if (!refined.valid_at(x, y)) continue;
      const bool in_roi = mask && mask->mask.at(x, y) != 0;
      (in_roi ? roi_pool : nonroi_pool).emplace_back(x, y);
    }

  FrameSampleResult out;
  SplitMix64 rng(seed);
  if (budget.roi > static_cast<int64_t>(roi_pool.size()))
    out.roi_shortfall = budget.roi - static_cast<int64_t>(roi_pool.size());
  if (budget.nonroi > static_cast<int64_t>(nonroi_pool.size()))
    out.nonroi_shortfall =
        budget.nonroi - static_cast<int64_t>(nonroi_pool.size());

  const auto roi_picks = sample_without_replacement(
      std::move(roi_pool), static_cast<size_t>(std::max<int64_t>(budget.roi, 0)),
      rng);
  const auto nonroi_picks = sample_without_replacement(
      std::move(nonroi_pool),
      static_cast<size_t>(std::max<int64_t>(budget.nonroi, 0)), rng);
  out.pixels.reserve(roi_picks.size() + nonroi_picks.size());
  for (const auto& [x, y] : roi_picks) out.pixels.push_back({x, y, true});
  for (const auto& [x, y] : nonroi_picks) out.pixels.push_back({x, y, false});
  return out;
}

struct SampledCloud {
  struct Provenance {
    int32_t frame = 0;
    uint16_t px = 0, py = 0;
    uint8_t roi = 0;
    bool operator==(const Provenance&) const = default;
  };

  std::vector<std::array<float, 3>> positions;
  std::vector<Rgb8> colors;
  std::vector<Provenance> provenance;

  size_t size() const { return positions.size(); }

  void append(const SampledCloud& other) {
    positions.insert(positions.end(), other.positions.begin(),
                     other.positions.end());
    colors.insert(colors.end(), other.colors.begin(), other.colors.end());
    provenance.insert(provenance.end(), other.provenance.begin(),
                      other.provenance.end());
  }
};

// Back-projects sampled pixels through the refined depth and takes the color
// of the source pixel.
inline SampledCloud lift_samples(std::span<const PixelSample> pixels,
                                 const DepthMap& refined, const ImageU8& image,
                                 const Pose& pose, const Intrinsics& intr,
                                 int32_t frame_index) {
  require_stage(refined, DepthStage::local, "lift_samples");
  SampledCloud out;
  out.positions.reserve(pixels.size());
  out.colors.reserve(pixels.size());
  out.provenance.reserve(pixels.size());
  for (const PixelSample& s : pixels) {
    const float z = refined.values.at(s.x, s.y);
    const Eigen::Vector3d world = backproject_pixel(
        Eigen::Vector2d(s.x, s.y), static_cast<double>(z), pose, intr);
    out.positions.push_back({static_cast<float>(world.x()),
                             static_cast<float>(world.y()),
                             static_cast<float>(world.z())});
    out.colors.push_back(image.at(s.x, s.y));
    out.provenance.push_back({frame_index, static_cast<uint16_t>(s.x),
                              static_cast<uint16_t>(s.y),
                              static_cast<uint8_t>(s.roi ? 1 : 0)});
  }
  return out;
}

// Concatenates fragments in order; optional voxel dedup keeps the first
// point per cell.
inline SampledCloud fuse(std::span<const SampledCloud> fragments,
                         std::optional<double> dedup_voxel = std::nullopt) {
  if (fragments.empty())
    throw Error::internal("no-fragments", "fuse requires at least one fragment");
  SampledCloud merged;
  for (const SampledCloud& f : fragments) merged.append(f);

  if (dedup_voxel) {
    if (!(*dedup_voxel > 0))
      throw Error::config("bad-dedup", "dedup voxel size must be > 0");
    const double inv = 1.0 / *dedup_voxel;
    struct CellHash {
      size_t operator()(const std::array<int64_t, 3>& c) const {
        uint64_t h = 0x9e3779b97f4a7c15ull;
        for (int64_t v : c) h = hash_combine(h, static_cast<uint64_t>(v));
        return static_cast<size_t>(h);
      }
    };
    std::unordered_set<std::array<int64_t, 3>, CellHash> seen;
    seen.reserve(merged.size() * 2);
    SampledCloud kept;
    for (size_t i = 0; i < merged.size(); ++i) {
      const auto& p = merged.positions[i];
      const std::array<int64_t, 3> cell{
          static_cast<int64_t>(std::floor(p[0] * inv)),
          static_cast<int64_t>(std::floor(p[1] * inv)),
          static_cast<int64_t>(std::floor(p[2] * inv))};
      if (!seen.insert(cell).second) continue;
      kept.positions.push_back(merged.positions[i]);
      kept.colors.push_back(merged.colors[i]);
      kept.provenance.push_back(merged.provenance[i]);
    }
    merged = std::move(kept);
  }

  if (merged.size() == 0)
    throw Error::data("empty-cloud", "fused cloud is empty");
  return merged;
}

}  // namespace densify

#endif  // DENSIFY_SAMPLING_SAMPLING_HPP

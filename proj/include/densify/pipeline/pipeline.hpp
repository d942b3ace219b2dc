#ifndef DENSIFY_PIPELINE_PIPELINE_HPP
#define DENSIFY_PIPELINE_PIPELINE_HPP

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "densify/common.hpp"
#include "densify/geometry/anchor_map.hpp"
#include "densify/geometry/camera.hpp"
#include "densify/geometry/hpr.hpp"
#include "densify/geometry/lidar_cloud.hpp"
#include "densify/importance/pixel_importance.hpp"
#include "densify/importance/roi_mask.hpp"
#include "densify/importance/spatial_importance.hpp"
#include "densify/io/image_io.hpp"
#include "densify/io/manifest.hpp"
#include "densify/io/pfm.hpp"
#include "densify/io/ply.hpp"
#include "densify/io/resize.hpp"
#include "densify/pipeline/cache.hpp"
#include "densify/pipeline/parallel.hpp"
#include "densify/refine/local_scale.hpp"
#include "densify/sampling/sampling.hpp"

namespace densify {

struct PipelineConfig {
  std::filesystem::path manifest_path;
  std::filesystem::path out_dir;

  int kernel_size = 9;
  double density_ratio = 30.0;
  double threshold_ratio = 1.0;
  std::optional<double> tau;      // default: 0.05 * image diagonal per frame
  double depth_weight = 1.0;
  int dilation_radius = 4;
  int64_t total_budget = 600000;
  uint64_t seed = 0;
  int max_iter = 5;
  double tol = 1e-6;
  double radius_exponent = 2.0;
  std::optional<std::pair<int, int>> resize;  // (width, height)
  std::optional<double> dedup_voxel;          // off by default
  int workers = 0;                            // 0 = hardware concurrency
  std::optional<int64_t> per_frame_cap;
  std::optional<std::filesystem::path> mask_dir;
  std::optional<std::filesystem::path> cache_dir;  // default: out_dir/cache
  bool previews = false;
  int64_t memory_ceiling_mb = 0;  // 0 = off; bounds frames in flight

  void validate() const {
    if (manifest_path.empty())
      throw Error::config("missing-manifest", "a manifest path is required");
    if (kernel_size < 3 || kernel_size % 2 == 0)
      throw Error::config("invalid-kernel", "kernel size must be odd and >= 3");
    if (!(density_ratio > 0))
      throw Error::config("bad-ratio", "density ratio must be > 0");
    if (threshold_ratio < 0)
      throw Error::config("bad-threshold", "threshold ratio must be >= 0");
    if (tau && !(*tau > 0)) throw Error::config("bad-tau", "tau must be > 0");
    if (!(depth_weight > 0))
      throw Error::config("bad-depth-weight", "depth weight must be > 0");
    if (dilation_radius < 0)
      throw Error::config("bad-dilation", "dilation radius must be >= 0");
    if (total_budget < 1)
      throw Error::config("bad-budget", "budget must be >= 1");
    if (max_iter < 1)
      throw Error::config("bad-max-iter", "max iterations must be >= 1");
    if (!(tol > 0)) throw Error::config("bad-tol", "tolerance must be > 0");
    if (resize && (resize->first < 1 || resize->second < 1))
      throw Error::config("resize-bounds", "resize target must be >= 1");
    if (dedup_voxel && !(*dedup_voxel > 0))
      throw Error::config("bad-dedup", "dedup voxel must be > 0");
    if (workers < 0)
      throw Error::config("bad-workers", "worker count must be >= 0");
    if (memory_ceiling_mb < 0)
      throw Error::config("bad-memory", "memory ceiling must be >= 0");
  }

  int effective_workers() const {
    const int hw = static_cast<int>(std::thread::hardware_concurrency());
    return workers > 0 ? workers : std::max(1, hw);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["manifest"] = manifest_path.string();
    j["out_dir"] = out_dir.string();
    j["kernel_size"] = kernel_size;
    j["density_ratio"] = density_ratio;
    j["threshold_ratio"] = threshold_ratio;
    j["tau"] = tau ? nlohmann::json(*tau) : nlohmann::json();
    j["depth_weight"] = depth_weight;
    j["dilation_radius"] = dilation_radius;
    j["total_budget"] = total_budget;
    j["seed"] = seed;
    j["max_iter"] = max_iter;
    j["tol"] = tol;
    j["radius_exponent"] = radius_exponent;
    j["resize"] = resize ? nlohmann::json::array({resize->first, resize->second})
                         : nlohmann::json();
    j["dedup_voxel"] = dedup_voxel ? nlohmann::json(*dedup_voxel)
                                   : nlohmann::json();
    j["workers"] = workers;
    j["per_frame_cap"] = per_frame_cap ? nlohmann::json(*per_frame_cap)
                                       : nlohmann::json();
    j["mask_dir"] = mask_dir ? nlohmann::json(mask_dir->string())
                             : nlohmann::json();
    j["previews"] = previews;
    j["memory_ceiling_mb"] = memory_ceiling_mb;
    return j;
  }
};

struct RunResult {
  int frames = 0;
  int64_t points = 0;
  std::filesystem::path ply_path;
  std::filesystem::path report_path;
  bool empty_roi_fallback = false;
  bool budget_clipped = false;
};

namespace pipeline_detail {

constexpr uint32_t kCacheFormat = 1;

// Everything the later passes need about a frame; cached content-addressed.
struct FrameStage {
  int width = 0, height = 0;
  std::vector<AnchorPixel> anchors;
  std::vector<double> anchor_scores;
  std::vector<int32_t> visible;
  Raster<float> refined;  // stage local (raw passthrough when no_anchors)
  RefinementReport report;
  bool hpr_degenerate = false;

  std::vector<char> serialize() const {
    BlobWriter w;
    w.pod(kCacheFormat);
    w.pod(static_cast<int32_t>(width));
    w.pod(static_cast<int32_t>(height));
    w.pod(static_cast<uint64_t>(anchors.size()));
    for (const AnchorPixel& a : anchors) {
      w.pod(static_cast<int32_t>(a.x));
      w.pod(static_cast<int32_t>(a.y));
      w.pod(a.depth);
      w.pod(a.source);
    }
    w.pod_vector(anchor_scores);
    w.pod_vector(visible);
    w.raw(refined.data(), refined.size() * sizeof(float));
    w.pod(report.no_anchors);
    w.pod(static_cast<int32_t>(report.iterations));
    w.pod(report.converged);
    w.pod(report.global_factor);
    w.pod(static_cast<int32_t>(report.anchor_count));
    w.pod(report.assigned_fraction);
    w.pod(static_cast<int32_t>(report.dissolved_clusters));
    w.pod(static_cast<int32_t>(report.self_assigned_anchors));
    w.pod(report.max_anchor_residual);
    w.pod(report.mean_anchor_residual);
    w.pod(hpr_degenerate);
    return w.take();
  }

  static FrameStage deserialize(const std::vector<char>& bytes) {
    BlobReader r(bytes);
    FrameStage s;
    if (r.pod<uint32_t>() != kCacheFormat)
      throw Error::data("cache-corrupt", "cache format mismatch");
    s.width = r.pod<int32_t>();
    s.height = r.pod<int32_t>();
    const uint64_t n = r.pod<uint64_t>();
    s.anchors.resize(n);
    for (uint64_t i = 0; i < n; ++i) {
      s.anchors[i].x = r.pod<int32_t>();
      s.anchors[i].y = r.pod<int32_t>();
      s.anchors[i].depth = r.pod<float>();
      s.anchors[i].source = r.pod<int32_t>();
    }
    s.anchor_scores = r.pod_vector<double>();
    s.visible = r.pod_vector<int32_t>();
    s.refined = Raster<float>(s.width, s.height);
    r.raw(s.refined.data(), s.refined.size() * sizeof(float));
    s.report.no_anchors = r.pod<bool>();
    s.report.iterations = r.pod<int32_t>();
    s.report.converged = r.pod<bool>();
    s.report.global_factor = r.pod<double>();
    s.report.anchor_count = r.pod<int32_t>();
    s.report.assigned_fraction = r.pod<double>();
    s.report.dissolved_clusters = r.pod<int32_t>();
    s.report.self_assigned_anchors = r.pod<int32_t>();
    s.report.max_anchor_residual = r.pod<double>();
    s.report.mean_anchor_residual = r.pod<double>();
    s.hpr_degenerate = r.pod<bool>();
    return s;
  }
};

struct FrameRuntime {
  std::string key;
  bool cache_hit = false;
  Intrinsics effective_intr;
  double tau = 0;
  // Small summaries kept in memory between passes.
  std::vector<AnchorPixel> anchors;
  std::vector<double> anchor_scores;
  std::vector<int32_t> visible;
  RefinementReport report;
  bool hpr_degenerate = false;
  FrameStrata strata;
  FrameBudget budget;
  FrameSampleResult samples;
  bool external_mask = false;
  int64_t mask_pixels = 0;
};

inline double peak_rss_mb() {
  rusage u{};
  getrusage(RUSAGE_SELF, &u);
  return static_cast<double>(u.ru_maxrss) / 1024.0;  // ru_maxrss is in KiB
}

inline std::filesystem::path resolve_cache_dir(const PipelineConfig& cfg) {
  if (cfg.cache_dir) return *cfg.cache_dir;
  if (const char* env = std::getenv("DENSIFY_CACHE_DIR"); env && *env)
    return std::filesystem::path(env);
  return cfg.out_dir / "cache";
}

inline Error frame_error(size_t index, const std::string& id, const Error& e) {
  return Error(e.kind(), e.code(),
               "frame " + std::to_string(index) + " (" + id + "): " + e.what());
}

// Loads image + depth for a frame and applies the configured resize.
struct LoadedFrame {
  ImageU8 image;
  DepthMap depth;
  Intrinsics intr;
};

inline LoadedFrame load_frame(const DatasetManifest& manifest, size_t i,
                              const PipelineConfig& cfg) {
  const FrameEntry& f = manifest.frames[i];
  LoadedFrame out;
  out.image = read_image_rgb8(manifest.resolve(f.image_path));
  if (out.image.width() != f.intrinsics.width ||
      out.image.height() != f.intrinsics.height)
    throw Error::data("image-dims",
                      f.image_path + " does not match the declared intrinsics");
  out.depth = load_depth(manifest.resolve(f.depth_path), f.intrinsics,
                         manifest.frame_depth_scale(i));
  out.intr = f.intrinsics;
  if (cfg.resize) {
    ResizedFrame r = resize_frame(out.image, out.depth, out.intr,
                                  cfg.resize->first, cfg.resize->second);
    out.image = std::move(r.image);
    out.depth = std::move(r.depth);
    out.intr = r.intrinsics;
  }
  return out;
}

inline std::string frame_cache_key(const PipelineConfig& cfg,
                                   const DatasetManifest& manifest, size_t i,
                                   const std::string& lidar_hash, double tau) {
  const FrameEntry& f = manifest.frames[i];
  ContentHash h;
  h.add_pod(kCacheFormat);
  h.add(lidar_hash);
  {
    const auto bytes = read_file_bytes(manifest.resolve(f.image_path));
    h.add_pod(static_cast<uint64_t>(bytes.size()));
    h.add_bytes(bytes.data(), bytes.size());
  }
  {
    const auto bytes = read_file_bytes(manifest.resolve(f.depth_path));
    h.add_pod(static_cast<uint64_t>(bytes.size()));
    h.add_bytes(bytes.data(), bytes.size());
  }
  const auto scale = manifest.frame_depth_scale(i);
  h.add_pod(scale.value_or(-1.0));
  h.add_pod(f.intrinsics.fx).add_pod(f.intrinsics.fy);
  h.add_pod(f.intrinsics.cx).add_pod(f.intrinsics.cy);
  h.add_pod(static_cast<int32_t>(f.intrinsics.width));
  h.add_pod(static_cast<int32_t>(f.intrinsics.height));
  const Eigen::Matrix4d m = f.pose.matrix();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) h.add_pod(m(r, c));
  h.add_pod(cfg.resize ? static_cast<int32_t>(cfg.resize->first) : -1);
  h.add_pod(cfg.resize ? static_cast<int32_t>(cfg.resize->second) : -1);
  h.add_pod(cfg.radius_exponent);
  h.add_pod(cfg.tol);
  h.add_pod(static_cast<int32_t>(cfg.max_iter));
  h.add_pod(tau);
  h.add_pod(cfg.depth_weight);
  h.add_pod(static_cast<int32_t>(cfg.kernel_size));
  return h.hex();
}

inline RoiMask frame_mask(const PipelineConfig& cfg,
                          const DatasetManifest& manifest, size_t i,
                          const LidarCloud& lidar,
                          const std::vector<int>& roi,
                          const FrameRuntime& rt) {
  if (cfg.mask_dir) {
    const auto path = *cfg.mask_dir / (manifest.frames[i].id + ".png");
    if (std::filesystem::exists(path)) {
      const Raster<uint8_t> raster = read_png_gray8(path);
      return ingest_external_mask(raster, rt.effective_intr.width,
                                  rt.effective_intr.height);
    }
  }
  if (roi.empty()) {
    RoiMask empty;
    empty.mask = Raster<uint8_t>(rt.effective_intr.width,
                                 rt.effective_intr.height, 0);
    empty.threshold_ratio = cfg.threshold_ratio;
    empty.dilation_radius = cfg.dilation_radius;
    return empty;
  }
  std::vector<int> visible(rt.visible.begin(), rt.visible.end());
  RoiMask mask =
      project_roi_mask(lidar, roi, visible, manifest.frames[i].pose,
                       rt.effective_intr, cfg.dilation_radius);
  mask.threshold_ratio = cfg.threshold_ratio;
  return mask;
}

inline void write_previews(const PipelineConfig& cfg,
                           const DatasetManifest& manifest, size_t i,
                           const ImageU8& image, const DepthMap& refined,
                           const RoiMask& mask) {
  namespace fs = std::filesystem;
  const std::string& id = manifest.frames[i].id;
  fs::create_directories(cfg.out_dir / "importance");
  fs::create_directories(cfg.out_dir / "masks");
  fs::create_directories(cfg.out_dir / "depth_refined");

  // Importance: linear gray, 255 at the per-frame max score.
  const PixelImportance pix = pixel_importance(image, cfg.kernel_size);
  float max_score = 0;
  for (size_t k = 0; k < pix.scores.size(); ++k)
    max_score = std::max(max_score, pix.scores[k]);
  Raster<uint8_t> heat(pix.scores.width(), pix.scores.height(), 0);
  if (max_score > 0)
    for (size_t k = 0; k < pix.scores.size(); ++k)
      heat[k] = static_cast<uint8_t>(
          std::lround(255.0 * pix.scores[k] / max_score));
  write_png_gray8(heat, cfg.out_dir / "importance" / (id + ".png"));

  // Mask: 0 / 255.
  write_png_gray8(mask.mask, cfg.out_dir / "masks" / (id + ".png"));

  // Refined depth: linear gray, 255 at the per-frame max depth.
  float max_depth = 0;
  for (size_t k = 0; k < refined.values.size(); ++k)
    max_depth = std::max(max_depth, refined.values[k]);
  Raster<uint8_t> dep(refined.width(), refined.height(), 0);
  if (max_depth > 0)
    for (size_t k = 0; k < refined.values.size(); ++k)
      dep[k] = static_cast<uint8_t>(
          std::lround(255.0 * refined.values[k] / max_depth));
  write_png_gray8(dep, cfg.out_dir / "depth_refined" / (id + ".png"));
}

}  // namespace pipeline_detail

// Dry-run validation: manifest structure, referenced files, pose rigidity,
// raster dimensions. No geometry is computed.
struct ValidationReport {
  bool ok = false;
  int frames = 0;
  std::vector<std::string> problems;
};

inline ValidationReport validate(const std::filesystem::path& manifest_path) {
  ValidationReport report;
  DatasetManifest manifest;
  try {
    manifest = load_manifest(manifest_path, CheckFiles::yes);
  } catch (const Error& e) {
    report.problems.push_back(e.what());
    return report;
  }
  report.frames = static_cast<int>(manifest.frames.size());
  try {
    read_lidar_ply(manifest.resolve(manifest.lidar_path));
  } catch (const Error& e) {
    report.problems.push_back(std::string("lidar: ") + e.what());
  }
  for (size_t i = 0; i < manifest.frames.size(); ++i) {
    const FrameEntry& f = manifest.frames[i];
    const std::string tag = "frame " + std::to_string(i) + " (" + f.id + "): ";
    try {
      const ImageU8 img = read_image_rgb8(manifest.resolve(f.image_path));
      if (img.width() != f.intrinsics.width ||
          img.height() != f.intrinsics.height)
        report.problems.push_back(tag + "image dimensions " +
                                  std::to_string(img.width()) + "x" +
                                  std::to_string(img.height()) +
                                  " do not match intrinsics");
    } catch (const Error& e) {
      report.problems.push_back(tag + e.what());
    }
    try {
      load_depth(manifest.resolve(f.depth_path), f.intrinsics,
                 manifest.frame_depth_scale(i));
    } catch (const Error& e) {
      report.problems.push_back(tag + e.what());
    }
  }
  report.ok = report.problems.empty();
  return report;
}

inline RunResult run(const PipelineConfig& cfg) {
  using namespace pipeline_detail;
  namespace fs = std::filesystem;
  const auto t_start = std::chrono::steady_clock::now();
  cfg.validate();
  fs::create_directories(cfg.out_dir);

  const DatasetManifest manifest = load_manifest(cfg.manifest_path);
  const int n_frames = static_cast<int>(manifest.frames.size());
  const fs::path lidar_file = manifest.resolve(manifest.lidar_path);
  const LidarCloud lidar = read_lidar_ply(lidar_file);
  const std::string lidar_hash = [&] {
    ContentHash h;
    const auto bytes = read_file_bytes(lidar_file);
    h.add_bytes(bytes.data(), bytes.size());
    return h.hex();
  }();

  const StageCache cache(resolve_cache_dir(cfg));

  // Bound frames in flight by the configured memory ceiling.
  int workers = cfg.effective_workers();
  if (cfg.memory_ceiling_mb > 0) {
    const Intrinsics& intr0 = manifest.frames[0].intrinsics;
    const int w = cfg.resize ? cfg.resize->first : intr0.width;
    const int h = cfg.resize ? cfg.resize->second : intr0.height;
    const double per_frame_mb =
        static_cast<double>(w) * h * 36.0 / (1024.0 * 1024.0);
    workers = std::max(
        1, std::min(workers, static_cast<int>(cfg.memory_ceiling_mb /
                                              std::max(per_frame_mb, 1.0))));
  }

  std::vector<FrameRuntime> frames(n_frames);
  const auto t_refine_start = std::chrono::steady_clock::now();

  // Pass 1: per-frame geometry + refinement + importance (content-cached).
  parallel_for(n_frames, workers, [&](int i) {
    FrameRuntime& rt = frames[i];
    const FrameEntry& entry = manifest.frames[i];
    try {
      rt.effective_intr =
          cfg.resize
              ? entry.intrinsics.scaled(
                    static_cast<double>(cfg.resize->first) /
                        entry.intrinsics.width,
                    static_cast<double>(cfg.resize->second) /
                        entry.intrinsics.height,
                    cfg.resize->first, cfg.resize->second)
              : entry.intrinsics;
      rt.tau = cfg.tau.value_or(0.05 * rt.effective_intr.diagonal());
      rt.key = frame_cache_key(cfg, manifest, i, lidar_hash, rt.tau);

      FrameStage stage;
      if (auto cached = cache.get("frame", rt.key)) {
        stage = FrameStage::deserialize(*cached);
        rt.cache_hit = true;
      } else {
        const LoadedFrame loaded = load_frame(manifest, i, cfg);
        const HprResult hpr = hidden_point_removal(
            lidar, entry.pose.camera_center(), cfg.radius_exponent);
        const AnchorMap anchors =
            rasterize_anchor_map(lidar, hpr.visible, entry.pose, loaded.intr);

        RefineParams params;
        params.tol = cfg.tol;
        params.max_iter = cfg.max_iter;
        params.tau = rt.tau;
        params.depth_weight = cfg.depth_weight;
        RefineResult refined = refine_frame(anchors, loaded.depth, params);

        stage.width = loaded.intr.width;
        stage.height = loaded.intr.height;
        stage.visible.assign(hpr.visible.begin(), hpr.visible.end());
        stage.hpr_degenerate = hpr.degenerate_fallback;
        stage.report = refined.report;
        stage.refined = std::move(refined.refined.values);
        if (!refined.report.no_anchors) {
          const PixelImportance pix =
              pixel_importance(loaded.image, cfg.kernel_size);
          const AnchorImportance ai =
              anchor_importance(refined.assignment, pix);
          stage.anchors = std::move(refined.assignment.anchors);
          stage.anchor_scores = ai.scores;
        }
        cache.put("frame", rt.key, stage.serialize());
      }
      rt.anchors = std::move(stage.anchors);
      rt.anchor_scores = std::move(stage.anchor_scores);
      rt.visible = std::move(stage.visible);
      rt.report = stage.report;
      rt.hpr_degenerate = stage.hpr_degenerate;
    } catch (const Error& e) {
      throw frame_error(i, entry.id, e);
    }
  });
  const auto t_refine_end = std::chrono::steady_clock::now();

  // Pass 2: spatial importance and ROI selection (ordered reduction).
  SpatialAccumulator accumulator(lidar.size());
  for (const FrameRuntime& rt : frames)
    if (!rt.report.no_anchors) accumulator.add_frame(rt.anchors, rt.anchor_scores);
  const SpatialImportance spatial = accumulator.finalize();

  RunResult result;
  result.frames = n_frames;
  std::vector<int> roi;
  double spatial_median = 0;
  try {
    roi = roi_select(spatial, cfg.threshold_ratio);
    std::vector<double> observed;
    for (size_t i = 0; i < spatial.per_point.size(); ++i)
      if (spatial.observation_count[i] > 0)
        observed.push_back(spatial.per_point[i]);
    spatial_median = median_inplace(observed);
  } catch (const Error& e) {
    if (e.code() != "empty-roi") throw;
    // Documented fallback: no usable importance signal -> every frame
    // samples uniformly as non-ROI.
    result.empty_roi_fallback = true;
  }

  // Pass 3a: masks + strata counts.
  const auto t_mask_start = std::chrono::steady_clock::now();
  parallel_for(n_frames, workers, [&](int i) {
    FrameRuntime& rt = frames[i];
    try {
      const auto cached = cache.get("frame", rt.key);
      if (!cached)
        throw Error::internal("cache-miss", "frame stage entry disappeared");
      const FrameStage stage = FrameStage::deserialize(*cached);
      const RoiMask mask = frame_mask(cfg, manifest, i, lidar, roi, rt);
      rt.external_mask = mask.external;
      rt.mask_pixels = mask.roi_pixels();
      for (int y = 0; y < stage.height; ++y)
        for (int x = 0; x < stage.width; ++x) {
          if (!(stage.refined.at(x, y) > 0.0f)) continue;
          (mask.mask.at(x, y) ? rt.strata.roi_pixels
                              : rt.strata.nonroi_pixels)++;
        }
    } catch (const Error& e) {
      throw frame_error(i, manifest.frames[i].id, e);
    }
  });

  // Pass 3b: budget allocation (single-threaded, deterministic).
  SamplingConfig sampling;
  sampling.total_budget = cfg.total_budget;
  sampling.density_ratio = cfg.density_ratio;
  sampling.seed = cfg.seed;
  sampling.per_frame_cap = cfg.per_frame_cap;
  sampling.dedup_voxel = cfg.dedup_voxel;
  std::vector<FrameStrata> strata(n_frames);
  for (int i = 0; i < n_frames; ++i) strata[i] = frames[i].strata;
  const AllocationResult allocation = allocate_frame_budgets(strata, sampling);
  result.budget_clipped = allocation.clipped;
  for (int i = 0; i < n_frames; ++i) frames[i].budget = allocation.budgets[i];

  // Pass 3c: sample, lift, optional previews.
  std::vector<SampledCloud> fragments(n_frames);
  parallel_for(n_frames, workers, [&](int i) {
    FrameRuntime& rt = frames[i];
    try {
      const auto cached = cache.get("frame", rt.key);
      if (!cached)
        throw Error::internal("cache-miss", "frame stage entry disappeared");
      const FrameStage stage = FrameStage::deserialize(*cached);
      DepthMap refined;
      refined.values = stage.refined;
      // A skipped (no-anchors) frame feeds sampling with its raw estimates.
      refined.stage = DepthStage::local;
      const RoiMask mask = frame_mask(cfg, manifest, i, lidar, roi, rt);
      rt.samples = sample_pixels(refined, &mask, rt.budget,
                                 frame_seed(cfg.seed, static_cast<uint64_t>(i)));
      const LoadedFrame loaded = load_frame(manifest, i, cfg);
      fragments[i] =
          lift_samples(rt.samples.pixels, refined, loaded.image,
                       manifest.frames[i].pose, rt.effective_intr, i);
      if (cfg.previews)
        write_previews(cfg, manifest, i, loaded.image, refined, mask);
    } catch (const Error& e) {
      throw frame_error(i, manifest.frames[i].id, e);
    }
  });
  const auto t_sample_end = std::chrono::steady_clock::now();

  // Fuse in frame order and write artifacts.
  const SampledCloud cloud = fuse(fragments, cfg.dedup_voxel);
  result.points = static_cast<int64_t>(cloud.size());
  result.ply_path = cfg.out_dir / "points.ply";
  write_ply(cloud, result.ply_path);

  nlohmann::json report;
  report["config"] = cfg.to_json();
  report["scene"] = manifest.scene;
  report["frame_count"] = n_frames;
  report["lidar_points"] = lidar.size();
  report["frames"] = nlohmann::json::array();
  for (int i = 0; i < n_frames; ++i) {
    const FrameRuntime& rt = frames[i];
    nlohmann::json jf;
    jf["id"] = manifest.frames[i].id;
    jf["anchors"] = rt.report.anchor_count;
    jf["no_anchors"] = rt.report.no_anchors;
    jf["iterations"] = rt.report.iterations;
    jf["converged"] = rt.report.converged;
    jf["global_factor"] = rt.report.global_factor;
    jf["assigned_fraction"] = rt.report.assigned_fraction;
    jf["dissolved_clusters"] = rt.report.dissolved_clusters;
    jf["self_assigned_anchors"] = rt.report.self_assigned_anchors;
    jf["max_anchor_residual"] = rt.report.max_anchor_residual;
    jf["mean_anchor_residual"] = rt.report.mean_anchor_residual;
    jf["hpr_degenerate"] = rt.hpr_degenerate;
    jf["external_mask"] = rt.external_mask;
    jf["mask_pixels"] = rt.mask_pixels;
    jf["strata"] = {{"roi", rt.strata.roi_pixels},
                    {"nonroi", rt.strata.nonroi_pixels}};
    jf["allocated"] = {{"roi", rt.budget.roi}, {"nonroi", rt.budget.nonroi}};
    jf["sampled"] = rt.samples.pixels.size();
    jf["shortfall"] = {{"roi", rt.samples.roi_shortfall},
                       {"nonroi", rt.samples.nonroi_shortfall}};
    report["frames"].push_back(std::move(jf));
  }
  report["spatial"] = {
      {"observed_points", spatial.observed()},
      {"roi_points", roi.size()},
      {"median_score", spatial_median},
      {"empty_roi_fallback", result.empty_roi_fallback},
      {"threshold_ratio", cfg.threshold_ratio}};
  report["sampling"] = {{"total_points", result.points},
                        {"budget", cfg.total_budget},
                        {"allocated", allocation.total},
                        {"clipped", allocation.clipped},
                        {"dedup_removed",
                         static_cast<int64_t>(allocation.total) - result.points}};

  const auto t_end = std::chrono::steady_clock::now();
  auto seconds = [](auto a, auto b) {
    return std::chrono::duration<double>(b - a).count();
  };
  int64_t cache_hits = 0;
  for (const FrameRuntime& rt : frames) cache_hits += rt.cache_hit ? 1 : 0;
  report["runtime"] = {
      {"wall_seconds", seconds(t_start, t_end)},
      {"refine_seconds", seconds(t_refine_start, t_refine_end)},
      {"mask_seconds", seconds(t_mask_start, t_sample_end)},
      {"peak_rss_mb", peak_rss_mb()},
      {"workers", workers},
      {"cache", {{"hits", cache_hits},
                 {"misses", static_cast<int64_t>(n_frames) - cache_hits},
                 {"dir", cache.dir().string()}}}};

  result.report_path = cfg.out_dir / "report.json";
  std::ofstream rf(result.report_path, std::ios::trunc);
  if (!rf)
    throw Error::data("write-failed",
                      "cannot write " + result.report_path.string());
  rf << report.dump(2) << "\n";
  return result;
}

}  // namespace densify

#endif  // DENSIFY_PIPELINE_PIPELINE_HPP

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "densify/densify.hpp"

namespace {

// Exit codes: 0 ok, 2 config error, 3 data error, 4 internal error.
int exit_code(densify::ErrorKind kind) {
  switch (kind) {
    case densify::ErrorKind::config: return 2;
    case densify::ErrorKind::data: return 3;
    case densify::ErrorKind::internal: return 4;
  }
  return 4;
}

std::optional<std::pair<int, int>> parse_resize(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos)
    throw densify::Error::config("bad-resize",
                                 "--resize expects WxH, e.g. 1600x1200");
  try {
    return std::make_pair(std::stoi(s.substr(0, x)),
                          std::stoi(s.substr(x + 1)));
  } catch (const std::exception&) {
    throw densify::Error::config("bad-resize",
                                 "--resize expects WxH, e.g. 1600x1200");
  }
}

int cmd_run(const densify::PipelineConfig& cfg) {
  const densify::RunResult result = densify::run(cfg);
  std::printf("frames: %d\n", result.frames);
  std::printf("points: %lld (budget %lld%s)\n",
              static_cast<long long>(result.points),
              static_cast<long long>(cfg.total_budget),
              result.budget_clipped ? ", clipped to available pixels" : "");
  if (result.empty_roi_fallback)
    std::printf("note: no usable importance signal; sampled uniformly\n");
  std::printf("wrote %s\n", result.ply_path.string().c_str());
  std::printf("wrote %s\n", result.report_path.string().c_str());
  return 0;
}

int cmd_validate(const std::string& manifest) {
  const densify::ValidationReport report = densify::validate(manifest);
  if (report.ok) {
    std::printf("ok: %d frames\n", report.frames);
    return 0;
  }
  for (const std::string& p : report.problems)
    std::fprintf(stderr, "problem: %s\n", p.c_str());
  return 3;
}

int cmd_synth(const std::string& spec, const std::string& out) {
  const densify::SynthScene scene = densify::load_scene_spec(spec);
  const densify::DatasetManifest manifest =
      densify::generate_dataset(scene, out);
  std::printf("generated %zu frames into %s\n", manifest.frames.size(),
              out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LiDAR-guided depth densification for 3DGS initialization"};
  app.require_subcommand(1);

  densify::PipelineConfig cfg;
  std::string manifest_arg, out_arg, resize_arg, mask_dir_arg, cache_dir_arg;
  double tau_arg = 0, dedup_arg = 0;
  long long frame_cap_arg = 0;

  auto* run_cmd = app.add_subcommand("run", "run the densification pipeline");
  run_cmd->add_option("--manifest", manifest_arg, "dataset manifest")
      ->required();
  run_cmd->add_option("--out", out_arg, "output directory")->required();
  run_cmd->add_option("--budget", cfg.total_budget, "total point budget");
  run_cmd->add_option("--ratio", cfg.density_ratio,
                      "ROI / non-ROI sampling density ratio");
  run_cmd->add_option("--kernel", cfg.kernel_size,
                      "color variance kernel size (odd)");
  run_cmd->add_option("--tau", tau_arg,
                      "cluster cutoff (default 0.05 * image diagonal)");
  run_cmd->add_option("--depth-weight", cfg.depth_weight,
                      "depth weight in the cluster metric");
  run_cmd->add_option("--threshold-ratio", cfg.threshold_ratio,
                      "ROI threshold as a ratio of the median score");
  run_cmd->add_option("--dilation", cfg.dilation_radius,
                      "ROI mask dilation radius in pixels");
  run_cmd->add_option("--seed", cfg.seed, "sampling seed");
  run_cmd->add_option("--resize", resize_arg, "downscale frames to WxH");
  run_cmd->add_option("--mask-dir", mask_dir_arg,
                      "directory of per-frame ROI mask overrides (<id>.png)");
  run_cmd->add_option("--dedup", dedup_arg, "dedup voxel size in meters");
  run_cmd->add_option("--workers", cfg.workers, "worker threads (0 = auto)");
  run_cmd->add_option("--max-iter", cfg.max_iter,
                      "global scaling iteration cap");
  run_cmd->add_option("--tol", cfg.tol, "global scaling tolerance");
  run_cmd->add_option("--radius-exponent", cfg.radius_exponent,
                      "hidden point removal radius exponent");
  run_cmd->add_option("--frame-cap", frame_cap_arg,
                      "max samples per frame (0 = off)");
  run_cmd->add_option("--cache-dir", cache_dir_arg,
                      "stage cache directory (default OUT/cache; "
                      "DENSIFY_CACHE_DIR overrides)");
  run_cmd->add_option("--memory-ceiling-mb", cfg.memory_ceiling_mb,
                      "bound frames in flight by this memory estimate");
  run_cmd->add_flag("--previews", cfg.previews,
                    "emit per-frame importance/mask/depth previews");

  std::string validate_manifest;
  auto* validate_cmd =
      app.add_subcommand("validate", "check a dataset without computing");
  validate_cmd->add_option("--manifest", validate_manifest, "dataset manifest")
      ->required();

  std::string synth_spec, synth_out;
  auto* synth_cmd =
      app.add_subcommand("synth", "render a synthetic dataset from a spec");
  synth_cmd->add_option("--spec", synth_spec, "scene spec file")->required();
  synth_cmd->add_option("--out", synth_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) {
      cfg.manifest_path = manifest_arg;
      cfg.out_dir = out_arg;
      if (!resize_arg.empty()) cfg.resize = parse_resize(resize_arg);
      if (tau_arg > 0) cfg.tau = tau_arg;
      if (dedup_arg > 0) cfg.dedup_voxel = dedup_arg;
      if (frame_cap_arg > 0) cfg.per_frame_cap = frame_cap_arg;
      if (!mask_dir_arg.empty()) cfg.mask_dir = mask_dir_arg;
      if (!cache_dir_arg.empty()) cfg.cache_dir = cache_dir_arg;
      return cmd_run(cfg);
    }
    if (validate_cmd->parsed()) return cmd_validate(validate_manifest);
    if (synth_cmd->parsed()) return cmd_synth(synth_spec, synth_out);
  } catch (const densify::Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", e.code().c_str(), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 4;
  }
  return 2;
}

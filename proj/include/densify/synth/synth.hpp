#ifndef DENSIFY_SYNTH_SYNTH_HPP
#define DENSIFY_SYNTH_SYNTH_HPP

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "densify/common.hpp"
#include "densify/geometry/camera.hpp"
#include "densify/geometry/lidar_cloud.hpp"
#include "densify/io/image_io.hpp"
#include "densify/io/manifest.hpp"
#include "densify/io/pfm.hpp"
#include "densify/io/ply.hpp"
#include "densify/refine/depth_map.hpp"

namespace densify {

enum class PrimitiveKind { plane, sphere, box };
enum class TextureKind { constant, checkerboard, noise };

struct TextureSpec {
  TextureKind kind = TextureKind::constant;
  Rgb8 color_a{170, 170, 170};
  Rgb8 color_b{40, 40, 40};
  double cell = 0.25;  // object units
  uint64_t seed = 0;
};

// plane: finite rectangle in the local z=0 plane, size = (sx, sy, _)
// sphere: centered at the local origin, size.x = radius
// box: axis-aligned in the local frame, size = (sx, sy, sz)
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::plane;
  Pose object_from_world;  // rigid map from world into the object frame
  Eigen::Vector3d size{1, 1, 1};
  TextureSpec texture;

  void validate() const {
    const bool ok = kind == PrimitiveKind::sphere
                        ? size.x() > 0
                        : kind == PrimitiveKind::plane
                              ? size.x() > 0 && size.y() > 0
                              : size.minCoeff() > 0;
    if (!ok)
      throw Error::data("degenerate-primitive",
                        "primitive sizes must be positive");
  }
};

struct CorruptionSpec {
  enum class Kind { none, global_scale, smooth_field };
  Kind kind = Kind::none;
  double factor = 1.0;  // global_scale
  // Separable low-frequency field: f(u,v) = gu(u) * gv(v) with
  // g(s) = 1 + amp * cos(2*pi*s/extent + phase). Amplitudes are bounded so
  // the product stays inside [0.8, 1.25].
  double amp_u = 0.1, amp_v = 0.08;
  double phase_u = 0.0, phase_v = 0.0;

  void validate() const {
    if (kind == Kind::global_scale && !(factor > 0))
      throw Error::config("bad-corruption", "global factor must be > 0");
    if (kind == Kind::smooth_field) {
      if (amp_u < 0 || amp_v < 0)
        throw Error::config("bad-corruption", "field amplitudes must be >= 0");
      if ((1 + amp_u) * (1 + amp_v) > 1.25 ||
          (1 - amp_u) * (1 - amp_v) < 0.8)
        throw Error::config("bad-corruption",
                            "field must stay within [0.8, 1.25]");
    }
  }

  double field_value(int x, int y, int width, int height) const {
    switch (kind) {
      case Kind::none: return 1.0;
      case Kind::global_scale: return factor;
      case Kind::smooth_field: {
        const double gu =
            1.0 + amp_u * std::cos(2.0 * std::numbers::pi * x / width + phase_u);
        const double gv =
            1.0 + amp_v * std::cos(2.0 * std::numbers::pi * y / height + phase_v);
        return gu * gv;
      }
    }
    return 1.0;
  }
};

struct SynthScene {
  std::string name = "synthetic";
  Intrinsics intrinsics;
  std::vector<Primitive> primitives;
  std::vector<Pose> trajectory;  // camera-from-world
  CorruptionSpec corruption;
  double lidar_fraction = 0.01;
  double lidar_range = 5.0;  // meters
  uint64_t seed = 0;

  void validate() const {
    intrinsics.validate();
    if (primitives.empty())
      throw Error::data("empty-scene", "scene needs at least one primitive");
    if (trajectory.empty())
      throw Error::data("empty-scene", "scene needs at least one pose");
    for (const Primitive& p : primitives) p.validate();
    corruption.validate();
    if (!(lidar_fraction > 0 && lidar_fraction <= 1))
      throw Error::config("bad-fraction", "lidar fraction must be in (0, 1]");
  }
};

namespace synth_detail {

constexpr double kRayEps = 1e-9;

// Ray in object coordinates; t is the camera-z parameter (direction carries
// unit camera z).
inline std::optional<double> intersect(const Primitive& prim,
                                       const Eigen::Vector3d& o,
                                       const Eigen::Vector3d& d) {
  switch (prim.kind) {
    case PrimitiveKind::plane: {
      if (std::abs(d.z()) < 1e-15) return std::nullopt;
      const double t = -o.z() / d.z();
      if (t <= kRayEps) return std::nullopt;
      const Eigen::Vector3d p = o + t * d;
      if (std::abs(p.x()) > prim.size.x() / 2 ||
          std::abs(p.y()) > prim.size.y() / 2)
        return std::nullopt;
      return t;
    }
    case PrimitiveKind::sphere: {
      const double a = d.squaredNorm();
      const double b = 2.0 * o.dot(d);
      const double c = o.squaredNorm() - prim.size.x() * prim.size.x();
      const double disc = b * b - 4 * a * c;
      if (disc < 0) return std::nullopt;
      const double sq = std::sqrt(disc);
      const double t0 = (-b - sq) / (2 * a);
      const double t1 = (-b + sq) / (2 * a);
      if (t0 > kRayEps) return t0;
      if (t1 > kRayEps) return t1;
      return std::nullopt;
    }
    case PrimitiveKind::box: {
      double tmin = -std::numeric_limits<double>::infinity();
      double tmax = std::numeric_limits<double>::infinity();
      for (int a = 0; a < 3; ++a) {
        const double half = prim.size[a] / 2;
        if (std::abs(d[a]) < 1e-15) {
          if (std::abs(o[a]) > half) return std::nullopt;
          continue;
        }
        double t0 = (-half - o[a]) / d[a];
        double t1 = (half - o[a]) / d[a];
        if (t0 > t1) std::swap(t0, t1);
        tmin = std::max(tmin, t0);
        tmax = std::min(tmax, t1);
        if (tmin > tmax) return std::nullopt;
      }
      if (tmin > kRayEps) return tmin;
      if (tmax > kRayEps) return tmax;
      return std::nullopt;
    }
  }
  return std::nullopt;
}

inline Rgb8 texture_color(const TextureSpec& tex, const Eigen::Vector3d& p_obj) {
  switch (tex.kind) {
    case TextureKind::constant: return tex.color_a;
    case TextureKind::checkerboard: {
      const int64_t parity =
          static_cast<int64_t>(std::floor(p_obj.x() / tex.cell)) +
          static_cast<int64_t>(std::floor(p_obj.y() / tex.cell)) +
          static_cast<int64_t>(std::floor(p_obj.z() / tex.cell));
      return (parity & 1) ? tex.color_b : tex.color_a;
    }
    case TextureKind::noise: {
      uint64_t h = tex.seed;
      for (int a = 0; a < 3; ++a)
        h = hash_combine(h, static_cast<uint64_t>(static_cast<int64_t>(
                                std::floor(p_obj[a] / tex.cell))));
      SplitMix64 rng(h);
      const uint64_t v = rng.next();
      return Rgb8{static_cast<uint8_t>(v & 0xff),
                  static_cast<uint8_t>((v >> 8) & 0xff),
                  static_cast<uint8_t>((v >> 16) & 0xff)};
    }
  }
  return tex.color_a;
}

struct Hit {
  double t = 0;  // camera-space depth
  int prim = -1;
  Eigen::Vector3d p_obj = Eigen::Vector3d::Zero();
};

inline std::optional<Hit> trace(const SynthScene& scene,
                                const Eigen::Vector3d& center_world,
                                const Eigen::Vector3d& dir_world) {
  std::optional<Hit> best;
  for (size_t k = 0; k < scene.primitives.size(); ++k) {
    const Primitive& prim = scene.primitives[k];
    const Eigen::Vector3d o = prim.object_from_world.to_camera(center_world);
    const Eigen::Vector3d d = prim.object_from_world.rotation() * dir_world;
    const auto t = intersect(prim, o, d);
    if (t && (!best || *t < best->t))
      best = Hit{*t, static_cast<int>(k), o + *t * d};
  }
  return best;
}

}  // namespace synth_detail

struct RenderedFrame {
  DepthMap depth;  // stage = raw; exact camera-space z, background invalid
  ImageU8 image;
};

inline RenderedFrame render_frame(const SynthScene& scene, const Pose& pose,
                                  const Intrinsics& intr) {
  RenderedFrame out;
  out.depth.values = Raster<float>(intr.width, intr.height, 0.0f);
  out.depth.stage = DepthStage::raw;
  out.image = ImageU8(intr.width, intr.height, Rgb8{0, 0, 0});
  const Eigen::Vector3d center = pose.camera_center();
  const Eigen::Matrix3d r_wc = pose.rotation().transpose();
  for (int y = 0; y < intr.height; ++y)
    for (int x = 0; x < intr.width; ++x) {
      const Eigen::Vector3d dir_cam((x - intr.cx) / intr.fx,
                                    (y - intr.cy) / intr.fy, 1.0);
      const auto hit = synth_detail::trace(scene, center, r_wc * dir_cam);
      if (!hit) continue;
      out.depth.values.at(x, y) = static_cast<float>(hit->t);
      out.image.at(x, y) = synth_detail::texture_color(
          scene.primitives[hit->prim].texture, hit->p_obj);
    }
  return out;
}

inline DepthMap render_depth(const SynthScene& scene, const Pose& pose,
                             const Intrinsics& intr) {
  return render_frame(scene, pose, intr).depth;
}

inline ImageU8 render_color(const SynthScene& scene, const Pose& pose,
                            const Intrinsics& intr) {
  return render_frame(scene, pose, intr).image;
}

// Bernoulli subsampling of exact surface points within the range cutoff.
inline LidarCloud sample_lidar(const SynthScene& scene, const Pose& pose,
                               const Intrinsics& intr, double fraction,
                               double range_cutoff, uint64_t seed) {
  if (!(fraction > 0 && fraction <= 1))
    throw Error::config("bad-fraction", "lidar fraction must be in (0, 1]");
  LidarCloud cloud;
  SplitMix64 rng(seed);
  const Eigen::Vector3d center = pose.camera_center();
  const Eigen::Matrix3d r_wc = pose.rotation().transpose();
  for (int y = 0; y < intr.height; ++y)
    for (int x = 0; x < intr.width; ++x) {
      const double draw = rng.uniform();  // one draw per pixel, always
      const Eigen::Vector3d dir_cam((x - intr.cx) / intr.fx,
                                    (y - intr.cy) / intr.fy, 1.0);
      const Eigen::Vector3d dir_world = r_wc * dir_cam;
      const auto hit = synth_detail::trace(scene, center, dir_world);
      if (!hit) continue;
      if (draw >= fraction) continue;
      const Eigen::Vector3d p = center + hit->t * dir_world;
      if ((p - center).norm() > range_cutoff) continue;
      cloud.points.push_back(p);
    }
  return cloud;
}

inline DepthMap corrupt_depth(const DepthMap& depth,
                              const CorruptionSpec& spec) {
  require_stage(depth, DepthStage::raw, "corrupt_depth");
  spec.validate();
  DepthMap out = depth;
  if (spec.kind == CorruptionSpec::Kind::none) return out;
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) {
      const float v = out.values.at(x, y);
      if (v > 0.0f)
        out.values.at(x, y) = static_cast<float>(
            v * spec.field_value(x, y, out.width(), out.height()));
    }
  return out;
}

// ---- scene spec file (JSON, same schema family as the dataset manifest) ----

namespace synth_detail {

inline std::vector<double> pose_to_16(const Pose& p) {
  const Eigen::Matrix4d m = p.matrix();
  std::vector<double> v(16);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) v[r * 4 + c] = m(r, c);
  return v;
}

}  // namespace synth_detail

inline SynthScene load_scene_spec(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f)
    throw Error::data("missing-file", "cannot open scene spec " + path.string());
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error::data("scene-parse",
                      "malformed scene spec " + path.string() + ": " + e.what());
  }

  SynthScene scene;
  try {
    scene.name = j.value("name", std::string("synthetic"));
    scene.seed = j.value("seed", uint64_t{0});
    const auto& ji = j.at("intrinsics");
    scene.intrinsics = Intrinsics{ji.at("fx").get<double>(),
                                  ji.at("fy").get<double>(),
                                  ji.at("cx").get<double>(),
                                  ji.at("cy").get<double>(),
                                  ji.at("width").get<int>(),
                                  ji.at("height").get<int>()};
    if (j.contains("lidar")) {
      scene.lidar_fraction = j["lidar"].value("fraction", 0.01);
      scene.lidar_range = j["lidar"].value("range", 5.0);
    }
    if (j.contains("corruption")) {
      const auto& jc = j["corruption"];
      const std::string kind = jc.value("kind", std::string("none"));
      if (kind == "none") {
        scene.corruption.kind = CorruptionSpec::Kind::none;
      } else if (kind == "global_scale") {
        scene.corruption.kind = CorruptionSpec::Kind::global_scale;
        scene.corruption.factor = jc.at("factor").get<double>();
      } else if (kind == "smooth_field") {
        scene.corruption.kind = CorruptionSpec::Kind::smooth_field;
        scene.corruption.amp_u = jc.value("amp_u", 0.1);
        scene.corruption.amp_v = jc.value("amp_v", 0.08);
        scene.corruption.phase_u = jc.value("phase_u", 0.0);
        scene.corruption.phase_v = jc.value("phase_v", 0.0);
      } else {
        throw Error::data("scene-parse", "unknown corruption kind " + kind);
      }
    }
    auto parse_color = [](const nlohmann::json& ja) {
      return Rgb8{ja.at(0).get<uint8_t>(), ja.at(1).get<uint8_t>(),
                  ja.at(2).get<uint8_t>()};
    };
    for (const auto& jp : j.at("primitives")) {
      Primitive prim;
      const std::string kind = jp.at("kind").get<std::string>();
      prim.kind = kind == "plane" ? PrimitiveKind::plane
                  : kind == "sphere" ? PrimitiveKind::sphere
                  : kind == "box" ? PrimitiveKind::box
                  : throw Error::data("scene-parse",
                                      "unknown primitive kind " + kind);
      const auto sz = jp.at("size").get<std::vector<double>>();
      for (size_t a = 0; a < std::min<size_t>(3, sz.size()); ++a)
        prim.size[a] = sz[a];
      prim.object_from_world = manifest_detail::parse_pose(
          jp.at("pose").get<std::vector<double>>(), false, 0);
      if (jp.contains("texture")) {
        const auto& jt = jp["texture"];
        const std::string tk = jt.value("kind", std::string("constant"));
        prim.texture.kind = tk == "constant" ? TextureKind::constant
                            : tk == "checkerboard" ? TextureKind::checkerboard
                            : tk == "noise" ? TextureKind::noise
                            : throw Error::data("scene-parse",
                                                "unknown texture kind " + tk);
        if (jt.contains("color_a")) prim.texture.color_a = parse_color(jt["color_a"]);
        if (jt.contains("color_b")) prim.texture.color_b = parse_color(jt["color_b"]);
        prim.texture.cell = jt.value("cell", 0.25);
        prim.texture.seed = jt.value("seed", uint64_t{0});
      }
      scene.primitives.push_back(std::move(prim));
    }
    for (const auto& jt : j.at("trajectory"))
      scene.trajectory.push_back(manifest_detail::parse_pose(
          jt.get<std::vector<double>>(), false, scene.trajectory.size()));
  } catch (const nlohmann::json::exception& e) {
    throw Error::data("scene-parse", std::string("malformed scene spec: ") +
                                         e.what());
  }
  scene.validate();
  return scene;
}

inline void save_scene_spec(const SynthScene& scene,
                            const std::filesystem::path& path) {
  nlohmann::json j;
  j["name"] = scene.name;
  j["seed"] = scene.seed;
  j["intrinsics"] = {{"fx", scene.intrinsics.fx}, {"fy", scene.intrinsics.fy},
                     {"cx", scene.intrinsics.cx}, {"cy", scene.intrinsics.cy},
                     {"width", scene.intrinsics.width},
                     {"height", scene.intrinsics.height}};
  j["lidar"] = {{"fraction", scene.lidar_fraction},
                {"range", scene.lidar_range}};
  switch (scene.corruption.kind) {
    case CorruptionSpec::Kind::none:
      j["corruption"] = {{"kind", "none"}};
      break;
    case CorruptionSpec::Kind::global_scale:
      j["corruption"] = {{"kind", "global_scale"},
                         {"factor", scene.corruption.factor}};
      break;
    case CorruptionSpec::Kind::smooth_field:
      j["corruption"] = {{"kind", "smooth_field"},
                         {"amp_u", scene.corruption.amp_u},
                         {"amp_v", scene.corruption.amp_v},
                         {"phase_u", scene.corruption.phase_u},
                         {"phase_v", scene.corruption.phase_v}};
      break;
  }
  j["primitives"] = nlohmann::json::array();
  for (const Primitive& p : scene.primitives) {
    nlohmann::json jp;
    jp["kind"] = p.kind == PrimitiveKind::plane ? "plane"
                 : p.kind == PrimitiveKind::sphere ? "sphere" : "box";
    jp["size"] = {p.size.x(), p.size.y(), p.size.z()};
    jp["pose"] = synth_detail::pose_to_16(p.object_from_world);
    jp["texture"] = {
        {"kind", p.texture.kind == TextureKind::constant ? "constant"
                 : p.texture.kind == TextureKind::checkerboard ? "checkerboard"
                                                               : "noise"},
        {"color_a", {p.texture.color_a.r, p.texture.color_a.g, p.texture.color_a.b}},
        {"color_b", {p.texture.color_b.r, p.texture.color_b.g, p.texture.color_b.b}},
        {"cell", p.texture.cell},
        {"seed", p.texture.seed}};
    j["primitives"].push_back(std::move(jp));
  }
  j["trajectory"] = nlohmann::json::array();
  for (const Pose& p : scene.trajectory)
    j["trajectory"].push_back(synth_detail::pose_to_16(p));

  std::ofstream f(path, std::ios::trunc);
  if (!f)
    throw Error::data("write-failed",
                      "cannot open " + path.string() + " for writing");
  f << j.dump(2) << "\n";
}

// Renders the scene into an on-disk dataset: RGB PNGs, corrupted depth PFMs
// (the "estimated" inputs), ground-truth depth PFMs, the union LiDAR cloud,
// and a manifest. Fails if primitives are out of frame in more than 20% of
// the trajectory.
inline DatasetManifest generate_dataset(const SynthScene& scene,
                                        const std::filesystem::path& out_dir) {
  scene.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "rgb");
  fs::create_directories(out_dir / "depth");
  fs::create_directories(out_dir / "gt_depth");

  DatasetManifest manifest;
  manifest.scene = scene.name;
  manifest.lidar_path = "lidar.ply";
  manifest.base_dir = out_dir;

  LidarCloud lidar;
  int covered_frames = 0;
  char name[32];
  for (size_t k = 0; k < scene.trajectory.size(); ++k) {
    const Pose& pose = scene.trajectory[k];
    std::snprintf(name, sizeof(name), "frame_%04zu", k);
    const RenderedFrame rendered =
        render_frame(scene, pose, scene.intrinsics);
    if (rendered.depth.valid_count() > 0) ++covered_frames;

    const DepthMap corrupted = corrupt_depth(rendered.depth, scene.corruption);
    write_png_rgb8(rendered.image, out_dir / "rgb" / (std::string(name) + ".png"));
    write_pfm(corrupted.values, out_dir / "depth" / (std::string(name) + ".pfm"));
    write_pfm(rendered.depth.values,
              out_dir / "gt_depth" / (std::string(name) + ".pfm"));

    const LidarCloud scan =
        sample_lidar(scene, pose, scene.intrinsics, scene.lidar_fraction,
                     scene.lidar_range, hash_combine(scene.seed, k));
    lidar.points.insert(lidar.points.end(), scan.points.begin(),
                        scan.points.end());

    FrameEntry f;
    f.id = name;
    f.image_path = "rgb/" + std::string(name) + ".png";
    f.depth_path = "depth/" + std::string(name) + ".pfm";
    f.intrinsics = scene.intrinsics;
    f.pose = pose;
    manifest.frames.push_back(std::move(f));
  }

  if (covered_frames * 5 < static_cast<int>(scene.trajectory.size()) * 4)
    throw Error::data("scene-coverage",
                      "primitives visible in fewer than 80% of frames");
  if (lidar.points.empty())
    throw Error::data("empty-cloud", "no LiDAR point survived sampling");

  write_lidar_ply(lidar, out_dir / "lidar.ply");
  save_manifest(manifest, out_dir / "manifest.json");
  save_scene_spec(scene, out_dir / "scene.json");
  return manifest;
}

}  // namespace densify

#endif  // DENSIFY_SYNTH_SYNTH_HPP

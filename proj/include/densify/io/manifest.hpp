#ifndef DENSIFY_IO_MANIFEST_HPP
#define DENSIFY_IO_MANIFEST_HPP

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "densify/common.hpp"
#include "densify/geometry/camera.hpp"
#include "densify/io/image_io.hpp"
#include "densify/io/pfm.hpp"
#include "densify/refine/depth_map.hpp"

namespace densify {

struct FrameEntry {
  std::string id;
  std::string image_path;  // relative to the manifest directory
  std::string depth_path;
  Intrinsics intrinsics;
  Pose pose;  // camera-from-world after loading
  std::optional<double> depth_scale;  // overrides the manifest default
};

struct DatasetManifest {
  int schema_version = 1;
  std::string scene;
  std::string lidar_path;
  std::optional<double> depth_scale;  // default for 16-bit PNG depth
  std::vector<FrameEntry> frames;
  std::filesystem::path base_dir;  // directory of the manifest file; not serialized

  std::filesystem::path resolve(const std::string& rel) const {
    std::filesystem::path p(rel);
    return p.is_absolute() ? p : base_dir / p;
  }
  std::optional<double> frame_depth_scale(size_t i) const {
    return frames[i].depth_scale ? frames[i].depth_scale : depth_scale;
  }
};

namespace manifest_detail {

// Accept the pose if already rigid; re-orthonormalize mild drift (< 1e-3);
// reject anything worse or left-handed.
inline Pose parse_pose(const std::vector<double>& m, bool world_from_camera,
                       size_t frame_index) {
  auto fail = [&](const std::string& why) -> Error {
    return Error::data("non-rigid-pose",
                       "frame " + std::to_string(frame_index) + ": " + why);
  };
  if (m.size() != 16) throw fail("pose must have 16 entries (row-major 4x4)");
  for (double v : m)
    if (!std::isfinite(v)) throw fail("pose contains a non-finite value");
  if (std::abs(m[12]) > 1e-9 || std::abs(m[13]) > 1e-9 ||
      std::abs(m[14]) > 1e-9 || std::abs(m[15] - 1.0) > 1e-9)
    throw fail("bottom row must be (0, 0, 0, 1)");

  Eigen::Matrix3d r;
  r << m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10];
  const Eigen::Vector3d t(m[3], m[7], m[11]);
  if (r.determinant() <= 0)
    throw fail("rotation determinant is not positive (reflection)");
  const double drift =
      (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (drift >= 1e-3)
    throw fail("rotation drift " + std::to_string(drift) + " exceeds 1e-3");
  if (drift > Pose::kRigidTol) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(
        r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() <= 0) throw fail("re-orthonormalization failed");
  }
  Pose pose(r, t);
  return world_from_camera ? pose.inverse() : pose;
}

}  // namespace manifest_detail

enum class CheckFiles { yes, no };

inline DatasetManifest parse_manifest_json(const nlohmann::json& j,
                                           const std::filesystem::path& base_dir,
                                           CheckFiles check = CheckFiles::yes) {
  DatasetManifest m;
  m.base_dir = base_dir;
  try {
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != 1)
      throw Error::data("manifest-version",
                        "unsupported schema_version " +
                            std::to_string(m.schema_version));
    m.scene = j.value("scene", std::string());
    m.lidar_path = j.at("lidar").get<std::string>();
    if (j.contains("depth_scale"))
      m.depth_scale = j.at("depth_scale").get<double>();
    const bool world_from_camera =
        j.value("pose_convention", std::string("camera_from_world")) ==
        "world_from_camera";

    const auto& frames = j.at("frames");
    if (!frames.is_array() || frames.empty())
      throw Error::data("manifest-frames", "manifest needs at least one frame");
    std::set<std::string> ids;
    for (size_t i = 0; i < frames.size(); ++i) {
      const auto& jf = frames[i];
      FrameEntry f;
      f.id = jf.at("id").get<std::string>();
      if (!ids.insert(f.id).second)
        throw Error::data("manifest-frames",
                          "duplicate frame id '" + f.id + "'");
      f.image_path = jf.at("image").get<std::string>();
      f.depth_path = jf.at("depth").get<std::string>();
      const auto& ji = jf.at("intrinsics");
      f.intrinsics = Intrinsics{ji.at("fx").get<double>(),
                                ji.at("fy").get<double>(),
                                ji.at("cx").get<double>(),
                                ji.at("cy").get<double>(),
                                ji.at("width").get<int>(),
                                ji.at("height").get<int>()};
      try {
        f.intrinsics.validate();
      } catch (const Error& e) {
        throw Error::data(e.code(), "frame " + std::to_string(i) + ": " +
                                        e.what());
      }
      f.pose = manifest_detail::parse_pose(
          jf.at("pose").get<std::vector<double>>(), world_from_camera, i);
      if (jf.contains("depth_scale"))
        f.depth_scale = jf.at("depth_scale").get<double>();
      m.frames.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error::data("manifest-parse", std::string("malformed manifest: ") +
                                            e.what());
  }

  if (check == CheckFiles::yes) {
    if (!std::filesystem::exists(m.resolve(m.lidar_path)))
      throw Error::data("missing-file",
                        "lidar cloud not found: " + m.lidar_path);
    for (size_t i = 0; i < m.frames.size(); ++i) {
      for (const std::string* p :
           {&m.frames[i].image_path, &m.frames[i].depth_path})
        if (!std::filesystem::exists(m.resolve(*p)))
          throw Error::data("missing-file", "frame " + std::to_string(i) +
                                                ": file not found: " + *p);
    }
  }
  return m;
}

inline DatasetManifest load_manifest(const std::filesystem::path& path,
                                     CheckFiles check = CheckFiles::yes) {
  std::ifstream f(path);
  if (!f)
    throw Error::data("missing-file", "cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error::data("manifest-parse",
                      "malformed manifest " + path.string() + ": " + e.what());
  }
  return parse_manifest_json(j, path.parent_path(), check);
}

inline nlohmann::json manifest_to_json(const DatasetManifest& m) {
  nlohmann::json j;
  j["schema_version"] = m.schema_version;
  j["scene"] = m.scene;
  j["lidar"] = m.lidar_path;
  j["pose_convention"] = "camera_from_world";
  if (m.depth_scale) j["depth_scale"] = *m.depth_scale;
  j["frames"] = nlohmann::json::array();
  for (const FrameEntry& f : m.frames) {
    nlohmann::json jf;
    jf["id"] = f.id;
    jf["image"] = f.image_path;
    jf["depth"] = f.depth_path;
    jf["intrinsics"] = {{"fx", f.intrinsics.fx}, {"fy", f.intrinsics.fy},
                        {"cx", f.intrinsics.cx}, {"cy", f.intrinsics.cy},
                        {"width", f.intrinsics.width},
                        {"height", f.intrinsics.height}};
    const Eigen::Matrix4d mat = f.pose.matrix();
    std::vector<double> pose16(16);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) pose16[r * 4 + c] = mat(r, c);
    jf["pose"] = pose16;
    if (f.depth_scale) jf["depth_scale"] = *f.depth_scale;
    j["frames"].push_back(std::move(jf));
  }
  return j;
}

inline void save_manifest(const DatasetManifest& m,
                          const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f)
    throw Error::data("write-failed",
                      "cannot open " + path.string() + " for writing");
  f << manifest_to_json(m).dump(2) << "\n";
  if (!f)
    throw Error::data("write-failed", "failed writing " + path.string());
}

// Depth ingestion: PFM carries meters directly; 16-bit PNG needs a declared
// depth_scale (e.g. 0.001 for millimeter quantization). Non-positive and
// non-finite samples become invalid (0).
inline DepthMap load_depth(const std::filesystem::path& path,
                           const Intrinsics& intr,
                           std::optional<double> depth_scale) {
  DepthMap depth;
  const std::string ext = path.extension().string();
  if (ext == ".pfm" || ext == ".PFM") {
    depth.values = read_pfm(path);
  } else if (ext == ".png" || ext == ".PNG") {
    if (!depth_scale)
      throw Error::data("depth-scale-missing",
                        "16-bit PNG depth requires depth_scale: " +
                            path.string());
    const Raster<uint16_t> raw = read_png_gray16(path);
    depth.values = Raster<float>(raw.width(), raw.height(), 0.0f);
    for (size_t i = 0; i < raw.size(); ++i)
      depth.values[i] = static_cast<float>(raw[i] * *depth_scale);
  } else {
    throw Error::data("depth-format",
                      "unsupported depth format '" + ext + "': " +
                          path.string());
  }
  if (depth.values.width() != intr.width ||
      depth.values.height() != intr.height)
    throw Error::data(
        "depth-dims", path.string() + " is " +
                          std::to_string(depth.values.width()) + "x" +
                          std::to_string(depth.values.height()) +
                          " but intrinsics declare " +
                          std::to_string(intr.width) + "x" +
                          std::to_string(intr.height));
  for (size_t i = 0; i < depth.values.size(); ++i)
    if (!std::isfinite(depth.values[i]) || depth.values[i] <= 0.0f)
      depth.values[i] = 0.0f;
  depth.stage = DepthStage::raw;
  return depth;
}

}  // namespace densify

#endif  // DENSIFY_IO_MANIFEST_HPP

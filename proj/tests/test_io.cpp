#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "densify/io/image_io.hpp"
#include "densify/io/manifest.hpp"
#include "densify/io/pfm.hpp"
#include "densify/io/ply.hpp"
#include "densify/io/resize.hpp"
#include "test_util.hpp"

using namespace densify;

namespace {

SampledCloud random_cloud(SplitMix64& rng, size_t n) {
  SampledCloud cloud;
  for (size_t i = 0; i < n; ++i) {
    cloud.positions.push_back(
        {static_cast<float>(rng.uniform() * 20 - 10),
         static_cast<float>(rng.uniform() * 20 - 10),
         static_cast<float>(rng.uniform() * 20 - 10)});
    cloud.colors.push_back(Rgb8{static_cast<uint8_t>(rng.bounded(256)),
                                static_cast<uint8_t>(rng.bounded(256)),
                                static_cast<uint8_t>(rng.bounded(256))});
    cloud.provenance.push_back({});
  }
  return cloud;
}

DatasetManifest random_manifest(SplitMix64& rng, int n_frames) {
  DatasetManifest m;
  m.scene = "fuzz-" + std::to_string(rng.bounded(1000));
  m.lidar_path = "lidar.ply";
  if (rng.uniform() < 0.5) m.depth_scale = 0.001 * (1 + rng.bounded(10));
  for (int i = 0; i < n_frames; ++i) {
    FrameEntry f;
    f.id = "frame_" + std::to_string(i);
    f.image_path = "rgb/" + std::to_string(i) + ".png";
    f.depth_path = "depth/" + std::to_string(i) + ".pfm";
    f.intrinsics = {400 + rng.uniform() * 100, 400 + rng.uniform() * 100,
                    200 + rng.uniform() * 50, 150 + rng.uniform() * 50,
                    640, 480};
    f.pose = testutil::random_pose(rng);
    if (rng.uniform() < 0.3) f.depth_scale = 0.001;
    m.frames.push_back(std::move(f));
  }
  return m;
}

bool manifests_equal(const DatasetManifest& a, const DatasetManifest& b) {
  if (a.scene != b.scene || a.lidar_path != b.lidar_path ||
      a.depth_scale != b.depth_scale || a.frames.size() != b.frames.size())
    return false;
  for (size_t i = 0; i < a.frames.size(); ++i) {
    const FrameEntry& fa = a.frames[i];
    const FrameEntry& fb = b.frames[i];
    if (fa.id != fb.id || fa.image_path != fb.image_path ||
        fa.depth_path != fb.depth_path || !(fa.intrinsics == fb.intrinsics) ||
        fa.depth_scale != fb.depth_scale)
      return false;
    if (fa.pose.matrix() != fb.pose.matrix()) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("ply write/read round trip is bitwise lossless") {
  testutil::TempDir tmp("ply");
  SplitMix64 rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    const SampledCloud cloud = random_cloud(rng, 1 + rng.bounded(200));
    const auto path = tmp.path() / "cloud.ply";
    write_ply(cloud, path);
    const SampledCloud back = read_ply_as_sampled(path);
    REQUIRE(back.size() == cloud.size());
    CHECK(back.positions == cloud.positions);
    CHECK(back.colors == cloud.colors);
  }
}

TEST_CASE("ply header declares the exact vertex count") {
  testutil::TempDir tmp("plyhdr");
  SplitMix64 rng(102);
  const SampledCloud cloud = random_cloud(rng, 123);
  const auto path = tmp.path() / "cloud.ply";
  write_ply(cloud, path);
  std::ifstream f(path, std::ios::binary);
  std::string line, header;
  while (std::getline(f, line) && line != "end_header") header += line + "\n";
  CHECK(header.find("element vertex 123\n") != std::string::npos);
  CHECK(header.find("format binary_little_endian 1.0\n") != std::string::npos);
}

TEST_CASE("writing an empty cloud is an error") {
  testutil::TempDir tmp("plyempty");
  SampledCloud empty;
  CHECK_THROWS_AS(write_ply(empty, tmp.path() / "x.ply"), Error);
}

TEST_CASE("ascii ply and double precision properties are accepted") {
  testutil::TempDir tmp("plyascii");
  const auto path = tmp.path() / "ascii.ply";
  {
    std::ofstream f(path);
    f << "ply\nformat ascii 1.0\ncomment synthetic\n"
      << "element vertex 2\nproperty double x\nproperty double y\n"
      << "property double z\nend_header\n"
      << "1.5 2.5 3.5\n-1 -2 -3\n";
  }
  const PlyCloud cloud = read_ply(path);
  REQUIRE(cloud.positions.size() == 2);
  CHECK(cloud.positions[0][0] == 1.5f);
  CHECK(cloud.positions[1][2] == -3.0f);
  CHECK_FALSE(cloud.has_colors);
}

TEST_CASE("pfm round trip preserves float bits") {
  testutil::TempDir tmp("pfm");
  SplitMix64 rng(103);
  Raster<float> raster(33, 21);
  for (size_t i = 0; i < raster.size(); ++i)
    raster[i] = static_cast<float>(rng.uniform() * 100 - 50);
  const auto path = tmp.path() / "depth.pfm";
  write_pfm(raster, path);
  const Raster<float> back = read_pfm(path);
  CHECK(back == raster);
}

TEST_CASE("pfm honors the byte-order sign of the scale") {
  testutil::TempDir tmp("pfmbe");
  // Build a 2x1 big-endian PFM by hand (positive scale).
  const auto path = tmp.path() / "be.pfm";
  {
    std::ofstream f(path, std::ios::binary);
    f << "Pf\n2 1\n1.0\n";
    auto write_be = [&](float v) {
      char b[4];
      std::memcpy(b, &v, 4);
      std::swap(b[0], b[3]);
      std::swap(b[1], b[2]);
      f.write(b, 4);
    };
    write_be(1.25f);
    write_be(-8.0f);
  }
  const Raster<float> r = read_pfm(path);
  CHECK(r.at(0, 0) == 1.25f);
  CHECK(r.at(1, 0) == -8.0f);
}

TEST_CASE("color pfm is rejected for depth") {
  testutil::TempDir tmp("pfmpf");
  const auto path = tmp.path() / "c.pfm";
  {
    std::ofstream f(path, std::ios::binary);
    f << "PF\n1 1\n-1.0\n";
    const char zeros[12] = {};
    f.write(zeros, 12);
  }
  CHECK_THROWS_AS(read_pfm(path), Error);
}

TEST_CASE("16-bit png depth obeys the declared scale") {
  testutil::TempDir tmp("png16");
  Raster<uint16_t> raw(8, 6, 0);
  raw.at(3, 2) = 1500;  // millimeters
  raw.at(4, 2) = 65535;
  const auto path = tmp.path() / "d.png";
  write_png_gray16(raw, path);

  const Intrinsics intr{10, 10, 4, 3, 8, 6};
  const DepthMap depth = load_depth(path, intr, 0.001);
  CHECK(depth.values.at(3, 2) == Catch::Approx(1.5).margin(1e-6));
  CHECK(depth.values.at(4, 2) == Catch::Approx(65.535).margin(1e-4));
  CHECK(depth.values.at(0, 0) == 0.0f);  // zero stays invalid

  CHECK_THROWS_AS(load_depth(path, intr, std::nullopt), Error);
}

TEST_CASE("all-zero depth loads with zero valid pixels") {
  testutil::TempDir tmp("zdepth");
  write_pfm(Raster<float>(8, 6, 0.0f), tmp.path() / "z.pfm");
  const Intrinsics intr{10, 10, 4, 3, 8, 6};
  const DepthMap depth = load_depth(tmp.path() / "z.pfm", intr, std::nullopt);
  CHECK(depth.valid_count() == 0);
}

TEST_CASE("negative and non-finite depths become invalid") {
  testutil::TempDir tmp("baddepth");
  Raster<float> raster(4, 1, 1.0f);
  raster.at(1, 0) = -3.0f;
  raster.at(2, 0) = std::numeric_limits<float>::quiet_NaN();
  write_pfm(raster, tmp.path() / "d.pfm");
  const Intrinsics intr{10, 10, 2, 0.5, 4, 1};
  const DepthMap depth = load_depth(tmp.path() / "d.pfm", intr, std::nullopt);
  CHECK(depth.values.at(0, 0) == 1.0f);
  CHECK(depth.values.at(1, 0) == 0.0f);
  CHECK(depth.values.at(2, 0) == 0.0f);
}

TEST_CASE("depth dimensions must match the intrinsics") {
  testutil::TempDir tmp("dimdepth");
  write_pfm(Raster<float>(8, 6, 1.0f), tmp.path() / "d.pfm");
  const Intrinsics intr{10, 10, 4, 3, 9, 6};
  CHECK_THROWS_AS(load_depth(tmp.path() / "d.pfm", intr, std::nullopt), Error);
}

TEST_CASE("grayscale mask png round trip") {
  testutil::TempDir tmp("mask");
  SplitMix64 rng(104);
  Raster<uint8_t> mask(17, 9, 0);
  for (size_t i = 0; i < mask.size(); ++i)
    mask[i] = rng.uniform() < 0.5 ? 0 : 255;
  write_png_gray8(mask, tmp.path() / "m.png");
  CHECK(read_png_gray8(tmp.path() / "m.png") == mask);
}

TEST_CASE("rgb png round trip") {
  testutil::TempDir tmp("rgb");
  SplitMix64 rng(105);
  ImageU8 img(13, 7);
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 13; ++x)
      img.at(x, y) = Rgb8{static_cast<uint8_t>(rng.bounded(256)),
                          static_cast<uint8_t>(rng.bounded(256)),
                          static_cast<uint8_t>(rng.bounded(256))};
  write_png_rgb8(img, tmp.path() / "i.png");
  CHECK(read_image_rgb8(tmp.path() / "i.png") == img);
}

TEST_CASE("capture-scale manifest loads with matching counts") {
  testutil::TempDir tmp("manifest191");
  SplitMix64 rng(106);
  DatasetManifest m = random_manifest(rng, 191);
  const auto path = tmp.path() / "manifest.json";
  save_manifest(m, path);
  const DatasetManifest back = load_manifest(path, CheckFiles::no);
  CHECK(back.frames.size() == 191);
}

TEST_CASE("manifest with zero frames is rejected") {
  testutil::TempDir tmp("manifest0");
  const auto path = tmp.path() / "manifest.json";
  {
    std::ofstream f(path);
    f << R"({"schema_version":1,"scene":"x","lidar":"l.ply","frames":[]})";
  }
  CHECK_THROWS_AS(load_manifest(path, CheckFiles::no), Error);
}

TEST_CASE("reflected poses are rejected with the frame index") {
  testutil::TempDir tmp("manifestdet");
  const auto path = tmp.path() / "manifest.json";
  {
    std::ofstream f(path);
    f << R"({"schema_version":1,"scene":"x","lidar":"l.ply","frames":[
      {"id":"f0","image":"i.png","depth":"d.pfm",
       "intrinsics":{"fx":100,"fy":100,"cx":50,"cy":50,"width":100,"height":100},
       "pose":[1,0,0,0, 0,1,0,0, 0,0,-1,0, 0,0,0,1]}]})";
  }
  try {
    load_manifest(path, CheckFiles::no);
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("frame 0") != std::string::npos);
  }
}

TEST_CASE("mild rotation drift is re-orthonormalized, large drift rejected") {
  testutil::TempDir tmp("manifestdrift");
  auto write_with_r00 = [&](double r00) {
    const auto path = tmp.path() / "m.json";
    std::ofstream f(path);
    f << R"({"schema_version":1,"scene":"x","lidar":"l.ply","frames":[
      {"id":"f0","image":"i.png","depth":"d.pfm",
       "intrinsics":{"fx":100,"fy":100,"cx":50,"cy":50,"width":100,"height":100},
       "pose":[)"
      << r00 << R"(,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1]}]})";
    return path;
  };
  const DatasetManifest ok =
      load_manifest(write_with_r00(1.00001), CheckFiles::no);
  Pose::check_rigid(ok.frames[0].pose.rotation());  // re-orthonormalized
  CHECK_THROWS_AS(load_manifest(write_with_r00(1.01), CheckFiles::no), Error);
}

TEST_CASE("world-from-camera manifests are inverted on load") {
  testutil::TempDir tmp("manifestconv");
  SplitMix64 rng(107);
  const Pose cam_from_world = testutil::random_pose(rng);
  const Pose world_from_cam = cam_from_world.inverse();
  const auto path = tmp.path() / "m.json";
  {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["scene"] = "conv";
    j["lidar"] = "l.ply";
    j["pose_convention"] = "world_from_camera";
    const Eigen::Matrix4d m = world_from_cam.matrix();
    std::vector<double> p(16);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) p[r * 4 + c] = m(r, c);
    j["frames"] = {{{"id", "f0"}, {"image", "i.png"}, {"depth", "d.pfm"},
                    {"intrinsics", {{"fx", 100}, {"fy", 100}, {"cx", 50},
                                    {"cy", 50}, {"width", 100}, {"height", 100}}},
                    {"pose", p}}};
    std::ofstream f(path);
    f << j.dump();
  }
  const DatasetManifest m = load_manifest(path, CheckFiles::no);
  CHECK((m.frames[0].pose.matrix() - cam_from_world.matrix())
            .cwiseAbs()
            .maxCoeff() < 1e-9);
}

TEST_CASE("manifest serialize/parse round trip is lossless") {
  testutil::TempDir tmp("manifestrt");
  SplitMix64 rng(108);
  for (int trial = 0; trial < 50; ++trial) {
    const DatasetManifest m = random_manifest(rng, 1 + rng.bounded(6));
    const auto path = tmp.path() / "m.json";
    save_manifest(m, path);
    const DatasetManifest back = load_manifest(path, CheckFiles::no);
    CHECK(manifests_equal(m, back));
  }
}

TEST_CASE("missing referenced files fail the checked load") {
  testutil::TempDir tmp("manifestmissing");
  SplitMix64 rng(109);
  const DatasetManifest m = random_manifest(rng, 2);
  const auto path = tmp.path() / "m.json";
  save_manifest(m, path);
  CHECK_THROWS_AS(load_manifest(path, CheckFiles::yes), Error);
}

TEST_CASE("resize scales intrinsics by the literal per-axis ratios") {
  const Intrinsics intr{1000.0, 1000.0, 960.0, 720.0, 1920, 1440};
  ImageU8 image(1920, 1440, Rgb8{50, 60, 70});
  DepthMap depth;
  depth.values = Raster<float>(1920, 1440, 2.0f);
  depth.stage = DepthStage::raw;
  const ResizedFrame out = resize_frame(image, depth, intr, 1600, 1200);
  CHECK(out.intrinsics.fx == Catch::Approx(1000.0 * 5 / 6).margin(1e-9));
  CHECK(out.intrinsics.cx == Catch::Approx(960.0 * 5 / 6).margin(1e-9));
  CHECK(out.intrinsics.fy == Catch::Approx(1000.0 * 5 / 6).margin(1e-9));
  CHECK(out.intrinsics.width == 1600);
  CHECK(out.image.width() == 1600);
  CHECK(out.depth.width() == 1600);
}

TEST_CASE("identity resize is bitwise unchanged") {
  SplitMix64 rng(110);
  const Intrinsics intr{100.0, 100.0, 32.0, 24.0, 64, 48};
  ImageU8 image(64, 48);
  DepthMap depth;
  depth.values = Raster<float>(64, 48);
  depth.stage = DepthStage::raw;
  for (size_t i = 0; i < image.size(); ++i) {
    image[i] = Rgb8{static_cast<uint8_t>(rng.bounded(256)),
                    static_cast<uint8_t>(rng.bounded(256)),
                    static_cast<uint8_t>(rng.bounded(256))};
    depth.values[i] = static_cast<float>(rng.uniform() * 5);
  }
  const ResizedFrame out = resize_frame(image, depth, intr, 64, 48);
  CHECK(out.image == image);
  CHECK(out.depth.values == depth.values);
}

TEST_CASE("depth resize picks nearest neighbors, never blends") {
  const Intrinsics intr{100.0, 100.0, 16.0, 16.0, 32, 32};
  ImageU8 image(32, 32, Rgb8{});
  DepthMap depth;
  depth.values = Raster<float>(32, 32);
  depth.stage = DepthStage::raw;
  std::set<float> source_values;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      depth.values.at(x, y) = static_cast<float>(1 + ((x * 7 + y * 13) % 11));
      source_values.insert(depth.values.at(x, y));
    }
  const ResizedFrame out = resize_frame(image, depth, intr, 20, 20);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x)
      CHECK(source_values.count(out.depth.values.at(x, y)) == 1);
}

TEST_CASE("aspect-changing resize is rejected") {
  const Intrinsics intr{100.0, 100.0, 32.0, 24.0, 64, 48};
  const ImageU8 image(64, 48, Rgb8{});
  DepthMap depth;
  depth.values = Raster<float>(64, 48, 1.0f);
  depth.stage = DepthStage::raw;
  CHECK_THROWS_AS(resize_frame(image, depth, intr, 32, 32), Error);
  CHECK_THROWS_AS(resize_frame(image, depth, intr, 128, 96), Error);
}

TEST_CASE("resized projection equals the ratio-scaled original projection") {
  SplitMix64 rng(111);
  const Intrinsics intr{500.0, 480.0, 320.0, 240.0, 640, 480};
  const Intrinsics small = intr.scaled(0.5, 0.5, 320, 240);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector3d p(4 * rng.uniform() - 2, 4 * rng.uniform() - 2,
                            1 + 4 * rng.uniform());
    const auto full = project_point(p, Pose(), intr);
    if (!full) continue;
    const auto scaled = project_point(p, Pose(), small);
    if (!scaled) continue;
    CHECK(std::abs(scaled->uv.x() - full->uv.x() * 0.5) < 1e-6);
    CHECK(std::abs(scaled->uv.y() - full->uv.y() * 0.5) < 1e-6);
  }
}

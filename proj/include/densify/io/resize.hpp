#ifndef DENSIFY_IO_RESIZE_HPP
#define DENSIFY_IO_RESIZE_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "densify/common.hpp"
#include "densify/geometry/camera.hpp"
#include "densify/refine/depth_map.hpp"

namespace densify {

struct ResizedFrame {
  ImageU8 image;
  DepthMap depth;
  Intrinsics intrinsics;
};

namespace resize_detail {

struct Tap {
  int src;
  double weight;
};

// Box-overlap taps for one output coordinate: source interval
// [x * ratio, (x + 1) * ratio).
inline std::vector<std::vector<Tap>> box_taps(int src_size, int dst_size) {
  const double ratio = static_cast<double>(src_size) / dst_size;
  std::vector<std::vector<Tap>> taps(dst_size);
  for (int x = 0; x < dst_size; ++x) {
    const double lo = x * ratio, hi = (x + 1) * ratio;
    const int first = static_cast<int>(std::floor(lo));
    const int last = std::min(static_cast<int>(std::ceil(hi)) - 1, src_size - 1);
    for (int s = first; s <= last; ++s) {
      const double overlap =
          std::min(hi, static_cast<double>(s + 1)) -
          std::max(lo, static_cast<double>(s));
      if (overlap > 0) taps[x].push_back({s, overlap / ratio});
    }
  }
  return taps;
}

}  // namespace resize_detail

// Downscale a frame: RGB by exact area averaging, depth by nearest neighbor
// (depth values are never blended across edges), intrinsics by the literal
// per-axis ratios. Identity sizes return bit-identical copies.
inline ResizedFrame resize_frame(const ImageU8& image, const DepthMap& depth,
                                 const Intrinsics& intr, int target_w,
                                 int target_h) {
  require_stage(depth, DepthStage::raw, "resize_frame");
  if (image.width() != intr.width || image.height() != intr.height ||
      depth.width() != intr.width || depth.height() != intr.height)
    throw Error::data("dim-mismatch",
                      "image/depth dimensions disagree with intrinsics");
  if (target_w < 1 || target_h < 1 || target_w > intr.width ||
      target_h > intr.height)
    throw Error::config("resize-bounds",
                        "resize target must be >= 1 and <= source size");
  const double rx = static_cast<double>(intr.width) / target_w;
  const double ry = static_cast<double>(intr.height) / target_h;
  if (std::abs(rx - ry) > 1e-6 * std::max(rx, ry))
    throw Error::config("resize-aspect",
                        "resize must preserve the aspect ratio");

  if (target_w == intr.width && target_h == intr.height)
    return {image, depth, intr};

  ResizedFrame out;
  out.intrinsics = intr.scaled(static_cast<double>(target_w) / intr.width,
                               static_cast<double>(target_h) / intr.height,
                               target_w, target_h);

  const auto tx = resize_detail::box_taps(intr.width, target_w);
  const auto ty = resize_detail::box_taps(intr.height, target_h);
  out.image = ImageU8(target_w, target_h);
  for (int y = 0; y < target_h; ++y)
    for (int x = 0; x < target_w; ++x) {
      double r = 0, g = 0, b = 0;
      for (const auto& wy : ty[y])
        for (const auto& wx : tx[x]) {
          const Rgb8 c = image.at(wx.src, wy.src);
          const double w = wx.weight * wy.weight;
          r += w * c.r;
          g += w * c.g;
          b += w * c.b;
        }
      out.image.at(x, y) =
          Rgb8{static_cast<uint8_t>(std::clamp(std::lround(r), 0l, 255l)),
               static_cast<uint8_t>(std::clamp(std::lround(g), 0l, 255l)),
               static_cast<uint8_t>(std::clamp(std::lround(b), 0l, 255l))};
    }

  out.depth.values = Raster<float>(target_w, target_h, 0.0f);
  out.depth.stage = DepthStage::raw;
  for (int y = 0; y < target_h; ++y) {
    const int sy = std::min(static_cast<int>((y + 0.5) * ry), intr.height - 1);
    for (int x = 0; x < target_w; ++x) {
      const int sx = std::min(static_cast<int>((x + 0.5) * rx), intr.width - 1);
      out.depth.values.at(x, y) = depth.values.at(sx, sy);
    }
  }
  return out;
}

}  // namespace densify

#endif  // DENSIFY_IO_RESIZE_HPP

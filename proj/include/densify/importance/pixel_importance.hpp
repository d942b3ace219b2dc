#ifndef DENSIFY_IMPORTANCE_PIXEL_IMPORTANCE_HPP
#define DENSIFY_IMPORTANCE_PIXEL_IMPORTANCE_HPP

#include <algorithm>
#include <vector>

#include "densify/common.hpp"

namespace densify {

struct PixelImportance {
  Raster<float> scores;
  int kernel_size = 9;
};

// Per-pixel color variance: population variance of each channel over the
// kernel_size^2 window centered at the pixel, averaged over channels.
// Borders replicate the edge pixel. Separable box sums keep this O(W*H).
inline PixelImportance pixel_importance(const ImageU8& image,
                                        int kernel_size = 9) {
  if (kernel_size < 3 || kernel_size % 2 == 0)
    throw Error::config("invalid-kernel", "kernel size must be odd and >= 3");
  if (kernel_size > image.width() || kernel_size > image.height())
    throw Error::config("invalid-kernel",
                        "kernel size exceeds image dimensions");

  const int w = image.width(), h = image.height();
  const int r = kernel_size / 2;
  const double n = static_cast<double>(kernel_size) * kernel_size;

  PixelImportance out;
  out.kernel_size = kernel_size;
  out.scores = Raster<float>(w, h, 0.0f);

  // Horizontal clamped box sums of v and v^2 per channel, then vertical.
  std::vector<double> hsum(static_cast<size_t>(w) * h);
  std::vector<double> hsq(static_cast<size_t>(w) * h);
  std::vector<double> col_prefix(static_cast<size_t>(h) + 1);
  std::vector<double> col_prefix_sq(static_cast<size_t>(h) + 1);
  std::vector<double> row_prefix(static_cast<size_t>(w) + 1);
  std::vector<double> row_prefix_sq(static_cast<size_t>(w) + 1);

  auto channel = [&](const Rgb8& c, int ch) -> double {
    return ch == 0 ? c.r : ch == 1 ? c.g : c.b;
  };

  for (int ch = 0; ch < 3; ++ch) {
    for (int y = 0; y < h; ++y) {
      row_prefix[0] = row_prefix_sq[0] = 0;
      for (int x = 0; x < w; ++x) {
        const double v = channel(image.at(x, y), ch);
        row_prefix[x + 1] = row_prefix[x] + v;
        row_prefix_sq[x + 1] = row_prefix_sq[x] + v * v;
      }
      for (int x = 0; x < w; ++x) {
        const int lo = x - r, hi = x + r;
        const int clo = std::max(lo, 0), chi = std::min(hi, w - 1);
        double s = row_prefix[chi + 1] - row_prefix[clo];
        double s2 = row_prefix_sq[chi + 1] - row_prefix_sq[clo];
        if (lo < 0) {  // replicate left edge
          const double v = channel(image.at(0, y), ch);
          s += -lo * v;
          s2 += -lo * v * v;
        }
        if (hi > w - 1) {  // replicate right edge
          const double v = channel(image.at(w - 1, y), ch);
          s += (hi - (w - 1)) * v;
          s2 += (hi - (w - 1)) * v * v;
        }
        hsum[static_cast<size_t>(y) * w + x] = s;
        hsq[static_cast<size_t>(y) * w + x] = s2;
      }
    }
    for (int x = 0; x < w; ++x) {
      col_prefix[0] = col_prefix_sq[0] = 0;
      for (int y = 0; y < h; ++y) {
        col_prefix[y + 1] = col_prefix[y] + hsum[static_cast<size_t>(y) * w + x];
        col_prefix_sq[y + 1] =
            col_prefix_sq[y] + hsq[static_cast<size_t>(y) * w + x];
      }
      for (int y = 0; y < h; ++y) {
        const int lo = y - r, hi = y + r;
        const int clo = std::max(lo, 0), chi = std::min(hi, h - 1);
        double s = col_prefix[chi + 1] - col_prefix[clo];
        double s2 = col_prefix_sq[chi + 1] - col_prefix_sq[clo];
        if (lo < 0) {
          s += -lo * hsum[x];
          s2 += -lo * hsq[x];
        }
        if (hi > h - 1) {
          s += (hi - (h - 1)) * hsum[static_cast<size_t>(h - 1) * w + x];
          s2 += (hi - (h - 1)) * hsq[static_cast<size_t>(h - 1) * w + x];
        }
        const double mean = s / n;
        const double var = std::max(0.0, s2 / n - mean * mean);
        out.scores.at(x, y) += static_cast<float>(var / 3.0);
      }
    }
  }
  return out;
}

}  // namespace densify

#endif  // DENSIFY_IMPORTANCE_PIXEL_IMPORTANCE_HPP

#ifndef DENSIFY_IO_IMAGE_IO_HPP
#define DENSIFY_IO_IMAGE_IO_HPP

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "densify/common.hpp"

namespace densify {

namespace png_detail {

struct ReadCtx {
  FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~ReadCtx() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

struct WriteCtx {
  FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~WriteCtx() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }
};

inline void open_reader(ReadCtx& ctx, const std::filesystem::path& path) {
  ctx.fp = std::fopen(path.string().c_str(), "rb");
  if (!ctx.fp)
    throw Error::data("missing-file", "cannot open " + path.string());
  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                   nullptr);
  if (ctx.png) ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.png || !ctx.info)
    throw Error::internal("png-alloc", "png_create_read_struct failed");
}

inline void open_writer(WriteCtx& ctx, const std::filesystem::path& path) {
  ctx.fp = std::fopen(path.string().c_str(), "wb");
  if (!ctx.fp)
    throw Error::data("write-failed", "cannot open " + path.string() +
                                          " for writing");
  ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                    nullptr);
  if (ctx.png) ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.png || !ctx.info)
    throw Error::internal("png-alloc", "png_create_write_struct failed");
}

}  // namespace png_detail

// 8-bit RGB decode: palette, grayscale, alpha and 16-bit inputs are folded
// down to RGB8.
inline ImageU8 read_image_rgb8(const std::filesystem::path& path) {
  png_detail::ReadCtx ctx;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  open_reader(ctx, path);
  if (setjmp(png_jmpbuf(ctx.png)))
    throw Error::data("png-error", "failed decoding " + path.string());
  png_init_io(ctx.png, ctx.fp);
  png_read_info(ctx.png, ctx.info);

  png_set_strip_16(ctx.png);
  png_set_palette_to_rgb(ctx.png);
  png_set_expand_gray_1_2_4_to_8(ctx.png);
  if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS))
    png_set_tRNS_to_alpha(ctx.png);
  png_set_strip_alpha(ctx.png);
  png_set_gray_to_rgb(ctx.png);
  png_set_interlace_handling(ctx.png);
  png_read_update_info(ctx.png, ctx.info);

  const int w = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
  const int h = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
  const size_t stride = png_get_rowbytes(ctx.png, ctx.info);
  if (stride != static_cast<size_t>(w) * 3)
    throw Error::data("png-error", "unexpected row stride in " + path.string());
  buffer.resize(stride * h);
  rows.resize(h);
  for (int y = 0; y < h; ++y) rows[y] = buffer.data() + stride * y;
  png_read_image(ctx.png, rows.data());
  png_read_end(ctx.png, nullptr);

  ImageU8 out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const png_byte* px = rows[y] + 3 * x;
      out.at(x, y) = Rgb8{px[0], px[1], px[2]};
    }
  return out;
}

// Strict 16-bit grayscale decode (depth rasters).
inline Raster<uint16_t> read_png_gray16(const std::filesystem::path& path) {
  png_detail::ReadCtx ctx;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  open_reader(ctx, path);
  if (setjmp(png_jmpbuf(ctx.png)))
    throw Error::data("png-error", "failed decoding " + path.string());
  png_init_io(ctx.png, ctx.fp);
  png_read_info(ctx.png, ctx.info);
  if (png_get_color_type(ctx.png, ctx.info) != PNG_COLOR_TYPE_GRAY ||
      png_get_bit_depth(ctx.png, ctx.info) != 16)
    throw Error::data("depth-png-format",
                      path.string() + " is not 16-bit grayscale");
  if (binary_is_little_endian()) png_set_swap(ctx.png);
  png_set_interlace_handling(ctx.png);
  png_read_update_info(ctx.png, ctx.info);

  const int w = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
  const int h = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
  buffer.resize(static_cast<size_t>(w) * h * 2);
  rows.resize(h);
  for (int y = 0; y < h; ++y)
    rows[y] = buffer.data() + static_cast<size_t>(w) * 2 * y;
  png_read_image(ctx.png, rows.data());
  png_read_end(ctx.png, nullptr);

  Raster<uint16_t> out(w, h);
  std::memcpy(out.data(), buffer.data(), buffer.size());
  return out;
}

// 8-bit grayscale decode (external ROI masks).
inline Raster<uint8_t> read_png_gray8(const std::filesystem::path& path) {
  png_detail::ReadCtx ctx;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  open_reader(ctx, path);
  if (setjmp(png_jmpbuf(ctx.png)))
    throw Error::data("png-error", "failed decoding " + path.string());
  png_init_io(ctx.png, ctx.fp);
  png_read_info(ctx.png, ctx.info);
  const auto color = png_get_color_type(ctx.png, ctx.info);
  if (color != PNG_COLOR_TYPE_GRAY)
    throw Error::data("mask-format", path.string() + " is not grayscale");
  if (png_get_bit_depth(ctx.png, ctx.info) > 8)
    throw Error::data("mask-format", path.string() + " is not 8-bit");
  png_set_expand_gray_1_2_4_to_8(ctx.png);
  png_set_interlace_handling(ctx.png);
  png_read_update_info(ctx.png, ctx.info);

  const int w = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
  const int h = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
  buffer.resize(static_cast<size_t>(w) * h);
  rows.resize(h);
  for (int y = 0; y < h; ++y)
    rows[y] = buffer.data() + static_cast<size_t>(w) * y;
  png_read_image(ctx.png, rows.data());
  png_read_end(ctx.png, nullptr);

  Raster<uint8_t> out(w, h);
  std::memcpy(out.data(), buffer.data(), buffer.size());
  return out;
}

inline void write_png_rgb8(const ImageU8& image,
                           const std::filesystem::path& path) {
  png_detail::WriteCtx ctx;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer(image.size() * 3);
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) {
      png_byte* px =
          buffer.data() + (static_cast<size_t>(y) * image.width() + x) * 3;
      const Rgb8 c = image.at(x, y);
      px[0] = c.r; px[1] = c.g; px[2] = c.b;
    }
  open_writer(ctx, path);
  if (setjmp(png_jmpbuf(ctx.png)))
    throw Error::data("png-error", "failed encoding " + path.string());
  png_init_io(ctx.png, ctx.fp);
  png_set_IHDR(ctx.png, ctx.info, image.width(), image.height(), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);
  rows.resize(image.height());
  for (int y = 0; y < image.height(); ++y)
    rows[y] = buffer.data() + static_cast<size_t>(y) * image.width() * 3;
  png_write_image(ctx.png, rows.data());
  png_write_end(ctx.png, nullptr);
}

inline void write_png_gray8(const Raster<uint8_t>& raster,
                            const std::filesystem::path& path) {
  png_detail::WriteCtx ctx;
  std::vector<png_bytep> rows;
  open_writer(ctx, path);
  if (setjmp(png_jmpbuf(ctx.png)))
    throw Error::data("png-error", "failed encoding " + path.string());
  png_init_io(ctx.png, ctx.fp);
  png_set_IHDR(ctx.png, ctx.info, raster.width(), raster.height(), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);
  rows.resize(raster.height());
  for (int y = 0; y < raster.height(); ++y)
    rows[y] = const_cast<png_bytep>(
        reinterpret_cast<const png_byte*>(raster.data()) +
        static_cast<size_t>(y) * raster.width());
  png_write_image(ctx.png, rows.data());
  png_write_end(ctx.png, nullptr);
}

inline void write_png_gray16(const Raster<uint16_t>& raster,
                             const std::filesystem::path& path) {
  png_detail::WriteCtx ctx;
  std::vector<png_bytep> rows;
  open_writer(ctx, path);
  if (setjmp(png_jmpbuf(ctx.png)))
    throw Error::data("png-error", "failed encoding " + path.string());
  png_init_io(ctx.png, ctx.fp);
  png_set_IHDR(ctx.png, ctx.info, raster.width(), raster.height(), 16,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);
  if (binary_is_little_endian()) png_set_swap(ctx.png);
  rows.resize(raster.height());
  for (int y = 0; y < raster.height(); ++y)
    rows[y] = const_cast<png_bytep>(
        reinterpret_cast<const png_byte*>(raster.data()) +
        static_cast<size_t>(y) * raster.width() * 2);
  png_write_image(ctx.png, rows.data());
  png_write_end(ctx.png, nullptr);
}

}  // namespace densify

#endif  // DENSIFY_IO_IMAGE_IO_HPP

#include "colotk/io/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

namespace colotk::io {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error("png: " + path.string() + ": " + what);
}

void write_gray(const std::filesystem::path& path, int bit_depth, int width, int height,
                const std::vector<png_bytep>& rows) {
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) fail(path, "cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "libpng write error");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);  // rows are host little-endian
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct Decoded {
  int width = 0, height = 0, bit_depth = 0, channels = 0;
  std::vector<std::uint8_t> data;  // row-major, 16-bit stored host-endian
};

Decoded read_any(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) fail(path, "cannot open");
  png_byte header[8];
  if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
    fail(path, "not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "libpng read error");
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);

  Decoded out;
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.bit_depth = png_get_bit_depth(png, info);
  out.channels = png_get_channels(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  out.data.resize(row_bytes * static_cast<std::size_t>(out.height));
  std::vector<png_bytep> rows(static_cast<std::size_t>(out.height));
  for (int r = 0; r < out.height; ++r) rows[static_cast<std::size_t>(r)] = out.data.data() + r * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace

void write_png_gray8(const std::filesystem::path& path, const GrayImage& img) {
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(h) * w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      buf[static_cast<std::size_t>(r) * w + c] =
          static_cast<std::uint8_t>(std::lround(std::clamp(img(r, c), 0.0f, 1.0f) * 255.0f));
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int r = 0; r < h; ++r) rows[static_cast<std::size_t>(r)] = buf.data() + static_cast<std::size_t>(r) * w;
  write_gray(path, 8, w, h, rows);
}

void write_png_gray8_raw(const std::filesystem::path& path, const LabelImage& img) {
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int r = 0; r < h; ++r)
    rows[static_cast<std::size_t>(r)] = const_cast<png_bytep>(img.data() + static_cast<std::ptrdiff_t>(r) * w);
  write_gray(path, 8, w, h, rows);
}

void write_png_gray16(const std::filesystem::path& path, const Gray16Image& img) {
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int r = 0; r < h; ++r)
    rows[static_cast<std::size_t>(r)] = const_cast<png_bytep>(
        reinterpret_cast<const png_byte*>(img.data() + static_cast<std::ptrdiff_t>(r) * w));
  write_gray(path, 16, w, h, rows);
}

GrayImage read_png_gray8(const std::filesystem::path& path) {
  const Decoded d = read_any(path);
  GrayImage out(d.height, d.width);
  for (int r = 0; r < d.height; ++r) {
    for (int c = 0; c < d.width; ++c) {
      double lum = 0.0;
      for (int ch = 0; ch < d.channels; ++ch) {
        if (d.bit_depth == 16) {
          const auto* p = reinterpret_cast<const std::uint16_t*>(d.data.data());
          lum += p[(static_cast<std::size_t>(r) * d.width + c) * d.channels + ch] / 65535.0;
        } else {
          lum += d.data[(static_cast<std::size_t>(r) * d.width + c) * d.channels + ch] / 255.0;
        }
      }
      out(r, c) = static_cast<float>(lum / d.channels);
    }
  }
  return out;
}

LabelImage read_png_gray8_raw(const std::filesystem::path& path) {
  const Decoded d = read_any(path);
  if (d.bit_depth != 8 || d.channels != 1) fail(path, "expected 8-bit single-channel PNG");
  LabelImage out(d.height, d.width);
  for (int r = 0; r < d.height; ++r)
    for (int c = 0; c < d.width; ++c)
      out(r, c) = d.data[static_cast<std::size_t>(r) * d.width + c];
  return out;
}

Gray16Image read_png_gray16(const std::filesystem::path& path) {
  const Decoded d = read_any(path);
  if (d.bit_depth != 16 || d.channels != 1) fail(path, "expected 16-bit single-channel PNG");
  const auto* p = reinterpret_cast<const std::uint16_t*>(d.data.data());
  Gray16Image out(d.height, d.width);
  for (int r = 0; r < d.height; ++r)
    for (int c = 0; c < d.width; ++c)
      out(r, c) = p[static_cast<std::size_t>(r) * d.width + c];
  return out;
}

int png_bit_depth(const std::filesystem::path& path) {
  const Decoded d = read_any(path);
  return d.bit_depth;
}

}  // namespace colotk::io

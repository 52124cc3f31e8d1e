#pragma once

#include "colotk/reconstruct.hpp"

#include <cstdint>
#include <filesystem>

namespace colotk::io {

using Gray16Image = Eigen::Array<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// 8-bit grayscale, values clamped from [0,1].
void write_png_gray8(const std::filesystem::path& path, const GrayImage& img);
void write_png_gray8_raw(const std::filesystem::path& path, const LabelImage& img);
void write_png_gray16(const std::filesystem::path& path, const Gray16Image& img);

GrayImage read_png_gray8(const std::filesystem::path& path);    // any 8-bit PNG, to [0,1] luminance
LabelImage read_png_gray8_raw(const std::filesystem::path& path);
Gray16Image read_png_gray16(const std::filesystem::path& path);

/// Bit depth probe (8 or 16); throws on non-PNG input.
int png_bit_depth(const std::filesystem::path& path);

}  // namespace colotk::io

#pragma once

#include "colotk/depth.hpp"

#include <filesystem>

namespace colotk::io {

/// Grayscale PFM ("Pf"): float32 rows bottom-up, scale-line sign encodes
/// endianness (negative = little-endian). Non-positive and non-finite values
/// load with mask = false.
void write_pfm(const std::filesystem::path& path, const DepthGrid& values);
DepthFrame read_pfm(const std::filesystem::path& path);

}  // namespace colotk::io

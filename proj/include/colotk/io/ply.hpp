#pragma once

#include "colotk/reconstruct.hpp"

#include <filesystem>

namespace colotk::io {

/// Binary little-endian PLY with x,y,z float32 plus optional
/// red,green,blue and label uchar properties.
void write_ply(const std::filesystem::path& path, const PointCloud& cloud, bool ascii = false);
PointCloud read_ply(const std::filesystem::path& path);

}  // namespace colotk::io

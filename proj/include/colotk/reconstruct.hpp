#pragma once

#include "colotk/depth.hpp"
#include "colotk/geometry.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace colotk {

using GrayImage = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using LabelImage = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr std::uint8_t kLabelMucosa = 0;
constexpr std::uint8_t kLabelPolyp = 1;

struct PointCloud {
  std::vector<Eigen::Vector3d> points;             // mm, world frame
  std::vector<std::array<std::uint8_t, 3>> colors;  // empty or points.size()
  std::vector<std::uint8_t> labels;                 // empty or points.size()

  bool has_colors() const { return !colors.empty(); }
  bool has_labels() const { return !labels.empty(); }
  std::size_t size() const { return points.size(); }
};

/// Backprojects every valid pixel (subsampled by stride) of every frame and
/// transforms it into the world frame by that frame's pose.
PointCloud fuse(const DepthSequence& depths, const std::vector<Pose>& poses,
                const CameraIntrinsics& intrinsics, const std::vector<GrayImage>* colors,
                const std::vector<LabelImage>* labels, int stride);

/// One centroid per occupied voxel; mean color, majority label with ties
/// broken toward the higher (lesion) class. Output sorted by voxel index.
PointCloud voxel_downsample(const PointCloud& cloud, double voxel_mm);

}  // namespace colotk

#include "colotk/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

namespace colotk {

PointCloud fuse(const DepthSequence& depths, const std::vector<Pose>& poses,
                const CameraIntrinsics& intrinsics, const std::vector<GrayImage>* colors,
                const std::vector<LabelImage>* labels, int stride) {
  depths.validate();
  intrinsics.validate();
  if (stride < 1) throw std::invalid_argument("fuse: stride must be >= 1");
  if (poses.size() != depths.frames.size())
    throw std::invalid_argument("fuse: pose count != frame count");
  if (colors && colors->size() != depths.frames.size())
    throw std::invalid_argument("fuse: color frame count mismatch");
  if (labels && labels->size() != depths.frames.size())
    throw std::invalid_argument("fuse: label frame count mismatch");

  PointCloud cloud;
  for (std::size_t f = 0; f < depths.frames.size(); ++f) {
    const DepthFrame& frame = depths.frames[f];
    const Pose& pose = poses[f];
    for (int v = 0; v < frame.height(); v += stride) {
      for (int u = 0; u < frame.width(); u += stride) {
        if (!frame.mask(v, u)) continue;
        const Eigen::Vector3d cam = backproject(
            {static_cast<double>(u), static_cast<double>(v), frame.values(v, u)}, intrinsics);
        cloud.points.push_back(transform(pose, cam));
        if (colors) {
          const float g = std::clamp((*colors)[f](v, u), 0.0f, 1.0f);
          const auto b = static_cast<std::uint8_t>(std::lround(g * 255.0f));
          cloud.colors.push_back({b, b, b});
        }
        if (labels) cloud.labels.push_back((*labels)[f](v, u));
      }
    }
  }
  return cloud;
}

PointCloud voxel_downsample(const PointCloud& cloud, double voxel_mm) {
  if (!(voxel_mm > 0.0)) throw std::invalid_argument("voxel_downsample: voxel size must be > 0");

  struct Cell {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    Eigen::Vector3d color_sum = Eigen::Vector3d::Zero();
    std::map<std::uint8_t, std::size_t> label_counts;
    std::size_t n = 0;
  };
  using Key = std::tuple<long, long, long>;
  std::map<Key, Cell> cells;  // ordered: output is sorted by voxel index

  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Eigen::Vector3d& p = cloud.points[i];
    const Key key{static_cast<long>(std::floor(p.x() / voxel_mm)),
                  static_cast<long>(std::floor(p.y() / voxel_mm)),
                  static_cast<long>(std::floor(p.z() / voxel_mm))};
    Cell& cell = cells[key];
    cell.sum += p;
    if (cloud.has_colors())
      cell.color_sum += Eigen::Vector3d(cloud.colors[i][0], cloud.colors[i][1], cloud.colors[i][2]);
    if (cloud.has_labels()) ++cell.label_counts[cloud.labels[i]];
    ++cell.n;
  }

  PointCloud out;
  out.points.reserve(cells.size());
  for (const auto& [key, cell] : cells) {
    const double n = static_cast<double>(cell.n);
    out.points.push_back(cell.sum / n);
    if (cloud.has_colors()) {
      const Eigen::Vector3d c = cell.color_sum / n;
      out.colors.push_back({static_cast<std::uint8_t>(std::lround(c.x())),
                            static_cast<std::uint8_t>(std::lround(c.y())),
                            static_cast<std::uint8_t>(std::lround(c.z()))});
    }
    if (cloud.has_labels()) {
      std::uint8_t best = 0;
      std::size_t best_count = 0;
      for (const auto& [label, count] : cell.label_counts) {
        // >= : ties resolve toward the higher (lesion) class
        if (count >= best_count) {
          best = label;
          best_count = count;
        }
      }
      out.labels.push_back(best);
    }
  }
  return out;
}

}  // namespace colotk

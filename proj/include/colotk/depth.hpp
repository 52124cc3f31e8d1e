#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace colotk {

using DepthGrid = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MaskGrid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-pixel metric depth (mm) with a validity mask. Indexing is (row, col).
struct DepthFrame {
  DepthGrid values;
  MaskGrid mask;

  DepthFrame() = default;
  DepthFrame(int height, int width)
      : values(DepthGrid::Zero(height, width)), mask(MaskGrid::Constant(height, width, false)) {}

  int height() const { return static_cast<int>(values.rows()); }
  int width() const { return static_cast<int>(values.cols()); }

  void validate() const {
    if (values.rows() != mask.rows() || values.cols() != mask.cols())
      throw std::invalid_argument("DepthFrame: values/mask dimension mismatch");
    for (int r = 0; r < values.rows(); ++r)
      for (int c = 0; c < values.cols(); ++c)
        if (mask(r, c) && (!std::isfinite(values(r, c)) || values(r, c) <= 0.0f))
          throw std::invalid_argument("DepthFrame: masked-in value must be finite and positive");
  }
};

struct DepthSequence {
  std::vector<DepthFrame> frames;

  int height() const { return frames.empty() ? 0 : frames.front().height(); }
  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  int size() const { return static_cast<int>(frames.size()); }

  void validate() const {
    if (frames.empty()) throw std::invalid_argument("DepthSequence: empty");
    for (const auto& f : frames) {
      if (f.height() != height() || f.width() != width())
        throw std::invalid_argument("DepthSequence: non-uniform frame dimensions");
    }
  }
};

}  // namespace colotk

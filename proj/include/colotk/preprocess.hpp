#pragma once

#include "colotk/reconstruct.hpp"

#include <Eigen/Dense>

#include <vector>

namespace colotk {

/// Planar multi-channel float image in [0,1] with an optional validity mask.
struct ImageFrame {
  std::vector<GrayImage> channels;
  MaskGrid mask;  // optional; empty = none

  ImageFrame() = default;
  ImageFrame(int n_channels, int height, int width)
      : channels(static_cast<std::size_t>(n_channels), GrayImage::Zero(height, width)) {}

  int height() const { return channels.empty() ? 0 : static_cast<int>(channels[0].rows()); }
  int width() const { return channels.empty() ? 0 : static_cast<int>(channels[0].cols()); }
  int n_channels() const { return static_cast<int>(channels.size()); }
};

/// Flags pixels brighter than mean + sigma_k * std within non-overlapping
/// patch x patch blocks (edge blocks smaller). Multi-channel inputs use the
/// channel-mean luminance. Constant blocks flag nothing.
MaskGrid specular_mask(const ImageFrame& img, int patch = 16, double sigma_k = 3.0);

/// Replaces masked pixels by the harmonic interpolant of their boundary
/// values (Gauss-Seidel to residual < 1e-6); unmasked pixels are untouched.
ImageFrame inpaint_masked(const ImageFrame& img, const MaskGrid& mask);

/// Per-channel statistics transfer: (x - mu_c) / sigma_c * sigma_s + mu_s.
ImageFrame adain(const ImageFrame& content, const ImageFrame& style);

/// Tile-wise 256-bin quantile mapping onto the co-located reference tile,
/// bilinearly blended between neighboring tile mappings.
ImageFrame local_hist_match(const ImageFrame& img, const ImageFrame& reference, int tile = 64);

ImageFrame attenuate(const ImageFrame& img, double factor);

/// floor(alpha * total) clamped to at least 1; alpha must be < 1.
int truncated_steps(int total, double alpha);

}  // namespace colotk

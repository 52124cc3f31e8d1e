#pragma once

#include "colotk/depth.hpp"

#include <cstdint>
#include <cstddef>

namespace colotk {

enum class AlignDomain { depth, disparity };

struct AlignmentParams {
  double alpha = 1.0;
  double beta = 0.0;
  AlignDomain domain = AlignDomain::depth;
  bool degenerate = false;  // Var(pred) == 0, fell back to alpha=1, beta=mean diff
};

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
};

struct MetricReport {
  double delta1 = 0.0;
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse_mm = 0.0;
  ConfidenceInterval delta1_ci, abs_rel_ci, sq_rel_ci, rmse_ci;
  std::size_t n_pixels = 0;
  bool has_ci = false;
  bool ci_degenerate = false;  // single-frame sequence
};

/// Closed-form least-squares fit of alpha * x_pred + beta = x_gt over all
/// jointly valid pixels of the whole sequence, where x is depth or 1/depth.
AlignmentParams align_scale_shift(const DepthSequence& pred, const DepthSequence& gt,
                                  AlignDomain domain);

struct ApplyAlignmentResult {
  DepthSequence seq;
  std::size_t masked_nonpositive = 0;  // pixels whose aligned value was <= 0
};

ApplyAlignmentResult apply_alignment(const DepthSequence& pred, const AlignmentParams& params);

MetricReport compute_metrics(const DepthSequence& pred_aligned, const DepthSequence& gt);

/// Frame-level bootstrap: frames are resampled with replacement, pixels
/// within a frame stay together. Deterministic for a fixed seed.
MetricReport bootstrap_ci(const DepthSequence& pred_aligned, const DepthSequence& gt,
                          int n_resamples, std::uint64_t seed);

/// Least-squares alignment objective at arbitrary (alpha, beta); used by optimality checks.
double alignment_objective(const DepthSequence& pred, const DepthSequence& gt, AlignDomain domain,
                           double alpha, double beta);

}  // namespace colotk

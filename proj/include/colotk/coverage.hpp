#pragma once

#include "colotk/reconstruct.hpp"

#include <Eigen/Dense>

namespace colotk {

using CoverageGrid = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Seen/unseen cells over (centerline arclength x circumferential angle).
/// grid(is, itheta); arclength spans [s_min, s_max].
struct CoverageMap {
  CoverageGrid grid;
  double s_min = 0.0;
  double s_max = 0.0;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitX();
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();

  int n_s() const { return static_cast<int>(grid.rows()); }
  int n_theta() const { return static_cast<int>(grid.cols()); }
};

struct CenterlineEstimate {
  Eigen::Vector3d axis = Eigen::Vector3d::UnitX();  // unit norm
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  bool ambiguous = false;  // two leading eigenvalues nearly equal
};

/// Centroid plus first principal direction of the point covariance. The axis
/// sign is fixed to have non-negative dot with direction_hint (e.g. the
/// first-to-last camera displacement); +x is used when no hint is given.
CenterlineEstimate pca_centerline(const PointCloud& cloud,
                                  const Eigen::Vector3d* direction_hint = nullptr);

/// Bins each point by (arclength along axis, angle around axis). The
/// arclength range is the 1st-99th percentile of projections; the angular
/// reference frame is built from axis x global-up (axis x unit-x fallback).
CoverageMap unroll(const PointCloud& cloud, const Eigen::Vector3d& axis,
                   const Eigen::Vector3d& origin, int n_s, int n_theta);

/// Binary opening then closing with square structuring elements. The theta
/// axis wraps; the s axis clamps at its ends.
CoverageMap morph_clean(const CoverageMap& map, int open_radius, int close_radius);

double coverage_ratio(const CoverageMap& map);

}  // namespace colotk

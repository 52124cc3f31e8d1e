#pragma once

#include "colotk/geometry.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace colotk {

struct TrackObservation {
  int frame = 0;
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;  // mm
};

struct Track {
  long id = 0;
  std::vector<TrackObservation> obs;
};

struct TrackSet {
  std::vector<Track> tracks;
};

struct BaProblem {
  TrackSet tracks;
  std::vector<CameraIntrinsics> intrinsics;  // one per frame in the window
  int window_size = 0;
  double depth_weight = 1.0;          // px per mm
  std::optional<double> huber_delta;  // px; nullopt disables robustification

  void validate() const;
};

struct BaOptions {
  int max_iterations = 200;
  double cost_tolerance = 1e-10;  // relative cost decrease
  double step_tolerance = 1e-10;
  bool analytic_jacobian = true;  // false: central finite differences, step 1e-6
  double fd_step = 1e-6;
};

struct BaSolution {
  std::vector<Pose> poses;  // camera-to-world, poses[0] = identity
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
  int behind_camera_residuals = 0;
};

/// Stacked residual vector: one 3-block per ordered co-observing frame pair
/// (i, j) of every track, [u_err, v_err, depth_weight * d_err]. Behind-camera
/// projections contribute a large capped residual.
Eigen::VectorXd ba_residual(const BaProblem& problem, const std::vector<Pose>& poses);

/// Jacobian of ba_residual with respect to the stacked twists of poses 1..T-1
/// under left-multiplicative perturbation pose_k <- se3_exp(xi_k) * pose_k.
Eigen::MatrixXd ba_jacobian(const BaProblem& problem, const std::vector<Pose>& poses,
                            bool analytic, double fd_step = 1e-6);

BaSolution ba_solve(const BaProblem& problem, const std::vector<Pose>& init = {},
                    const BaOptions& opts = {});

/// Rigidly re-anchors each window onto the previous one using the shared
/// frames, producing one global pose list. Windows are assumed consecutive
/// with a fixed frame overlap.
std::vector<Pose> chain_windows(const std::vector<BaSolution>& solutions, int overlap);

/// Least-squares rigid transform g minimizing sum ||g * b_k - a_k|| over pose
/// pairs (rotation via orthogonal Procrustes, translation from centroids).
Pose align_pose_sets(const std::vector<Pose>& a, const std::vector<Pose>& b);

}  // namespace colotk

#pragma once

#include "colotk/bundle_adjust.hpp"
#include "colotk/depth.hpp"
#include "colotk/geometry.hpp"
#include "colotk/reconstruct.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

namespace colotk {

struct PolypSpec {
  double s = 0.0;       // arclength along centerline (mm)
  double theta = 0.0;   // circumferential angle (rad)
  double height = 0.0;  // protrusion into the lumen (mm)
  double width = 0.0;   // Gaussian sigma in surface distance (mm)
};

struct PhantomSpec {
  std::vector<Eigen::Vector3d> centerline;  // control points (mm), Catmull-Rom
  double base_radius = 20.0;                // mm
  double haustra_amplitude = 0.15;          // fraction of base_radius
  double haustra_wavelength = 40.0;         // mm
  std::vector<PolypSpec> polyps;
  std::uint64_t seed = 0;
};

/// Tube around a piecewise-cubic centerline with sinusoidal haustral folds
/// and Gaussian polyp bumps, exposed as a signed distance field (negative
/// inside the lumen) with an exact cylindrical-coordinate query.
class Phantom {
 public:
  explicit Phantom(PhantomSpec spec);

  const PhantomSpec& spec() const { return spec_; }
  double length() const { return arclen_.back(); }

  double sdf(const Eigen::Vector3d& p) const;
  /// Same field with a warm-start hint (index into the sample table); rays
  /// marching along the tube update the hint incrementally.
  double sdf_hinted(const Eigen::Vector3d& p, int& hint) const;
  std::uint8_t label(const Eigen::Vector3d& p) const;

  double radius(double s, double theta) const;
  Eigen::Vector3d centerline_point(double s) const;
  Eigen::Vector3d centerline_tangent(double s) const;
  /// Rotation-minimizing frame normals perpendicular to the tangent at s.
  void frame_at(double s, Eigen::Vector3d& n1, Eigen::Vector3d& n2) const;

  struct CylCoords {
    double s = 0.0;
    double radial = 0.0;
    double theta = 0.0;
  };
  CylCoords to_cyl(const Eigen::Vector3d& p) const;

 private:
  int nearest_sample(const Eigen::Vector3d& p, int hint) const;
  CylCoords to_cyl_hinted(const Eigen::Vector3d& p, int& hint) const;

  PhantomSpec spec_;
  // Dense arclength-indexed sample table of the centerline.
  std::vector<Eigen::Vector3d> pts_, tans_, n1_, n2_;
  std::vector<double> arclen_;
  double step_ = 0.0;
  int per_seg_ = 0;  // samples per spline segment
};

struct TrajectorySpec {
  int n_frames = 32;
  double speed_min = 2.0;  // mm per frame
  double speed_max = 2.0;
  std::vector<std::pair<int, int>> flip_segments;  // [start, end) frame ranges
  double intrinsics_jitter_pct = 0.0;              // per-sequence, +/- fraction
  double atten_min = 1.0;
  double atten_max = 1.0;
  double tilt_max_rad = 0.0;  // random camera tilt bound
  double s_start = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrajectorySample {
  std::vector<Pose> poses;
  std::vector<CameraIntrinsics> intrinsics;  // per frame (identical within a sequence)
  double attenuation = 1.0;
};

TrajectorySample sample_trajectory(const TrajectorySpec& spec, const Phantom& phantom,
                                   const CameraIntrinsics& base);

struct Lighting {
  double attenuation = 1.0;
  double diffuse = 1.0;
  double specular_strength = 0.25;
  double shininess = 32.0;
  /// Pre-tonemap intensities are multiplied by this before clamping to [0,1].
  /// 0 = calibrate from this frame (95th percentile maps to 0.9).
  double tone_scale = 0.0;
};

struct RenderedFrame {
  GrayImage intensity;  // [0,1]
  DepthFrame depth;     // z-depth mm; mask false where the ray escaped
  LabelImage label;
  Pose pose;
  CameraIntrinsics intrinsics;
};

struct RenderStats {
  double tone_scale_used = 0.0;
};

RenderedFrame render(const Phantom& phantom, const Pose& pose, const CameraIntrinsics& intrinsics,
                     const Lighting& lighting, RenderStats* stats = nullptr);

/// Renders every pose of a trajectory with a shared tone scale calibrated on
/// the first frame.
std::vector<RenderedFrame> render_sequence(const Phantom& phantom, const TrajectorySample& traj,
                                           const Lighting& lighting);

/// Grid-seeded ground-truth feature tracks with a rendered-depth occlusion
/// test; substitutes for an external feature tracker in tests and pipelines.
TrackSet oracle_tracks(const std::vector<RenderedFrame>& frames, int grid_stride, int window,
                       double pixel_noise_sigma, std::uint64_t seed);

void export_dataset(const std::vector<RenderedFrame>& frames, const std::filesystem::path& out_dir);

PhantomSpec default_phantom();
TrajectorySpec default_trajectory(int n_frames, std::uint64_t seed);
CameraIntrinsics default_intrinsics(int width, int height);

}  // namespace colotk

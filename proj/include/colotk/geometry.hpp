#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace colotk {

// Pixel convention: (u, v) = (column, row), origin at the top-left pixel
// center. Depths are z-depths (distance along the optical axis) in mm.

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("intrinsics: focal lengths must be positive");
    if (width < 1 || height < 1) throw std::invalid_argument("intrinsics: image size must be at least 1x1");
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
      throw std::invalid_argument("intrinsics: principal point outside image");
  }
};

struct PixelDepthObservation {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

/// Rigid SE(3) transform mapping camera-frame points to world-frame points.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }

  bool is_valid(double tol = 1e-9) const {
    const Eigen::Matrix3d err = rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
    return err.cwiseAbs().maxCoeff() <= tol && std::abs(rotation.determinant() - 1.0) <= tol &&
           translation.allFinite();
  }
};

using Twist = Eigen::Matrix<double, 6, 1>;  // [linear; angular]

inline Eigen::Vector3d backproject(const PixelDepthObservation& obs, const CameraIntrinsics& k) {
  if (!std::isfinite(obs.u) || !std::isfinite(obs.v) || !std::isfinite(obs.depth))
    throw std::invalid_argument("backproject: non-finite observation");
  if (!(obs.depth > 0.0)) throw std::invalid_argument("backproject: depth must be positive");
  const double z = obs.depth;
  return {(obs.u - k.cx) * z / k.fx, (obs.v - k.cy) * z / k.fy, z};
}

/// Returns false instead of throwing when the point is at or behind the camera.
inline bool project_checked(const Eigen::Vector3d& p, const CameraIntrinsics& k,
                            PixelDepthObservation& out) {
  if (!(p.z() > 0.0)) return false;
  out.u = k.fx * p.x() / p.z() + k.cx;
  out.v = k.fy * p.y() / p.z() + k.cy;
  out.depth = p.z();
  return true;
}

inline PixelDepthObservation project(const Eigen::Vector3d& p, const CameraIntrinsics& k) {
  PixelDepthObservation obs;
  if (!project_checked(p, k, obs)) throw std::domain_error("project: point behind camera (z <= 0)");
  return obs;
}

inline Pose compose(const Pose& a, const Pose& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

inline Pose inverse(const Pose& a) {
  Pose out;
  out.rotation = a.rotation.transpose();
  out.translation = -(out.rotation * a.translation);
  return out;
}

inline Eigen::Vector3d transform(const Pose& a, const Eigen::Vector3d& p) {
  return a.rotation * p + a.translation;
}

inline Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d m;
  m << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return m;
}

inline Pose se3_exp(const Twist& xi) {
  const Eigen::Vector3d rho = xi.head<3>();
  const Eigen::Vector3d phi = xi.tail<3>();
  const double theta = phi.norm();
  const Eigen::Matrix3d W = skew(phi);
  Eigen::Matrix3d R, V;
  if (theta < 1e-9) {
    R = Eigen::Matrix3d::Identity() + W + 0.5 * W * W;
    V = Eigen::Matrix3d::Identity() + 0.5 * W + W * W / 6.0;
  } else {
    const double s = std::sin(theta), c = std::cos(theta);
    R = Eigen::Matrix3d::Identity() + (s / theta) * W + ((1.0 - c) / (theta * theta)) * W * W;
    V = Eigen::Matrix3d::Identity() + ((1.0 - c) / (theta * theta)) * W +
        ((theta - s) / (theta * theta * theta)) * W * W;
  }
  Pose out;
  // Re-orthonormalize to keep Pose invariants at 1e-9 even for large angles.
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d U = svd.matrixU(), Vt = svd.matrixV().transpose();
  if ((U * Vt).determinant() < 0.0) U.col(2) *= -1.0;
  out.rotation = U * Vt;
  out.translation = V * rho;
  return out;
}

/// Valid for rotation angles strictly below pi; near pi the branch chosen by
/// Eigen::AngleAxis is used (accuracy degrades within ~1e-6 of pi itself).
inline Twist se3_log(const Pose& a) {
  const Eigen::AngleAxisd aa(a.rotation);
  const Eigen::Vector3d phi = aa.angle() * aa.axis();
  const double theta = phi.norm();
  const Eigen::Matrix3d W = skew(phi);
  Eigen::Matrix3d Vinv;
  if (theta < 1e-9) {
    Vinv = Eigen::Matrix3d::Identity() - 0.5 * W + W * W / 12.0;
  } else {
    const double half = 0.5 * theta;
    const double cot = std::cos(half) / std::sin(half);
    Vinv = Eigen::Matrix3d::Identity() - 0.5 * W +
           (1.0 / (theta * theta)) * (1.0 - half * cot) * W * W;
  }
  Twist xi;
  xi.head<3>() = Vinv * a.translation;
  xi.tail<3>() = phi;
  return xi;
}

// Datasets that store ray distance instead of z-depth use these converters.
inline double ray_scale(double u, double v, const CameraIntrinsics& k) {
  const double x = (u - k.cx) / k.fx;
  const double y = (v - k.cy) / k.fy;
  return std::sqrt(x * x + y * y + 1.0);
}

inline double ray_length_to_z_depth(double length, double u, double v, const CameraIntrinsics& k) {
  return length / ray_scale(u, v, k);
}

inline double z_depth_to_ray_length(double z, double u, double v, const CameraIntrinsics& k) {
  return z * ray_scale(u, v, k);
}

}  // namespace colotk

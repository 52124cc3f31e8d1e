#include "colotk/coverage.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace colotk {

namespace {

// Orthonormal frame perpendicular to the axis; the first leg comes from
// axis x global-up so maps are comparable across runs.
void theta_frame(const Eigen::Vector3d& axis, Eigen::Vector3d& e1, Eigen::Vector3d& e2) {
  const Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d ref = axis.cross(up);
  if (ref.norm() < 1e-8) ref = axis.cross(Eigen::Vector3d::UnitX());
  e1 = ref.normalized();
  e2 = axis.cross(e1).normalized();
}

CoverageGrid erode(const CoverageGrid& g, int radius) {
  if (radius <= 0) return g;
  const int ns = static_cast<int>(g.rows()), nt = static_cast<int>(g.cols());
  CoverageGrid out(ns, nt);
  for (int is = 0; is < ns; ++is) {
    for (int it = 0; it < nt; ++it) {
      std::uint8_t v = 1;
      for (int ds = -radius; ds <= radius && v; ++ds) {
        const int s = std::clamp(is + ds, 0, ns - 1);
        for (int dt = -radius; dt <= radius; ++dt) {
          const int t = ((it + dt) % nt + nt) % nt;
          if (!g(s, t)) {
            v = 0;
            break;
          }
        }
      }
      out(is, it) = v;
    }
  }
  return out;
}

CoverageGrid dilate(const CoverageGrid& g, int radius) {
  if (radius <= 0) return g;
  const int ns = static_cast<int>(g.rows()), nt = static_cast<int>(g.cols());
  CoverageGrid out(ns, nt);
  for (int is = 0; is < ns; ++is) {
    for (int it = 0; it < nt; ++it) {
      std::uint8_t v = 0;
      for (int ds = -radius; ds <= radius && !v; ++ds) {
        const int s = std::clamp(is + ds, 0, ns - 1);
        for (int dt = -radius; dt <= radius; ++dt) {
          const int t = ((it + dt) % nt + nt) % nt;
          if (g(s, t)) {
            v = 1;
            break;
          }
        }
      }
      out(is, it) = v;
    }
  }
  return out;
}

}  // namespace

CenterlineEstimate pca_centerline(const PointCloud& cloud, const Eigen::Vector3d* direction_hint) {
  if (cloud.points.size() < 3) throw std::invalid_argument("pca_centerline: need >= 3 points");

  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : cloud.points) mean += p;
  mean /= static_cast<double>(cloud.points.size());

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : cloud.points) {
    const Eigen::Vector3d d = p - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(cloud.points.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  if (es.info() != Eigen::Success) throw std::runtime_error("pca_centerline: eigensolver failed");
  // Eigen sorts eigenvalues ascending; the principal direction is the last.
  const Eigen::Vector3d evals = es.eigenvalues();
  if (evals(2) <= 0.0) throw std::invalid_argument("pca_centerline: collinear/degenerate cloud");

  CenterlineEstimate out;
  out.origin = mean;
  out.axis = es.eigenvectors().col(2).normalized();
  out.ambiguous = (evals(2) - evals(1)) <= 1e-6 * evals(2);

  const Eigen::Vector3d hint = direction_hint ? *direction_hint : Eigen::Vector3d::UnitX();
  if (out.axis.dot(hint) < 0.0) out.axis = -out.axis;
  return out;
}

CoverageMap unroll(const PointCloud& cloud, const Eigen::Vector3d& axis,
                   const Eigen::Vector3d& origin, int n_s, int n_theta) {
  if (cloud.points.empty()) throw std::invalid_argument("unroll: empty cloud");
  if (n_s < 1 || n_theta < 1) throw std::invalid_argument("unroll: bins must be >= 1");
  if (!(axis.norm() > 1e-12)) throw std::invalid_argument("unroll: axis must be nonzero");
  const Eigen::Vector3d a = axis.normalized();

  std::vector<double> s(cloud.points.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) s[i] = (cloud.points[i] - origin).dot(a);

  // 1st-99th percentile span suppresses end-cap outliers.
  std::vector<double> sorted = s;
  std::sort(sorted.begin(), sorted.end());
  const auto pct = [&](double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - w) + sorted[hi] * w;
  };
  double s_min = pct(0.01), s_max = pct(0.99);
  if (!(s_min < s_max)) {  // tiny/degenerate clouds collapse to one s-row
    s_min = sorted.front() - 0.5;
    s_max = sorted.back() + 0.5;
  }

  Eigen::Vector3d e1, e2;
  theta_frame(a, e1, e2);

  CoverageMap map;
  map.grid = CoverageGrid::Zero(n_s, n_theta);
  map.s_min = s_min;
  map.s_max = s_max;
  map.axis = a;
  map.origin = origin;

  const double ds = (s_max - s_min) / n_s;
  const double dt = 2.0 * M_PI / n_theta;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (s[i] < s_min || s[i] > s_max) continue;
    const Eigen::Vector3d radial = cloud.points[i] - origin;
    double theta = std::atan2(radial.dot(e2), radial.dot(e1));
    if (theta < 0.0) theta += 2.0 * M_PI;
    const int is = std::min(static_cast<int>((s[i] - s_min) / ds), n_s - 1);
    const int it = std::min(static_cast<int>(theta / dt), n_theta - 1);
    map.grid(is, it) = 1;
  }
  return map;
}

CoverageMap morph_clean(const CoverageMap& map, int open_radius, int close_radius) {
  if (open_radius < 0 || close_radius < 0)
    throw std::invalid_argument("morph_clean: radii must be >= 0");
  CoverageMap out = map;
  out.grid = dilate(erode(out.grid, open_radius), open_radius);
  out.grid = erode(dilate(out.grid, close_radius), close_radius);
  return out;
}

double coverage_ratio(const CoverageMap& map) {
  if (map.grid.size() == 0) throw std::invalid_argument("coverage_ratio: empty map");
  std::size_t seen = 0;
  for (int is = 0; is < map.n_s(); ++is)
    for (int it = 0; it < map.n_theta(); ++it)
      if (map.grid(is, it)) ++seen;
  return static_cast<double>(seen) / static_cast<double>(map.grid.size());
}

}  // namespace colotk

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "colotk/coverage.hpp"

#include <cmath>
#include <random>

using namespace colotk;

namespace {

// Points on the wall of a cylinder of given radius along `axis` through
// `origin`, uniform in (s, theta).
PointCloud cylinder_wall(const Eigen::Vector3d& axis, const Eigen::Vector3d& origin, double radius,
                         double length, int n, std::uint64_t seed, double theta_lo = 0.0,
                         double theta_hi = 2.0 * M_PI) {
  Eigen::Vector3d ref = std::abs(axis.z()) < 0.9 ? Eigen::Vector3d::UnitZ()
                                                 : Eigen::Vector3d::UnitX();
  const Eigen::Vector3d n1 = (ref - ref.dot(axis) * axis).normalized();
  const Eigen::Vector3d n2 = axis.cross(n1);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> us(-length / 2.0, length / 2.0), ut(theta_lo, theta_hi);
  PointCloud cloud;
  for (int i = 0; i < n; ++i) {
    const double s = us(rng), t = ut(rng);
    cloud.points.push_back(origin + s * axis + radius * (std::cos(t) * n1 + std::sin(t) * n2));
  }
  return cloud;
}

// Brute-force binary morphology on a small grid: theta wraps, s clamps.
CoverageGrid brute_erode(const CoverageGrid& g, int radius) {
  const int ns = static_cast<int>(g.rows()), nt = static_cast<int>(g.cols());
  CoverageGrid out(ns, nt);
  for (int is = 0; is < ns; ++is)
    for (int it = 0; it < nt; ++it) {
      std::uint8_t v = 1;
      for (int ds = -radius; ds <= radius; ++ds)
        for (int dt = -radius; dt <= radius; ++dt) {
          const int ss = std::clamp(is + ds, 0, ns - 1);
          const int tt = ((it + dt) % nt + nt) % nt;
          if (!g(ss, tt)) v = 0;
        }
      out(is, it) = v;
    }
  return out;
}

CoverageGrid brute_dilate(const CoverageGrid& g, int radius) {
  const int ns = static_cast<int>(g.rows()), nt = static_cast<int>(g.cols());
  CoverageGrid out(ns, nt);
  for (int is = 0; is < ns; ++is)
    for (int it = 0; it < nt; ++it) {
      std::uint8_t v = 0;
      for (int ds = -radius; ds <= radius; ++ds)
        for (int dt = -radius; dt <= radius; ++dt) {
          const int ss = std::clamp(is + ds, 0, ns - 1);
          const int tt = ((it + dt) % nt + nt) % nt;
          if (g(ss, tt)) v = 1;
        }
      out(is, it) = v;
    }
  return out;
}

}  // namespace

TEST_CASE("pca centerline recovers a cylinder axis") {
  const Eigen::Vector3d axis = Eigen::Vector3d(1.0, 2.0, -0.5).normalized();
  const Eigen::Vector3d origin(3.0, -1.0, 2.0);
  const auto cloud = cylinder_wall(axis, origin, 10.0, 120.0, 5000, 4);
  const Eigen::Vector3d hint = axis;
  const auto est = pca_centerline(cloud, &hint);
  CHECK(!est.ambiguous);
  CHECK(std::abs(est.axis.dot(axis)) > 0.9999);
  CHECK(est.axis.dot(axis) > 0.0);  // hint fixes the sign
  // origin (the centroid) lies on the axis line through `origin`
  const Eigen::Vector3d d = est.origin - origin;
  CHECK((d - d.dot(axis) * axis).norm() < 0.5);
}

TEST_CASE("pca flags an exactly isotropic cloud as ambiguous") {
  // octahedron vertices: covariance is a multiple of the identity
  PointCloud cloud;
  for (int a = 0; a < 3; ++a)
    for (double sgn : {-1.0, 1.0}) {
      Eigen::Vector3d p = Eigen::Vector3d::Zero();
      p(a) = sgn * 5.0;
      cloud.points.push_back(p);
    }
  CHECK(pca_centerline(cloud).ambiguous);

  // a clearly elongated cloud is not
  PointCloud stretched = cloud;
  for (auto& p : stretched.points) p.x() *= 4.0;
  CHECK(!pca_centerline(stretched).ambiguous);
}

TEST_CASE("pca requires enough points") {
  PointCloud cloud;
  cloud.points = {{0.0, 0.0, 0.0}};
  CHECK_THROWS(pca_centerline(cloud));
}

TEST_CASE("full cylinder unrolls to a fully seen map") {
  const Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  const auto cloud = cylinder_wall(axis, Eigen::Vector3d::Zero(), 10.0, 100.0, 120000, 5);
  const auto map = unroll(cloud, axis, Eigen::Vector3d::Zero(), 64, 32);
  CHECK(coverage_ratio(map) > 0.99);
  CHECK(map.s_min < map.s_max);
}

TEST_CASE("unroll is equivariant under rotation of the scene") {
  const auto cloud = cylinder_wall(Eigen::Vector3d::UnitZ(), Eigen::Vector3d::Zero(), 10.0, 100.0,
                                   40000, 6, 0.0, M_PI);
  const Eigen::Matrix3d rot =
      Eigen::AngleAxisd(0.8, Eigen::Vector3d(1.0, 1.0, 0.3).normalized()).toRotationMatrix();
  PointCloud moved;
  for (const auto& p : cloud.points) moved.points.push_back(rot * p);

  const auto m1 = unroll(cloud, Eigen::Vector3d::UnitZ(), Eigen::Vector3d::Zero(), 48, 24);
  const auto m2 = unroll(moved, rot * Eigen::Vector3d::UnitZ(), Eigen::Vector3d::Zero(), 48, 24);
  // the angular reference differs, so the half-band can straddle one extra
  // theta bin per row; compare up to that aliasing
  CHECK(std::abs(coverage_ratio(m1) - coverage_ratio(m2)) <= 1.5 / 24.0);
  // the rotated frame shifts theta bin boundaries, so allow edge aliasing
  for (int is = 0; is < 48; ++is)
    CHECK(std::abs(m1.grid.row(is).cast<int>().sum() - m2.grid.row(is).cast<int>().sum()) <= 2);
}

TEST_CASE("half-circumference visibility gives ratio about one half") {
  const auto cloud = cylinder_wall(Eigen::Vector3d::UnitZ(), Eigen::Vector3d::Zero(), 10.0, 100.0,
                                   80000, 7, 0.0, M_PI);
  const auto map = unroll(cloud, Eigen::Vector3d::UnitZ(), Eigen::Vector3d::Zero(), 64, 64);
  CHECK(coverage_ratio(map) == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("unroll validates arguments") {
  PointCloud cloud;
  cloud.points = {{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}};
  CHECK_THROWS(unroll(cloud, Eigen::Vector3d::UnitX(), Eigen::Vector3d::Zero(), 0, 8));
  CHECK_THROWS(unroll(cloud, Eigen::Vector3d::UnitX(), Eigen::Vector3d::Zero(), 8, 0));
  CHECK_THROWS(unroll(cloud, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), 8, 8));
  PointCloud empty;
  CHECK_THROWS(unroll(empty, Eigen::Vector3d::UnitX(), Eigen::Vector3d::Zero(), 8, 8));
}

TEST_CASE("morphology matches the brute-force oracle") {
  std::mt19937_64 rng(11);
  std::bernoulli_distribution coin(0.55);
  CoverageMap map;
  map.grid = CoverageGrid::Zero(24, 16);
  for (int is = 0; is < 24; ++is)
    for (int it = 0; it < 16; ++it) map.grid(is, it) = coin(rng) ? 1 : 0;
  map.s_max = 1.0;

  for (int open_r : {0, 1, 2})
    for (int close_r : {0, 1, 2}) {
      const auto got = morph_clean(map, open_r, close_r);
      CoverageGrid want = map.grid;
      if (open_r > 0) want = brute_dilate(brute_erode(want, open_r), open_r);
      if (close_r > 0) want = brute_erode(brute_dilate(want, close_r), close_r);
      CHECK((got.grid == want).all());
    }
}

TEST_CASE("opening removes isolated cells, closing fills isolated holes") {
  CoverageMap map;
  map.grid = CoverageGrid::Zero(20, 16);
  map.grid.block(4, 0, 12, 16).setConstant(1);  // solid band
  map.s_max = 1.0;
  CoverageMap noisy = map;
  noisy.grid(1, 3) = 1;   // salt
  noisy.grid(18, 9) = 1;  // salt
  noisy.grid(10, 5) = 0;  // pepper hole

  const auto cleaned = morph_clean(noisy, 1, 1);
  CHECK(cleaned.grid(1, 3) == 0);
  CHECK(cleaned.grid(18, 9) == 0);
  CHECK(cleaned.grid(10, 5) == 1);

  // opening is anti-extensive, closing extensive
  const auto opened = morph_clean(noisy, 1, 0);
  const auto closed = morph_clean(noisy, 0, 1);
  CHECK((opened.grid <= noisy.grid).all());
  CHECK((closed.grid >= noisy.grid).all());
}

TEST_CASE("theta wrap-around connects the seam") {
  CoverageMap map;
  map.grid = CoverageGrid::Zero(8, 12);
  // band crossing the theta seam: columns 11 and 0
  for (int is = 0; is < 8; ++is) {
    map.grid(is, 11) = 1;
    map.grid(is, 0) = 1;
  }
  map.s_max = 1.0;
  // a 1-wide opening keeps a 2-wide wrap-connected band intact
  const auto opened = morph_clean(map, 1, 0);
  CHECK(opened.grid.cast<int>().sum() == 0);  // 2-wide band < 3-wide SE: erased
  // but closing can bridge across the seam
  CoverageMap gap;
  gap.grid = CoverageGrid::Zero(8, 12);
  for (int is = 0; is < 8; ++is) {
    gap.grid(is, 11) = 1;
    gap.grid(is, 1) = 1;  // hole at column 0, across the seam
  }
  gap.s_max = 1.0;
  const auto closed = morph_clean(gap, 0, 1);
  for (int is = 0; is < 8; ++is) CHECK(closed.grid(is, 0) == 1);
}

TEST_CASE("checkerboard coverage ratio is one half before cleaning") {
  CoverageMap map;
  map.grid = CoverageGrid::Zero(16, 16);
  for (int is = 0; is < 16; ++is)
    for (int it = 0; it < 16; ++it) map.grid(is, it) = (is + it) % 2;
  map.s_max = 1.0;
  CHECK(coverage_ratio(map) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("coverage ratio of empty and full maps") {
  CoverageMap map;
  map.grid = CoverageGrid::Zero(4, 4);
  map.s_max = 1.0;
  CHECK(coverage_ratio(map) == doctest::Approx(0.0));
  map.grid.setConstant(1);
  CHECK(coverage_ratio(map) == doctest::Approx(1.0));
}

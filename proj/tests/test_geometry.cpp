#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "colotk/geometry.hpp"

#include <random>

using namespace colotk;

namespace {

CameraIntrinsics test_k() { return {320.0, 300.0, 255.5, 191.5, 512, 384}; }

Pose random_pose(std::mt19937_64& rng, double trans_scale = 50.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Twist xi;
  for (int i = 0; i < 3; ++i) xi(i) = u(rng) * trans_scale;
  Eigen::Vector3d axis(u(rng), u(rng), u(rng));
  axis.normalize();
  xi.tail<3>() = axis * u(rng) * 2.5;
  return se3_exp(xi);
}

}  // namespace

TEST_CASE("backproject principal point lies on the optical axis") {
  const auto k = test_k();
  const Eigen::Vector3d p = backproject({k.cx, k.cy, 7.5}, k);
  CHECK(p.x() == doctest::Approx(0.0));
  CHECK(p.y() == doctest::Approx(0.0));
  CHECK(p.z() == doctest::Approx(7.5));
}

TEST_CASE("backproject unit off-axis ray") {
  const auto k = test_k();
  const Eigen::Vector3d p = backproject({k.cx + k.fx, k.cy, 1.0}, k);
  CHECK(p.isApprox(Eigen::Vector3d(1.0, 0.0, 1.0), 1e-12));
}

TEST_CASE("project maps axis points to the principal point") {
  const auto k = test_k();
  const auto obs = project({0.0, 0.0, 42.0}, k);
  CHECK(obs.u == doctest::Approx(k.cx));
  CHECK(obs.v == doctest::Approx(k.cy));
  CHECK(obs.depth == doctest::Approx(42.0));
}

TEST_CASE("project rejects points at or behind the camera") {
  const auto k = test_k();
  CHECK_THROWS_AS(project({1.0, 2.0, 0.0}, k), std::domain_error);
  CHECK_THROWS_AS(project({1.0, 2.0, -3.0}, k), std::domain_error);
}

TEST_CASE("project/backproject round trip over 1000 random observations") {
  const auto k = test_k();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uu(0.0, k.width - 1e-9), vv(0.0, k.height - 1e-9),
      dd(0.5, 500.0);
  for (int i = 0; i < 1000; ++i) {
    const PixelDepthObservation obs{uu(rng), vv(rng), dd(rng)};
    const auto round = project(backproject(obs, k), k);
    CHECK(std::abs(round.u - obs.u) < 1e-9);
    CHECK(std::abs(round.v - obs.v) < 1e-9);
    CHECK(std::abs(round.depth - obs.depth) < 1e-9);
  }
}

TEST_CASE("backproject rejects non-finite and non-positive input") {
  const auto k = test_k();
  CHECK_THROWS(backproject({std::nan(""), 1.0, 1.0}, k));
  CHECK_THROWS(backproject({1.0, 1.0, 0.0}, k));
}

TEST_CASE("pose composition with identity and inverse") {
  std::mt19937_64 rng(3);
  const Pose b = random_pose(rng);
  CHECK(compose(Pose::identity(), b).rotation.isApprox(b.rotation, 1e-12));
  CHECK(compose(Pose::identity(), b).translation.isApprox(b.translation, 1e-12));

  const Pose e = compose(b, inverse(b));
  CHECK((e.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(e.translation.norm() < 1e-9);

  const Eigen::Vector3d p(1.0, -2.0, 3.0);
  CHECK(transform(inverse(b), transform(b, p)).isApprox(p, 1e-9));
}

TEST_CASE("pose composition is associative over random chains") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    const Pose lhs = compose(compose(a, b), c);
    const Pose rhs = compose(a, compose(b, c));
    CHECK((lhs.rotation - rhs.rotation).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((lhs.translation - rhs.translation).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("se3 exp of zero twist is the identity") {
  const Pose p = se3_exp(Twist::Zero());
  CHECK(p.rotation.isApprox(Eigen::Matrix3d::Identity(), 1e-12));
  CHECK(p.translation.norm() == doctest::Approx(0.0));
}

TEST_CASE("pure translation twist") {
  Twist xi = Twist::Zero();
  xi.head<3>() = Eigen::Vector3d(1.0, -2.0, 0.5);
  const Pose p = se3_exp(xi);
  CHECK(p.rotation.isApprox(Eigen::Matrix3d::Identity(), 1e-12));
  CHECK(p.translation.isApprox(Eigen::Vector3d(1.0, -2.0, 0.5), 1e-12));
}

TEST_CASE("se3 log/exp round trip over 1000 random twists") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    Twist xi;
    for (int k = 0; k < 3; ++k) xi(k) = 100.0 * u(rng);
    Eigen::Vector3d axis(u(rng), u(rng), u(rng));
    if (axis.norm() < 1e-6) axis = Eigen::Vector3d::UnitY();
    axis.normalize();
    std::uniform_real_distribution<double> ang(0.0, M_PI - 0.1);
    xi.tail<3>() = axis * ang(rng);
    const Twist back = se3_log(se3_exp(xi));
    CHECK((back - xi).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("se3_exp output always satisfies pose invariants") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 500; ++i) {
    Twist xi;
    for (int k = 0; k < 6; ++k) xi(k) = u(rng);
    CHECK(se3_exp(xi).is_valid(1e-9));
  }
}

TEST_CASE("ray length and z-depth converters are mutually inverse") {
  const auto k = test_k();
  const double z = 12.0;
  const double len = z_depth_to_ray_length(z, 10.0, 350.0, k);
  CHECK(len > z);  // off-axis rays are longer than their z-depth
  CHECK(ray_length_to_z_depth(len, 10.0, 350.0, k) == doctest::Approx(z).epsilon(1e-12));
}

TEST_CASE("intrinsics invariants are enforced") {
  CHECK_THROWS(CameraIntrinsics{0.0, 1.0, 0.0, 0.0, 4, 4}.validate());
  CHECK_THROWS(CameraIntrinsics{1.0, 1.0, 5.0, 0.0, 4, 4}.validate());
  CHECK_NOTHROW(test_k().validate());
}

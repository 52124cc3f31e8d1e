#include "colotk/synthcolon.hpp"

#include "colotk/io/json_io.hpp"
#include "colotk/io/pfm.hpp"
#include "colotk/io/png_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <stdexcept>

namespace colotk {

namespace {

constexpr double kSurfaceTol = 1e-4;  // mm
constexpr int kMaxSteps = 256;

Eigen::Vector3d catmull_rom(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1,
                            const Eigen::Vector3d& p2, const Eigen::Vector3d& p3, double t) {
  const double t2 = t * t, t3 = t2 * t;
  return 0.5 * ((2.0 * p1) + (-p0 + p2) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3);
}

Eigen::Vector3d catmull_rom_vel(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1,
                                const Eigen::Vector3d& p2, const Eigen::Vector3d& p3, double t) {
  return 0.5 * ((-p0 + p2) + 2.0 * t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) +
                3.0 * t * t * (-p0 + 3.0 * p1 - 3.0 * p2 + p3));
}

Eigen::Vector3d catmull_rom_acc(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1,
                                const Eigen::Vector3d& p2, const Eigen::Vector3d& p3, double t) {
  return (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) + 3.0 * t * (-p0 + 3.0 * p1 - 3.0 * p2 + p3);
}

double wrap_angle(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a < -M_PI) a += 2.0 * M_PI;
  return a;
}

}  // namespace

Phantom::Phantom(PhantomSpec spec) : spec_(std::move(spec)) {
  if (spec_.centerline.size() < 2) throw std::invalid_argument("phantom: need >= 2 control points");
  if (!(spec_.base_radius > 0.0)) throw std::invalid_argument("phantom: base_radius must be > 0");
  if (!(spec_.haustra_amplitude >= 0.0 && spec_.haustra_amplitude < 1.0))
    throw std::invalid_argument("phantom: haustra amplitude must be in [0,1)");
  if (!(spec_.haustra_wavelength > 0.0))
    throw std::invalid_argument("phantom: haustra wavelength must be > 0");
  for (const auto& p : spec_.polyps)
    if (!(p.height < spec_.base_radius) || !(p.width > 0.0))
      throw std::invalid_argument("phantom: polyp height must be < base radius, width > 0");

  // Dense sample table, ~0.25 mm spacing per segment.
  const auto& cp = spec_.centerline;
  const std::size_t n_seg = cp.size() - 1;
  auto ctrl = [&](long i) {
    return cp[static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(cp.size()) - 1))];
  };
  double total_guess = 0.0;
  for (std::size_t i = 0; i + 1 < cp.size(); ++i) total_guess += (cp[i + 1] - cp[i]).norm();
  const int per_seg = std::max(8, static_cast<int>(total_guess / static_cast<double>(n_seg) / 0.25));
  per_seg_ = per_seg;

  for (std::size_t seg = 0; seg < n_seg; ++seg) {
    const int last = (seg + 1 == n_seg) ? per_seg : per_seg - 1;
    for (int k = 0; k <= last; ++k) {
      const double t = static_cast<double>(k) / per_seg;
      pts_.push_back(catmull_rom(ctrl(static_cast<long>(seg) - 1), ctrl(static_cast<long>(seg)),
                                 ctrl(static_cast<long>(seg) + 1), ctrl(static_cast<long>(seg) + 2), t));
    }
  }

  arclen_.resize(pts_.size());
  arclen_[0] = 0.0;
  for (std::size_t i = 1; i < pts_.size(); ++i)
    arclen_[i] = arclen_[i - 1] + (pts_[i] - pts_[i - 1]).norm();
  step_ = arclen_.back() / static_cast<double>(pts_.size() - 1);

  tans_.resize(pts_.size());
  for (std::size_t i = 0; i < pts_.size(); ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == pts_.size() ? i : i + 1;
    tans_[i] = (pts_[b] - pts_[a]).normalized();
  }

  // Rotation-minimizing frames by the double-reflection method.
  n1_.resize(pts_.size());
  n2_.resize(pts_.size());
  Eigen::Vector3d ref = std::abs(tans_[0].z()) < 0.9 ? Eigen::Vector3d::UnitZ()
                                                     : Eigen::Vector3d::UnitX();
  n1_[0] = (ref - ref.dot(tans_[0]) * tans_[0]).normalized();
  n2_[0] = tans_[0].cross(n1_[0]);
  for (std::size_t i = 1; i < pts_.size(); ++i) {
    const Eigen::Vector3d v1 = pts_[i] - pts_[i - 1];
    const double c1 = v1.squaredNorm();
    if (c1 < 1e-16) {
      n1_[i] = n1_[i - 1];
      n2_[i] = n2_[i - 1];
      continue;
    }
    const Eigen::Vector3d rl = n1_[i - 1] - (2.0 / c1) * v1.dot(n1_[i - 1]) * v1;
    const Eigen::Vector3d tl = tans_[i - 1] - (2.0 / c1) * v1.dot(tans_[i - 1]) * v1;
    const Eigen::Vector3d v2 = tans_[i] - tl;
    const double c2 = v2.squaredNorm();
    Eigen::Vector3d n = c2 < 1e-16 ? rl : rl - (2.0 / c2) * v2.dot(rl) * v2;
    n = (n - n.dot(tans_[i]) * tans_[i]).normalized();
    n1_[i] = n;
    n2_[i] = tans_[i].cross(n);
  }

  // Reject self-intersecting tubes.
  double min_r = spec_.base_radius;
  const int ns = std::max(64, static_cast<int>(length()));
  for (int i = 0; i <= ns; ++i)
    for (int j = 0; j < 64; ++j)
      min_r = std::min(min_r, radius(length() * i / ns, 2.0 * M_PI * j / 64.0));
  if (min_r <= 0.02 * spec_.base_radius)
    throw std::invalid_argument("phantom: tube self-intersects (radius collapses to <= 0)");
}

double Phantom::radius(double s, double theta) const {
  double r = spec_.base_radius *
             (1.0 + spec_.haustra_amplitude * std::sin(2.0 * M_PI * s / spec_.haustra_wavelength));
  for (const auto& p : spec_.polyps) {
    const double ds = s - p.s;
    const double darc = wrap_angle(theta - p.theta) * spec_.base_radius;
    r -= p.height * std::exp(-(ds * ds + darc * darc) / (2.0 * p.width * p.width));
  }
  return r;
}

Eigen::Vector3d Phantom::centerline_point(double s) const {
  s = std::clamp(s, 0.0, length());
  const auto it = std::lower_bound(arclen_.begin(), arclen_.end(), s);
  std::size_t i = static_cast<std::size_t>(std::distance(arclen_.begin(), it));
  if (i == 0) return pts_.front();
  const double seg = arclen_[i] - arclen_[i - 1];
  const double w = seg > 0.0 ? (s - arclen_[i - 1]) / seg : 0.0;
  return pts_[i - 1] * (1.0 - w) + pts_[i] * w;
}

Eigen::Vector3d Phantom::centerline_tangent(double s) const {
  s = std::clamp(s, 0.0, length());
  const auto it = std::lower_bound(arclen_.begin(), arclen_.end(), s);
  std::size_t i = static_cast<std::size_t>(std::distance(arclen_.begin(), it));
  if (i == 0) return tans_.front();
  const double seg = arclen_[i] - arclen_[i - 1];
  const double w = seg > 0.0 ? (s - arclen_[i - 1]) / seg : 0.0;
  return (tans_[i - 1] * (1.0 - w) + tans_[i] * w).normalized();
}

void Phantom::frame_at(double s, Eigen::Vector3d& n1, Eigen::Vector3d& n2) const {
  s = std::clamp(s, 0.0, length());
  const auto it = std::lower_bound(arclen_.begin(), arclen_.end(), s);
  std::size_t i = static_cast<std::size_t>(std::distance(arclen_.begin(), it));
  if (i == 0) {
    n1 = n1_.front();
    n2 = n2_.front();
    return;
  }
  const double seg = arclen_[i] - arclen_[i - 1];
  const double w = seg > 0.0 ? (s - arclen_[i - 1]) / seg : 0.0;
  const Eigen::Vector3d t = centerline_tangent(s);
  Eigen::Vector3d n = n1_[i - 1] * (1.0 - w) + n1_[i] * w;
  n = (n - n.dot(t) * t).normalized();
  n1 = n;
  n2 = t.cross(n);
}

int Phantom::nearest_sample(const Eigen::Vector3d& p, int hint) const {
  const int n = static_cast<int>(pts_.size());
  int best;
  if (hint < 0 || hint >= n) {
    // Coarse global scan, then local descent.
    best = 0;
    double best_d = (p - pts_[0]).squaredNorm();
    for (int i = 4; i < n; i += 4) {
      const double d = (p - pts_[static_cast<std::size_t>(i)]).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
  } else {
    best = hint;
  }
  double best_d = (p - pts_[static_cast<std::size_t>(best)]).squaredNorm();
  for (int iter = 0; iter < n; ++iter) {
    int next = best;
    if (best > 0 && (p - pts_[static_cast<std::size_t>(best - 1)]).squaredNorm() < best_d)
      next = best - 1;
    if (best + 1 < n && (p - pts_[static_cast<std::size_t>(best + 1)]).squaredNorm() < best_d &&
        (p - pts_[static_cast<std::size_t>(best + 1)]).squaredNorm() <
            (p - pts_[static_cast<std::size_t>(std::max(best - 1, 0))]).squaredNorm())
      next = best + 1;
    if (next == best) break;
    best = next;
    best_d = (p - pts_[static_cast<std::size_t>(best)]).squaredNorm();
  }
  return best;
}

Phantom::CylCoords Phantom::to_cyl_hinted(const Eigen::Vector3d& p, int& hint) const {
  const int i = nearest_sample(p, hint);
  hint = i;

  // Newton-refine the foot point on the smooth curve, seeded from the nearest
  // table sample. Projecting onto polyline chords instead would make the
  // arclength coordinate jump by ~radial * curvature * step on the concave
  // side of every chord corner.
  const auto& cp = spec_.centerline;
  const int n_seg = static_cast<int>(cp.size()) - 1;
  auto ctrl = [&](long k) {
    return cp[static_cast<std::size_t>(std::clamp<long>(k, 0, static_cast<long>(cp.size()) - 1))];
  };
  int seg = std::min(i / per_seg_, n_seg - 1);
  double t = static_cast<double>(i - seg * per_seg_) / per_seg_;
  for (int it = 0; it < 12; ++it) {
    const Eigen::Vector3d p0 = ctrl(seg - 1), p1 = ctrl(seg), p2 = ctrl(seg + 1),
                          p3 = ctrl(seg + 2);
    const Eigen::Vector3d c = catmull_rom(p0, p1, p2, p3, t);
    const Eigen::Vector3d v = catmull_rom_vel(p0, p1, p2, p3, t);
    const double f = (c - p).dot(v);
    const double fp = v.squaredNorm() + (c - p).dot(catmull_rom_acc(p0, p1, p2, p3, t));
    if (!(fp > 0.0)) break;
    const double step = std::clamp(f / fp, -0.5, 0.5);
    t -= step;
    while (t < 0.0 && seg > 0) {
      --seg;
      t += 1.0;
    }
    while (t > 1.0 && seg + 1 < n_seg) {
      ++seg;
      t -= 1.0;
    }
    if (t < 0.0) {
      t = 0.0;
      break;
    }
    if (t > 1.0) {
      t = 1.0;
      break;
    }
    if (std::abs(step) < 1e-12) break;
  }
  const Eigen::Vector3d foot =
      catmull_rom(ctrl(seg - 1), ctrl(seg), ctrl(seg + 1), ctrl(seg + 2), t);
  const double gidx = (seg + t) * per_seg_;
  const int g0 = std::clamp(static_cast<int>(std::floor(gidx)), 0, static_cast<int>(pts_.size()) - 2);
  const double w = gidx - g0;
  const double s =
      arclen_[static_cast<std::size_t>(g0)] * (1.0 - w) + arclen_[static_cast<std::size_t>(g0) + 1] * w;

  CylCoords out;
  out.s = s;
  out.radial = (p - foot).norm();
  Eigen::Vector3d n1, n2;
  frame_at(s, n1, n2);
  const Eigen::Vector3d r = p - foot;
  out.theta = std::atan2(r.dot(n2), r.dot(n1));
  if (out.theta < 0.0) out.theta += 2.0 * M_PI;
  return out;
}

Phantom::CylCoords Phantom::to_cyl(const Eigen::Vector3d& p) const {
  int hint = -1;
  return to_cyl_hinted(p, hint);
}

double Phantom::sdf_hinted(const Eigen::Vector3d& p, int& hint) const {
  const CylCoords c = to_cyl_hinted(p, hint);
  return c.radial - radius(c.s, c.theta);
}

double Phantom::sdf(const Eigen::Vector3d& p) const {
  int hint = -1;
  return sdf_hinted(p, hint);
}

std::uint8_t Phantom::label(const Eigen::Vector3d& p) const {
  const CylCoords c = to_cyl(p);
  for (const auto& pol : spec_.polyps) {
    const double ds = c.s - pol.s;
    const double darc = wrap_angle(c.theta - pol.theta) * spec_.base_radius;
    // 2-sigma footprint in surface coordinates
    if (ds * ds + darc * darc <= 4.0 * pol.width * pol.width) return kLabelPolyp;
  }
  return kLabelMucosa;
}

void TrajectorySpec::validate() const {
  if (n_frames < 1) throw std::invalid_argument("trajectory: n_frames must be >= 1");
  if (!(speed_min > 0.0) || !(speed_max >= speed_min))
    throw std::invalid_argument("trajectory: speeds must satisfy 0 < min <= max");
  if (!(intrinsics_jitter_pct >= 0.0 && intrinsics_jitter_pct < 1.0))
    throw std::invalid_argument("trajectory: intrinsics jitter must be in [0,1)");
  if (!(atten_min > 0.0 && atten_min <= atten_max && atten_max <= 1.0))
    throw std::invalid_argument("trajectory: attenuation range must be within (0,1]");
  if (tilt_max_rad < 0.0) throw std::invalid_argument("trajectory: tilt bound must be >= 0");
  for (const auto& [a, b] : flip_segments)
    if (a < 0 || b > n_frames || a >= b)
      throw std::invalid_argument("trajectory: flip segment out of range");
}

TrajectorySample sample_trajectory(const TrajectorySpec& spec, const Phantom& phantom,
                                   const CameraIntrinsics& base) {
  spec.validate();
  base.validate();
  std::mt19937_64 rng(spec.seed);

  TrajectorySample out;
  out.intrinsics.reserve(static_cast<std::size_t>(spec.n_frames));
  CameraIntrinsics k = base;
  if (spec.intrinsics_jitter_pct > 0.0) {
    std::uniform_real_distribution<double> jit(-spec.intrinsics_jitter_pct,
                                               spec.intrinsics_jitter_pct);
    k.fx *= 1.0 + jit(rng);
    k.fy *= 1.0 + jit(rng);
    k.cx = std::clamp(k.cx * (1.0 + jit(rng)), 0.0, static_cast<double>(k.width) - 1e-6);
    k.cy = std::clamp(k.cy * (1.0 + jit(rng)), 0.0, static_cast<double>(k.height) - 1e-6);
  }
  k.validate();

  std::uniform_real_distribution<double> speed(spec.speed_min, spec.speed_max);
  std::vector<double> s(static_cast<std::size_t>(spec.n_frames));
  double cur = spec.s_start;
  for (int f = 0; f < spec.n_frames; ++f) {
    s[static_cast<std::size_t>(f)] = cur;
    const double v = spec.speed_min == spec.speed_max ? spec.speed_min : speed(rng);
    cur += v;
  }
  if (s.back() > phantom.length())
    throw std::invalid_argument("trajectory: runs past the end of the centerline");

  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  out.poses.reserve(static_cast<std::size_t>(spec.n_frames));
  for (int f = 0; f < spec.n_frames; ++f) {
    const double sf = s[static_cast<std::size_t>(f)];
    const Eigen::Vector3d pos = phantom.centerline_point(sf);
    const Eigen::Vector3d fwd = phantom.centerline_tangent(sf);
    Eigen::Vector3d n1, n2;
    phantom.frame_at(sf, n1, n2);

    Pose pose;
    bool placed = false;
    for (int attempt = 0; attempt < 20 && !placed; ++attempt) {
      Eigen::Matrix3d tilt = Eigen::Matrix3d::Identity();
      if (spec.tilt_max_rad > 0.0) {
        Eigen::Vector3d axis(unit(rng), unit(rng), unit(rng));
        if (axis.norm() < 1e-9) axis = Eigen::Vector3d::UnitX();
        axis.normalize();
        const double ang = 0.5 * (unit(rng) + 1.0) * spec.tilt_max_rad;
        tilt = Eigen::AngleAxisd(ang, axis).toRotationMatrix();
      }
      pose.rotation.col(0) = n1;
      pose.rotation.col(1) = n2;
      pose.rotation.col(2) = fwd;
      pose.rotation = pose.rotation * tilt;
      pose.translation = pos;
      placed = phantom.sdf(pose.translation) < 0.0;
    }
    if (!placed) throw std::runtime_error("trajectory: camera left the lumen after retries");
    out.poses.push_back(pose);
    out.intrinsics.push_back(k);
  }

  for (const auto& [a, b] : spec.flip_segments)
    std::reverse(out.poses.begin() + a, out.poses.begin() + b);

  std::uniform_real_distribution<double> atten(spec.atten_min, spec.atten_max);
  out.attenuation = spec.atten_min == spec.atten_max ? spec.atten_min : atten(rng);
  return out;
}

RenderedFrame render(const Phantom& phantom, const Pose& pose, const CameraIntrinsics& intrinsics,
                     const Lighting& lighting, RenderStats* stats) {
  intrinsics.validate();
  if (!(phantom.sdf(pose.translation) < 0.0))
    throw std::invalid_argument("render: camera is not inside the lumen");

  const int w = intrinsics.width, h = intrinsics.height;
  RenderedFrame out;
  out.intensity = GrayImage::Zero(h, w);
  out.depth = DepthFrame(h, w);
  out.label = LabelImage::Zero(h, w);
  out.pose = pose;
  out.intrinsics = intrinsics;

  GrayImage radiance = GrayImage::Zero(h, w);  // pre-tonemap
  const double t_max = phantom.length() + 100.0 * phantom.spec().base_radius;

  int cam_hint = -1;
  phantom.sdf_hinted(pose.translation, cam_hint);

#pragma omp parallel for schedule(dynamic, 4)
  for (int v = 0; v < h; ++v) {
    int hint = cam_hint;
    for (int u = 0; u < w; ++u) {
      const Eigen::Vector3d dir_cam =
          Eigen::Vector3d((u - intrinsics.cx) / intrinsics.fx, (v - intrinsics.cy) / intrinsics.fy,
                          1.0)
              .normalized();
      const Eigen::Vector3d dir = pose.rotation * dir_cam;
      const Eigen::Vector3d origin = pose.translation;

      int ray_hint = hint;
      double t = 0.0, t_in = 0.0;
      double d = phantom.sdf_hinted(origin, ray_hint);
      bool hit = false;
      for (int step = 0; step < kMaxSteps; ++step) {
        if (d >= -kSurfaceTol) {
          if (d <= kSurfaceTol) {
            hit = true;
          } else {
            // Overshot through the wall: bisect back to the crossing.
            double lo = t_in, hi = t;
            for (int it = 0; it < 60; ++it) {
              const double mid = 0.5 * (lo + hi);
              const double dm = phantom.sdf_hinted(origin + mid * dir, ray_hint);
              if (dm < -kSurfaceTol) {
                lo = mid;
              } else if (dm > kSurfaceTol) {
                hi = mid;
              } else {
                t = mid;
                hit = true;
                break;
              }
            }
            if (!hit) t = 0.5 * (lo + hi);
            hit = true;
          }
          break;
        }
        t_in = t;
        t += std::max(0.9 * (-d), kSurfaceTol);
        if (t > t_max) break;
        d = phantom.sdf_hinted(origin + t * dir, ray_hint);
      }

      if (u == 0) hint = ray_hint;  // warm start for the next row
      if (!hit) continue;

      const Eigen::Vector3d hit_pt = origin + t * dir;
      out.depth.values(v, u) = static_cast<float>(t * dir_cam.z());
      out.depth.mask(v, u) = true;
      out.label(v, u) = phantom.label(hit_pt);

      // Shading: point light co-located with the camera, inverse-square falloff.
      const double gh = 1e-2;
      Eigen::Vector3d grad;
      int ghint = ray_hint;
      for (int a = 0; a < 3; ++a) {
        Eigen::Vector3d e = Eigen::Vector3d::Zero();
        e(a) = gh;
        grad(a) = (phantom.sdf_hinted(hit_pt + e, ghint) - phantom.sdf_hinted(hit_pt - e, ghint)) /
                  (2.0 * gh);
      }
      const Eigen::Vector3d normal = -grad.normalized();  // faces the lumen
      const Eigen::Vector3d to_light = -dir;              // light at the camera
      const double lambert = std::max(0.0, normal.dot(to_light));
      const Eigen::Vector3d refl = 2.0 * normal.dot(to_light) * normal - to_light;
      const double spec = lambert > 0.0
                              ? std::pow(std::max(0.0, refl.dot(to_light)), lighting.shininess)
                              : 0.0;
      const double dist = std::max(t, 1e-3);
      radiance(v, u) = static_cast<float>(
          lighting.attenuation * (lighting.diffuse * lambert + lighting.specular_strength * spec) /
          (dist * dist));
    }
  }

  double tone = lighting.tone_scale;
  if (tone <= 0.0) {
    std::vector<float> vals;
    vals.reserve(static_cast<std::size_t>(w) * h);
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u)
        if (out.depth.mask(v, u)) vals.push_back(radiance(v, u));
    if (vals.empty()) {
      tone = 1.0;
    } else {
      const std::size_t idx = static_cast<std::size_t>(0.95 * static_cast<double>(vals.size() - 1));
      std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(idx), vals.end());
      const float p95 = vals[idx];
      tone = p95 > 0.0f ? 0.9 / p95 : 1.0;
    }
  }
  if (stats) stats->tone_scale_used = tone;
  out.intensity = (radiance * static_cast<float>(tone)).cwiseMin(1.0f).cwiseMax(0.0f);
  return out;
}

std::vector<RenderedFrame> render_sequence(const Phantom& phantom, const TrajectorySample& traj,
                                           const Lighting& lighting) {
  std::vector<RenderedFrame> frames;
  frames.reserve(traj.poses.size());
  Lighting lit = lighting;
  lit.attenuation = traj.attenuation;
  for (std::size_t f = 0; f < traj.poses.size(); ++f) {
    RenderStats stats;
    frames.push_back(render(phantom, traj.poses[f], traj.intrinsics[f], lit, &stats));
    if (f == 0 && lit.tone_scale <= 0.0) lit.tone_scale = stats.tone_scale_used;
  }
  return frames;
}

TrackSet oracle_tracks(const std::vector<RenderedFrame>& frames, int grid_stride, int window,
                       double pixel_noise_sigma, std::uint64_t seed) {
  if (frames.empty()) throw std::invalid_argument("oracle_tracks: no frames");
  if (window < 2) throw std::invalid_argument("oracle_tracks: window must be >= 2");
  if (grid_stride < 1) throw std::invalid_argument("oracle_tracks: grid_stride must be >= 1");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, pixel_noise_sigma);
  const int n_frames = static_cast<int>(frames.size());
  const int seed_step = std::max(1, window / 4);

  TrackSet out;
  long next_id = 0;
  for (int i = 0; i < n_frames; i += seed_step) {
    const RenderedFrame& fi = frames[static_cast<std::size_t>(i)];
    const int j_end = std::min(i + window, n_frames);
    for (int v = grid_stride / 2; v < fi.depth.height(); v += grid_stride) {
      for (int u = grid_stride / 2; u < fi.depth.width(); u += grid_stride) {
        if (!fi.depth.mask(v, u)) continue;
        const Eigen::Vector3d world = transform(
            fi.pose, backproject({static_cast<double>(u), static_cast<double>(v),
                                  fi.depth.values(v, u)},
                                 fi.intrinsics));
        Track track;
        track.id = next_id;
        for (int j = i; j < j_end; ++j) {
          const RenderedFrame& fj = frames[static_cast<std::size_t>(j)];
          const Eigen::Vector3d cam = transform(inverse(fj.pose), world);
          PixelDepthObservation obs;
          if (!project_checked(cam, fj.intrinsics, obs)) continue;
          if (obs.u < 0.0 || obs.u > fj.depth.width() - 1.0 || obs.v < 0.0 ||
              obs.v > fj.depth.height() - 1.0)
            continue;
          const int pu = static_cast<int>(std::lround(obs.u));
          const int pv = static_cast<int>(std::lround(obs.v));
          if (!fj.depth.mask(pv, pu)) continue;
          // Occlusion test against the rendered depth.
          const double rendered = fj.depth.values(pv, pu);
          if (std::abs(obs.depth - rendered) > 0.01 * rendered) continue;
          double ou = obs.u, ov = obs.v;
          if (pixel_noise_sigma > 0.0) {
            ou = std::clamp(ou + noise(rng), 0.0, fj.depth.width() - 1.0);
            ov = std::clamp(ov + noise(rng), 0.0, fj.depth.height() - 1.0);
          }
          track.obs.push_back({j, ou, ov, obs.depth});
        }
        std::set<int> distinct;
        for (const auto& o : track.obs) distinct.insert(o.frame);
        if (distinct.size() >= 2) {
          out.tracks.push_back(std::move(track));
          ++next_id;
        }
      }
    }
  }
  return out;
}

void export_dataset(const std::vector<RenderedFrame>& frames, const std::filesystem::path& out_dir) {
  if (frames.empty()) throw std::invalid_argument("export_dataset: no frames");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("export_dataset: cannot create " + out_dir.string());

  io::json manifest;
  manifest["n_frames"] = frames.size();
  io::json files = io::json::array();
  std::vector<Pose> poses;
  char name[64];
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const RenderedFrame& fr = frames[f];
    std::snprintf(name, sizeof(name), "frame_%04zu_color.png", f);
    io::write_png_gray8(out_dir / name, fr.intensity);
    files.push_back(name);
    std::snprintf(name, sizeof(name), "frame_%04zu_depth.pfm", f);
    io::write_pfm(out_dir / name, fr.depth.values);
    files.push_back(name);
    std::snprintf(name, sizeof(name), "frame_%04zu_label.png", f);
    io::write_png_gray8_raw(out_dir / name, fr.label);
    files.push_back(name);
    poses.push_back(fr.pose);
  }
  manifest["files"] = files;
  io::save_json(out_dir / "poses.json", io::poses_to_json(poses));
  io::save_json(out_dir / "intrinsics.json", io::intrinsics_to_json(frames.front().intrinsics));
  io::save_json(out_dir / "manifest.json", manifest);
}

PhantomSpec default_phantom() {
  PhantomSpec spec;
  spec.centerline = {{0.0, 0.0, 0.0}, {6.0, 0.0, 60.0}, {-4.0, 4.0, 120.0}, {0.0, 0.0, 180.0}};
  spec.base_radius = 20.0;
  spec.haustra_amplitude = 0.12;
  spec.haustra_wavelength = 40.0;
  spec.polyps = {{90.0, 1.0, 6.0, 5.0}};
  return spec;
}

TrajectorySpec default_trajectory(int n_frames, std::uint64_t seed) {
  TrajectorySpec spec;
  spec.n_frames = n_frames;
  spec.s_start = 25.0;
  const double usable = 180.0 - 2.0 * spec.s_start;
  spec.speed_min = spec.speed_max = std::min(2.0, usable / std::max(1, n_frames));
  spec.seed = seed;
  return spec;
}

CameraIntrinsics default_intrinsics(int width, int height) {
  CameraIntrinsics k;
  k.width = width;
  k.height = height;
  k.fx = k.fy = 0.55 * width;
  k.cx = (width - 1) / 2.0;
  k.cy = (height - 1) / 2.0;
  return k;
}

}  // namespace colotk

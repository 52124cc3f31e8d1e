#include "colotk/depth_eval.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace colotk {

namespace {

inline double to_domain(double depth, AlignDomain domain) {
  return domain == AlignDomain::depth ? depth : 1.0 / depth;
}

void check_shapes(const DepthSequence& a, const DepthSequence& b) {
  a.validate();
  b.validate();
  if (a.size() != b.size() || a.height() != b.height() || a.width() != b.width())
    throw std::invalid_argument("depth_eval: sequence shapes differ");
}

// Per-frame partial sums for the pooled metrics; bootstrap recombines these.
struct FrameSums {
  long double abs_rel = 0.0L;
  long double sq_rel = 0.0L;
  long double sq_err = 0.0L;
  long double delta1 = 0.0L;  // count of pixels passing the ratio test
  std::size_t n = 0;
};

FrameSums frame_metric_sums(const DepthFrame& pred, const DepthFrame& gt) {
  FrameSums s;
  for (int r = 0; r < gt.height(); ++r) {
    for (int c = 0; c < gt.width(); ++c) {
      if (!pred.mask(r, c) || !gt.mask(r, c)) continue;
      const double dp = pred.values(r, c);
      const double dg = gt.values(r, c);
      const double err = dp - dg;
      s.abs_rel += std::abs(err) / dg;
      s.sq_rel += err * err / dg;
      s.sq_err += err * err;
      const double ratio = std::max(dp / dg, dg / dp);
      if (ratio < 1.25) s.delta1 += 1.0L;
      ++s.n;
    }
  }
  return s;
}

void fill_point_metrics(const std::vector<FrameSums>& sums, const std::vector<int>& frame_ids,
                        MetricReport& out) {
  FrameSums total;
  for (int f : frame_ids) {
    total.abs_rel += sums[f].abs_rel;
    total.sq_rel += sums[f].sq_rel;
    total.sq_err += sums[f].sq_err;
    total.delta1 += sums[f].delta1;
    total.n += sums[f].n;
  }
  if (total.n == 0) throw std::invalid_argument("depth_eval: joint valid mask is empty");
  const long double n = static_cast<long double>(total.n);
  out.abs_rel = static_cast<double>(total.abs_rel / n);
  out.sq_rel = static_cast<double>(total.sq_rel / n);
  out.rmse_mm = static_cast<double>(std::sqrt(static_cast<double>(total.sq_err / n)));
  out.delta1 = static_cast<double>(total.delta1 / n);
  out.n_pixels = total.n;
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - w) + v[hi] * w;
}

}  // namespace

AlignmentParams align_scale_shift(const DepthSequence& pred, const DepthSequence& gt,
                                  AlignDomain domain) {
  check_shapes(pred, gt);
  // 2x2 normal equations for min sum (alpha*x + beta - y)^2, extended precision.
  long double sxx = 0.0L, sx = 0.0L, sxy = 0.0L, sy = 0.0L;
  std::size_t n = 0;
  for (int f = 0; f < pred.size(); ++f) {
    const DepthFrame& pf = pred.frames[f];
    const DepthFrame& gf = gt.frames[f];
    for (int r = 0; r < pf.height(); ++r) {
      for (int c = 0; c < pf.width(); ++c) {
        if (!pf.mask(r, c) || !gf.mask(r, c)) continue;
        const long double x = to_domain(pf.values(r, c), domain);
        const long double y = to_domain(gf.values(r, c), domain);
        sxx += x * x;
        sx += x;
        sxy += x * y;
        sy += y;
        ++n;
      }
    }
  }
  if (n == 0) throw std::invalid_argument("align_scale_shift: joint valid mask is empty");

  AlignmentParams out;
  out.domain = domain;
  const long double nn = static_cast<long double>(n);
  const long double det = sxx * nn - sx * sx;  // n * Var(x) * n
  const long double var = sxx / nn - (sx / nn) * (sx / nn);
  if (var <= 1e-18L * std::max(1.0L, sxx / nn)) {
    out.alpha = 1.0;
    out.beta = static_cast<double>((sy - sx) / nn);
    out.degenerate = true;
    return out;
  }
  out.alpha = static_cast<double>((sxy * nn - sx * sy) / det);
  out.beta = static_cast<double>((sxx * sy - sx * sxy) / det);
  return out;
}

double alignment_objective(const DepthSequence& pred, const DepthSequence& gt, AlignDomain domain,
                           double alpha, double beta) {
  check_shapes(pred, gt);
  long double obj = 0.0L;
  for (int f = 0; f < pred.size(); ++f) {
    const DepthFrame& pf = pred.frames[f];
    const DepthFrame& gf = gt.frames[f];
    for (int r = 0; r < pf.height(); ++r) {
      for (int c = 0; c < pf.width(); ++c) {
        if (!pf.mask(r, c) || !gf.mask(r, c)) continue;
        const long double x = to_domain(pf.values(r, c), domain);
        const long double y = to_domain(gf.values(r, c), domain);
        const long double e = alpha * x + beta - y;
        obj += e * e;
      }
    }
  }
  return static_cast<double>(obj);
}

ApplyAlignmentResult apply_alignment(const DepthSequence& pred, const AlignmentParams& params) {
  pred.validate();
  if (!std::isfinite(params.alpha) || !std::isfinite(params.beta))
    throw std::invalid_argument("apply_alignment: non-finite parameters");
  ApplyAlignmentResult out;
  out.seq.frames.reserve(pred.frames.size());
  for (const DepthFrame& f : pred.frames) {
    DepthFrame g(f.height(), f.width());
    for (int r = 0; r < f.height(); ++r) {
      for (int c = 0; c < f.width(); ++c) {
        if (!f.mask(r, c)) continue;
        const double d = f.values(r, c);
        double aligned;
        if (params.domain == AlignDomain::depth) {
          aligned = params.alpha * d + params.beta;
        } else {
          const double disp = params.alpha * (1.0 / d) + params.beta;
          aligned = disp > 0.0 ? 1.0 / disp : -1.0;
        }
        if (aligned > 0.0 && std::isfinite(aligned)) {
          g.values(r, c) = static_cast<float>(aligned);
          g.mask(r, c) = true;
        } else {
          ++out.masked_nonpositive;
        }
      }
    }
    out.seq.frames.push_back(std::move(g));
  }
  return out;
}

MetricReport compute_metrics(const DepthSequence& pred_aligned, const DepthSequence& gt) {
  check_shapes(pred_aligned, gt);
  std::vector<FrameSums> sums;
  sums.reserve(gt.frames.size());
  for (int f = 0; f < gt.size(); ++f)
    sums.push_back(frame_metric_sums(pred_aligned.frames[f], gt.frames[f]));
  std::vector<int> all(gt.frames.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  MetricReport out;
  fill_point_metrics(sums, all, out);
  return out;
}

MetricReport bootstrap_ci(const DepthSequence& pred_aligned, const DepthSequence& gt,
                          int n_resamples, std::uint64_t seed) {
  check_shapes(pred_aligned, gt);
  if (n_resamples < 1) throw std::invalid_argument("bootstrap_ci: n_resamples must be >= 1");

  std::vector<FrameSums> sums;
  sums.reserve(gt.frames.size());
  for (int f = 0; f < gt.size(); ++f)
    sums.push_back(frame_metric_sums(pred_aligned.frames[f], gt.frames[f]));

  const int n_frames = gt.size();
  std::vector<int> all(n_frames);
  for (int i = 0; i < n_frames; ++i) all[i] = i;

  MetricReport out;
  fill_point_metrics(sums, all, out);
  out.has_ci = true;
  out.ci_degenerate = n_frames < 2;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n_frames - 1);
  std::vector<double> d1, ar, sr, rm;
  d1.reserve(n_resamples);
  ar.reserve(n_resamples);
  sr.reserve(n_resamples);
  rm.reserve(n_resamples);
  std::vector<int> resample(n_frames);
  for (int b = 0; b < n_resamples; ++b) {
    std::size_t n = 0;
    do {
      for (int i = 0; i < n_frames; ++i) resample[i] = pick(rng);
      n = 0;
      for (int f : resample) n += sums[f].n;
    } while (n == 0);  // reject resamples landing only on all-invalid frames
    MetricReport r;
    fill_point_metrics(sums, resample, r);
    d1.push_back(r.delta1);
    ar.push_back(r.abs_rel);
    sr.push_back(r.sq_rel);
    rm.push_back(r.rmse_mm);
  }
  // The interval always brackets the point estimate.
  auto ci = [](const std::vector<double>& v, double point) {
    ConfidenceInterval c{percentile(v, 0.025), percentile(v, 0.975)};
    c.lo = std::min(c.lo, point);
    c.hi = std::max(c.hi, point);
    return c;
  };
  out.delta1_ci = ci(d1, out.delta1);
  out.abs_rel_ci = ci(ar, out.abs_rel);
  out.sq_rel_ci = ci(sr, out.sq_rel);
  out.rmse_ci = ci(rm, out.rmse_mm);
  return out;
}

}  // namespace colotk

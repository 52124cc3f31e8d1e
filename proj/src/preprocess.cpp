#include "colotk/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace colotk {

namespace {

void check_nonempty(const ImageFrame& img, const char* who) {
  if (img.channels.empty() || img.height() < 1 || img.width() < 1)
    throw std::invalid_argument(std::string(who) + ": empty image");
  for (const auto& ch : img.channels)
    if (ch.rows() != img.height() || ch.cols() != img.width())
      throw std::invalid_argument(std::string(who) + ": inconsistent channel dimensions");
}

GrayImage luminance(const ImageFrame& img) {
  GrayImage lum = img.channels[0];
  for (std::size_t c = 1; c < img.channels.size(); ++c) lum += img.channels[c];
  return lum / static_cast<float>(img.channels.size());
}

}  // namespace

MaskGrid specular_mask(const ImageFrame& img, int patch, double sigma_k) {
  check_nonempty(img, "specular_mask");
  if (patch < 2) throw std::invalid_argument("specular_mask: patch must be >= 2");
  if (!(sigma_k > 0.0)) throw std::invalid_argument("specular_mask: sigma_k must be > 0");
  const int h = img.height(), w = img.width();
  const GrayImage lum = luminance(img);
  MaskGrid mask = MaskGrid::Constant(h, w, false);

  for (int by = 0; by < h; by += patch) {
    for (int bx = 0; bx < w; bx += patch) {
      const int bh = std::min(patch, h - by), bw = std::min(patch, w - bx);
      double sum = 0.0, sum2 = 0.0;
      for (int r = 0; r < bh; ++r)
        for (int c = 0; c < bw; ++c) {
          const double v = lum(by + r, bx + c);
          sum += v;
          sum2 += v * v;
        }
      const double n = static_cast<double>(bh) * bw;
      const double mean = sum / n;
      const double var = std::max(0.0, sum2 / n - mean * mean);
      const double stddev = std::sqrt(var);
      if (stddev == 0.0) continue;
      const double threshold = mean + sigma_k * stddev;
      for (int r = 0; r < bh; ++r)
        for (int c = 0; c < bw; ++c)
          if (lum(by + r, bx + c) > threshold) mask(by + r, bx + c) = true;
    }
  }
  return mask;
}

ImageFrame inpaint_masked(const ImageFrame& img, const MaskGrid& mask) {
  check_nonempty(img, "inpaint_masked");
  const int h = img.height(), w = img.width();
  if (mask.rows() != h || mask.cols() != w)
    throw std::invalid_argument("inpaint_masked: mask dimensions mismatch");

  std::size_t n_masked = 0;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (mask(r, c)) ++n_masked;
  if (n_masked == static_cast<std::size_t>(h) * w)
    throw std::invalid_argument("inpaint_masked: fully masked image");
  if (n_masked == 0) return img;

  ImageFrame out = img;
  for (auto& ch : out.channels) {
    Eigen::ArrayXXd x = ch.cast<double>();
    // Initialize holes at the unmasked mean for faster convergence.
    double mean = 0.0;
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c)
        if (!mask(r, c)) mean += x(r, c);
    mean /= static_cast<double>(static_cast<std::size_t>(h) * w - n_masked);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c)
        if (mask(r, c)) x(r, c) = mean;

    const double omega = 1.9;  // SOR
    for (int iter = 0; iter < 100000; ++iter) {
      double max_res = 0.0;
      for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
          if (!mask(r, c)) continue;
          double acc = 0.0;
          int cnt = 0;
          if (r > 0) acc += x(r - 1, c), ++cnt;
          if (r + 1 < h) acc += x(r + 1, c), ++cnt;
          if (c > 0) acc += x(r, c - 1), ++cnt;
          if (c + 1 < w) acc += x(r, c + 1), ++cnt;
          const double target = acc / cnt;
          const double res = target - x(r, c);
          max_res = std::max(max_res, std::abs(res));
          x(r, c) += omega * res;
        }
      }
      if (max_res < 1e-6) break;
    }
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c)
        if (mask(r, c)) ch(r, c) = static_cast<float>(x(r, c));
  }
  return out;
}

ImageFrame adain(const ImageFrame& content, const ImageFrame& style) {
  check_nonempty(content, "adain");
  check_nonempty(style, "adain");
  if (content.n_channels() != style.n_channels())
    throw std::invalid_argument("adain: channel count mismatch");

  ImageFrame out = content;
  for (int c = 0; c < content.n_channels(); ++c) {
    const auto stats = [](const GrayImage& x) {
      const double mu = x.cast<double>().mean();
      const double var = (x.cast<double>() - mu).square().mean();
      return std::pair<double, double>(mu, std::sqrt(var));
    };
    const auto [mu_c, sd_c] = stats(content.channels[static_cast<std::size_t>(c)]);
    const auto [mu_s, sd_s] = stats(style.channels[static_cast<std::size_t>(c)]);
    auto& ch = out.channels[static_cast<std::size_t>(c)];
    if (sd_c == 0.0) {
      ch.setConstant(static_cast<float>(mu_s));
    } else {
      ch = ((ch.cast<double>() - mu_c) / sd_c * sd_s + mu_s).cast<float>();
    }
  }
  return out;
}

ImageFrame local_hist_match(const ImageFrame& img, const ImageFrame& reference, int tile) {
  check_nonempty(img, "local_hist_match");
  check_nonempty(reference, "local_hist_match");
  if (tile < 8) throw std::invalid_argument("local_hist_match: tile must be >= 8");
  if (img.n_channels() != reference.n_channels() || img.height() != reference.height() ||
      img.width() != reference.width())
    throw std::invalid_argument("local_hist_match: shape mismatch");

  const int h = img.height(), w = img.width();
  const int ty = (h + tile - 1) / tile, tx = (w + tile - 1) / tile;
  constexpr int kBins = 256;

  ImageFrame out = img;
  for (int c = 0; c < img.n_channels(); ++c) {
    const GrayImage& src = img.channels[static_cast<std::size_t>(c)];
    const GrayImage& ref = reference.channels[static_cast<std::size_t>(c)];

    // Per-tile bin -> value lookup tables from quantile mapping.
    std::vector<std::array<float, kBins>> luts(static_cast<std::size_t>(ty) * tx);
    for (int tr = 0; tr < ty; ++tr) {
      for (int tc = 0; tc < tx; ++tc) {
        const int r0 = tr * tile, c0 = tc * tile;
        const int r1 = std::min(r0 + tile, h), c1 = std::min(c0 + tile, w);
        std::array<double, kBins> h_src{}, h_ref{};
        for (int r = r0; r < r1; ++r)
          for (int cc = c0; cc < c1; ++cc) {
            const int bs = std::clamp(static_cast<int>(std::lround(src(r, cc) * 255.0f)), 0, 255);
            const int br = std::clamp(static_cast<int>(std::lround(ref(r, cc) * 255.0f)), 0, 255);
            h_src[static_cast<std::size_t>(bs)] += 1.0;
            h_ref[static_cast<std::size_t>(br)] += 1.0;
          }
        const double n = static_cast<double>((r1 - r0) * (c1 - c0));
        std::array<double, kBins> cdf_src{}, cdf_ref{};
        double acc = 0.0;
        for (int b = 0; b < kBins; ++b) {
          acc += h_src[static_cast<std::size_t>(b)];
          cdf_src[static_cast<std::size_t>(b)] = acc / n;
        }
        acc = 0.0;
        for (int b = 0; b < kBins; ++b) {
          acc += h_ref[static_cast<std::size_t>(b)];
          cdf_ref[static_cast<std::size_t>(b)] = acc / n;
        }
        auto& lut = luts[static_cast<std::size_t>(tr) * tx + tc];
        int r_bin = 0;
        for (int b = 0; b < kBins; ++b) {
          const double q = cdf_src[static_cast<std::size_t>(b)];
          while (r_bin < kBins - 1 && cdf_ref[static_cast<std::size_t>(r_bin)] < q) ++r_bin;
          lut[static_cast<std::size_t>(b)] = static_cast<float>(r_bin) / 255.0f;
        }
      }
    }

    GrayImage& dst = out.channels[static_cast<std::size_t>(c)];
    for (int r = 0; r < h; ++r) {
      for (int cc = 0; cc < w; ++cc) {
        const int b = std::clamp(static_cast<int>(std::lround(src(r, cc) * 255.0f)), 0, 255);
        // Bilinear blend between the four surrounding tile mappings.
        const double fy = (r + 0.5) / tile - 0.5;
        const double fx = (cc + 0.5) / tile - 0.5;
        const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, ty - 1);
        const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, tx - 1);
        const int y1 = std::min(y0 + 1, ty - 1);
        const int x1 = std::min(x0 + 1, tx - 1);
        const double wy = std::clamp(fy - y0, 0.0, 1.0);
        const double wx = std::clamp(fx - x0, 0.0, 1.0);
        const auto look = [&](int tyy, int txx) {
          return luts[static_cast<std::size_t>(tyy) * tx + txx][static_cast<std::size_t>(b)];
        };
        dst(r, cc) = static_cast<float>((1.0 - wy) * ((1.0 - wx) * look(y0, x0) + wx * look(y0, x1)) +
                                        wy * ((1.0 - wx) * look(y1, x0) + wx * look(y1, x1)));
      }
    }
  }
  return out;
}

ImageFrame attenuate(const ImageFrame& img, double factor) {
  check_nonempty(img, "attenuate");
  if (!(factor > 0.0 && factor <= 1.0))
    throw std::invalid_argument("attenuate: factor must be in (0,1]");
  ImageFrame out = img;
  for (auto& ch : out.channels)
    ch = (ch * static_cast<float>(factor)).cwiseMin(1.0f).cwiseMax(0.0f);
  return out;
}

int truncated_steps(int total, double alpha) {
  if (total < 1) throw std::invalid_argument("truncated_steps: total must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("truncated_steps: alpha must be in (0,1)");
  return std::max(1, static_cast<int>(std::floor(alpha * total)));
}

}  // namespace colotk

#include "parastitch/metrics.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <vector>

#include "parastitch/error.hpp"

namespace parastitch {

namespace {

constexpr int kRadius = 5;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

void require_same_size(const Image& a, const Image& b) {
  require(a.width() == b.width() && a.height() == b.height(),
          ErrorCode::kDimensionMismatch, "metric inputs differ in size");
}

std::array<double, 2 * kRadius + 1> gaussian_kernel() {
  std::array<double, 2 * kRadius + 1> k{};
  double sum = 0.0;
  for (int i = -kRadius; i <= kRadius; ++i) {
    k[i + kRadius] = std::exp(-(i * i) / (2.0 * kSigma * kSigma));
    sum += k[i + kRadius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

double luma(const Image& img, int x, int y) {
  return 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
         0.114 * img.at(x, y, 2);
}

std::size_t ssim_windows(const Image& a, const Image& b, double* mean_out) {
  const int w = a.width();
  const int h = a.height();
  if (w < 2 * kRadius + 1 || h < 2 * kRadius + 1) return 0;
  // Prefix sums of the uncovered indicator locate complete windows.
  std::vector<int> bad(static_cast<std::size_t>(w + 1) * (h + 1), 0);
  auto at = [&](int x, int y) -> int& {
    return bad[static_cast<std::size_t>(y) * (w + 1) + x];
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int miss = (a.covered(x, y) && b.covered(x, y)) ? 0 : 1;
      at(x + 1, y + 1) = miss + at(x, y + 1) + at(x + 1, y) - at(x, y);
    }
  }
  const auto k = gaussian_kernel();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<double> ya(n), yb(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      ya[a.index(x, y)] = luma(a, x, y);
      yb[a.index(x, y)] = luma(b, x, y);
    }
  }
  // Horizontal pass of the five moments, then vertical at window centers.
  std::array<std::vector<double>, 5> row;
  for (auto& r : row) r.assign(n, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = kRadius; x < w - kRadius; ++x) {
      double m[5] = {0, 0, 0, 0, 0};
      for (int d = -kRadius; d <= kRadius; ++d) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x + d;
        const double wk = k[d + kRadius];
        m[0] += wk * ya[i];
        m[1] += wk * yb[i];
        m[2] += wk * ya[i] * ya[i];
        m[3] += wk * yb[i] * yb[i];
        m[4] += wk * ya[i] * yb[i];
      }
      for (int c = 0; c < 5; ++c) row[c][static_cast<std::size_t>(y) * w + x] = m[c];
    }
  }
  double total = 0.0;
  std::size_t count = 0;
  for (int y = kRadius; y < h - kRadius; ++y) {
    for (int x = kRadius; x < w - kRadius; ++x) {
      const int misses = at(x + kRadius + 1, y + kRadius + 1) -
                         at(x - kRadius, y + kRadius + 1) -
                         at(x + kRadius + 1, y - kRadius) +
                         at(x - kRadius, y - kRadius);
      if (misses != 0) continue;
      double m[5] = {0, 0, 0, 0, 0};
      for (int d = -kRadius; d <= kRadius; ++d) {
        const std::size_t i = static_cast<std::size_t>(y + d) * w + x;
        for (int c = 0; c < 5; ++c) m[c] += k[d + kRadius] * row[c][i];
      }
      const double mu_a = m[0];
      const double mu_b = m[1];
      const double var_a = m[2] - mu_a * mu_a;
      const double var_b = m[3] - mu_b * mu_b;
      const double cov = m[4] - mu_a * mu_b;
      total += ((2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2)) /
               ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
      ++count;
    }
  }
  if (mean_out && count > 0) *mean_out = total / static_cast<double>(count);
  return count;
}

}  // namespace

double psnr_overlap(const Image& a, const Image& b) {
  require_same_size(a, b);
  double sse = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (!a.covered(x, y) || !b.covered(x, y)) continue;
      for (int c = 0; c < 3; ++c) {
        const double d = static_cast<double>(a.at(x, y, c)) - b.at(x, y, c);
        sse += d * d;
      }
      ++n;
    }
  }
  require(n > 0, ErrorCode::kEmptyOverlap, "images share no covered pixel");
  if (sse == 0.0) return kPsnrCap;
  const double mse = sse / (3.0 * static_cast<double>(n));
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

double ssim_overlap(const Image& a, const Image& b) {
  require_same_size(a, b);
  double mean = 0.0;
  require(ssim_windows(a, b, &mean) > 0, ErrorCode::kEmptyOverlap,
          "mutual coverage holds no complete 11x11 window");
  return mean;
}

MetricReport evaluate_overlap(const Image& a, const Image& b) {
  MetricReport r;
  r.psnr = psnr_overlap(a, b);
  for (std::size_t i = 0; i < a.coverage().size(); ++i) {
    if (a.coverage()[i] && b.coverage()[i]) ++r.evaluated_pixels;
  }
  double mean = 0.0;
  r.ssim_windows = ssim_windows(a, b, &mean);
  require(r.ssim_windows > 0, ErrorCode::kEmptyOverlap,
          "mutual coverage holds no complete 11x11 window");
  r.ssim = mean;
  return r;
}

std::string summary_line(const MetricReport& m) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "psnr=%.4f ssim=%.6f pixels=%zu windows=%zu",
                m.psnr, m.ssim, m.evaluated_pixels, m.ssim_windows);
  return buf;
}

}  // namespace parastitch

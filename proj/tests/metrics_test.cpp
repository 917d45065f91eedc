#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "parastitch/error.hpp"
#include "parastitch/metrics.hpp"
#include "support.hpp"

namespace parastitch {
namespace {

using testing::make_image;

Image random_image(Rng& rng, int w, int h) {
  return make_image(w, h, [&](int, int) {
    return Rgb{double(rng.index(256)), double(rng.index(256)), double(rng.index(256))};
  });
}

Image negative(Image img) {
  for (auto& v : img.rgb()) v = static_cast<std::uint8_t>(255 - v);
  return img;
}

double direct_psnr(const Image& a, const Image& b) {
  double sse = 0;
  int n = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      if (!a.covered(x, y) || !b.covered(x, y)) continue;
      ++n;
      for (int c = 0; c < 3; ++c) sse += std::pow(double(a.at(x, y, c)) - b.at(x, y, c), 2);
    }
  return 10 * std::log10(255.0 * 255.0 * 3 * n / sse);
}

// SSIM evaluated window by window with a full 2-D Gaussian, no separable
// passes or prefix sums.
double direct_ssim(const Image& a, const Image& b) {
  double g[11][11];
  double gs = 0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      g[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
      gs += g[i][j];
    }
  auto luma = [](const Image& im, int x, int y) {
    return 0.299 * im.at(x, y, 0) + 0.587 * im.at(x, y, 1) + 0.114 * im.at(x, y, 2);
  };
  const double c1 = std::pow(0.01 * 255, 2), c2 = std::pow(0.03 * 255, 2);
  double total = 0;
  int count = 0;
  for (int cy = 5; cy + 5 < a.height(); ++cy) {
    for (int cx = 5; cx + 5 < a.width(); ++cx) {
      bool full = true;
      for (int dy = -5; dy <= 5 && full; ++dy)
        for (int dx = -5; dx <= 5; ++dx)
          if (!a.covered(cx + dx, cy + dy) || !b.covered(cx + dx, cy + dy)) full = false;
      if (!full) continue;
      double ma = 0, mb = 0;
      for (int dy = -5; dy <= 5; ++dy)
        for (int dx = -5; dx <= 5; ++dx) {
          const double w = g[dy + 5][dx + 5] / gs;
          ma += w * luma(a, cx + dx, cy + dy);
          mb += w * luma(b, cx + dx, cy + dy);
        }
      double va = 0, vb = 0, cov = 0;
      for (int dy = -5; dy <= 5; ++dy)
        for (int dx = -5; dx <= 5; ++dx) {
          const double w = g[dy + 5][dx + 5] / gs;
          const double da = luma(a, cx + dx, cy + dy) - ma;
          const double db = luma(b, cx + dx, cy + dy) - mb;
          va += w * da * da;
          vb += w * db * db;
          cov += w * da * db;
        }
      total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return total / count;
}

TEST(Psnr, IdenticalIsCapped) {
  Rng rng(1);
  const Image a = random_image(rng, 20, 20);
  EXPECT_EQ(psnr_overlap(a, a), kPsnrCap);
}

TEST(Psnr, UniformDifferenceOfSixteen) {
  const Image a = make_image(20, 20, [](int, int) { return Rgb{100, 50, 200}; });
  const Image b = make_image(20, 20, [](int, int) { return Rgb{116, 34, 216}; });
  EXPECT_NEAR(psnr_overlap(a, b), 10 * std::log10(255.0 * 255.0 / 256.0), 1e-9);
  EXPECT_NEAR(psnr_overlap(a, b), 24.0484, 1e-4);
}

TEST(Psnr, CheckerMatchesDirectSum) {
  const Image a = make_image(16, 16, [](int x, int y) {
    const double v = (x / 4 + y / 4) % 2 ? 230 : 20;
    return Rgb{v, v / 2, 255 - v};
  });
  const Image b = negative(a);
  EXPECT_NEAR(psnr_overlap(a, b), direct_psnr(a, b), 1e-9);
}

TEST(Psnr, OnlyMutuallyCoveredPixelsCount) {
  Rng rng(2);
  Image a = random_image(rng, 30, 20);
  Image b = random_image(rng, 30, 20);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 30; ++x) {
      if (x < 8) a.set_covered(x, y, false);
      if (y > 15) b.set_covered(x, y, false);
    }
  EXPECT_NEAR(psnr_overlap(a, b), direct_psnr(a, b), 1e-9);
  const auto r = evaluate_overlap(a, b);
  EXPECT_EQ(r.evaluated_pixels, 22u * 16u);
}

TEST(Psnr, NoMutualCoverageThrows) {
  Image a(10, 10, true), b(10, 10, false);
  try {
    psnr_overlap(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyOverlap);
  }
}

TEST(Ssim, IdenticalIsOne) {
  Rng rng(3);
  const Image a = random_image(rng, 30, 30);
  EXPECT_EQ(ssim_overlap(a, a), 1.0);
}

TEST(Ssim, NegativeMatchesDirectWindowing) {
  Rng rng(4);
  Image a = random_image(rng, 40, 33);
  for (int y = 0; y < 33; ++y)
    for (int x = 0; x < 40; ++x)
      if (x + y < 12 || (x > 30 && y > 20)) a.set_covered(x, y, false);
  const Image b = negative(a);
  const double got = ssim_overlap(a, b);
  EXPECT_NEAR(got, direct_ssim(a, b), 1e-6);
  EXPECT_LT(got, 0.0);
}

TEST(Ssim, ConstantPlusFiftyClosedForm) {
  const Image a = make_image(15, 15, [](int, int) { return Rgb{100, 100, 100}; });
  const Image b = make_image(15, 15, [](int, int) { return Rgb{150, 150, 150}; });
  const double c1 = std::pow(0.01 * 255, 2);
  EXPECT_NEAR(ssim_overlap(a, b), (2 * 100.0 * 150.0 + c1) / (100.0 * 100 + 150.0 * 150 + c1),
              1e-6);
}

TEST(Ssim, NeedsAFullWindow) {
  Rng rng(5);
  Image a = random_image(rng, 20, 20);
  for (int x = 0; x < 20; ++x) a.set_covered(x, 10, false);
  try {
    ssim_overlap(a, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyOverlap);
  }
}

TEST(Metrics, SymmetricAndBounded) {
  Rng rng(6);
  for (int t = 0; t < 10; ++t) {
    const Image a = random_image(rng, 25, 25);
    Image b = a;
    for (auto& v : b.rgb()) {
      v = static_cast<std::uint8_t>(std::clamp(v + static_cast<int>(rng.index(60)) - 30, 0, 255));
    }
    EXPECT_EQ(psnr_overlap(a, b), psnr_overlap(b, a));
    const double s = ssim_overlap(a, b);
    EXPECT_NEAR(s, ssim_overlap(b, a), 1e-12);
    EXPECT_GE(s, -1.0);
    EXPECT_LE(s, 1.0);
    EXPECT_LT(s, 1.0);
  }
}

TEST(Metrics, ShrinkingCoverageIgnoresPixelsOutside) {
  Rng rng(7);
  Image a = random_image(rng, 40, 40);
  Image b = random_image(rng, 40, 40);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x)
      if (x >= 20) b.set_covered(x, y, false);
  const auto before = evaluate_overlap(a, b);
  // Scribbling over pixels outside the mutual coverage changes nothing.
  for (int y = 0; y < 40; ++y)
    for (int x = 20; x < 40; ++x) a.set(x, y, {0, 0, 0});
  const auto after = evaluate_overlap(a, b);
  EXPECT_EQ(before.psnr, after.psnr);
  EXPECT_EQ(before.ssim, after.ssim);
  EXPECT_EQ(before.evaluated_pixels, 800u);
  EXPECT_EQ(summary_line(before), summary_line(after));
}

}  // namespace
}  // namespace parastitch

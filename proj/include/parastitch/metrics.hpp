#pragma once

#include <cstddef>
#include <string>

#include "parastitch/image.hpp"

namespace parastitch {

inline constexpr double kPsnrCap = 99.0;

struct MetricReport {
  double psnr = 0.0;
  double ssim = 0.0;
  std::size_t evaluated_pixels = 0;  // mutually covered pixels
  std::size_t ssim_windows = 0;
};

// PSNR over RGB on mutually covered pixels, capped at kPsnrCap.
// Throws kEmptyOverlap without mutual coverage.
double psnr_overlap(const Image& a, const Image& b);

// Single-scale SSIM on ITU-R 601 luma with an 11x11 Gaussian window
// (sigma 1.5), averaged over windows lying fully in mutual coverage.
// Throws kEmptyOverlap when no such window exists.
double ssim_overlap(const Image& a, const Image& b);

MetricReport evaluate_overlap(const Image& a, const Image& b);

std::string summary_line(const MetricReport& m);

}  // namespace parastitch

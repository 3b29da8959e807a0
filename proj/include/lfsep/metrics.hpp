#pragma once

#include "lfsep/image.hpp"

#include <optional>
#include <string>

namespace lfsep::metrics {

/// Default intensity threshold for an incorrectly recovered pixel.
inline constexpr double kIncorrectThreshold = 0.1;
/// Default disparity error (pixels) for a bad pixel.
inline constexpr double kBadPixelThreshold = 1.0;

/// Percentage of pixels whose largest per-channel absolute error exceeds
/// `thresh`, over the pixels where `mask` is nonzero (all pixels when no mask
/// is given). Images with different channel counts are compared on luma.
double incorrect_pixel_pct(const Image& recovered, const Image& truth, double thresh,
                           const Mask* mask = nullptr);

double bad_pixel_pct(const Plane& d, const Plane& d_true, double delta = kBadPixelThreshold,
                     const Mask* mask = nullptr);
double mean_abs_error(const Plane& d, const Plane& d_true, const Mask* mask = nullptr);

/// Peak signal-to-noise ratio for unit peak; +inf for exact recovery.
double psnr(const Image& recovered, const Image& truth, const Mask* mask = nullptr);

struct EvalReport {
  double incorrect_pixel_pct_T = 0.0;
  double incorrect_pixel_pct_S = 0.0;
  double psnr_T = 0.0;
  double psnr_S = 0.0;
  double bad_pixel_pct_d = 0.0;
  double mean_abs_err_d = 0.0;
  double threshold = kIncorrectThreshold;
  double delta_d = kBadPixelThreshold;
  int evaluated_pixels = 0;
};

EvalReport evaluate(const Image& t, const Image& s, const Plane& d, const Image& t_true, const Image& s_true,
                    const Plane& d_true, const Mask* mask = nullptr, double thresh = kIncorrectThreshold,
                    double delta = kBadPixelThreshold);

std::string to_json(const EvalReport& report);
std::string csv_header();
std::string csv_row(const EvalReport& report);

}  // namespace lfsep::metrics

#pragma once

#include "lfsep/image.hpp"

namespace lfsep {

struct RefocusParams {
  double focal_disparity = 0.0;  // pixels
  double aperture = 1.0;         // blur radius per pixel of disparity deviation
};

/// Depth-guided defocus: each output pixel is the mean over a disc of radius
/// aperture * |d(p) - focal| centred on it (border-clamped); radii below half
/// a pixel pass the input through.
Image refocus(const Image& image, const DisparityMap& d, const RefocusParams& params);

/// Variance of the 4-neighbour Laplacian over the masked pixels (all when
/// mask is null), a sharpness measure.
double laplacian_variance(const Plane& plane, const Mask* mask = nullptr);

}  // namespace lfsep

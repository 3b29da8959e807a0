#include "lfsep/refocus.hpp"

#include <algorithm>
#include <cmath>

namespace lfsep {

Image refocus(const Image& image, const DisparityMap& d, const RefocusParams& params) {
  if (!(params.aperture > 0.0)) throw InputError("refocus: aperture must be positive");
  if (d.height() != image.height() || d.width() != image.width()) throw InputError("refocus: size mismatch");
  const int h = image.height();
  const int w = image.width();
  Image out = image;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double radius = params.aperture * std::abs(d(r, c) - params.focal_disparity);
      if (radius < 0.5) continue;
      const int reach = static_cast<int>(std::floor(radius));
      const double r2 = radius * radius;
      for (int ch = 0; ch < image.channel_count(); ++ch) {
        const Plane& src = image.channel(ch);
        double sum = 0.0;
        int count = 0;
        for (int dy = -reach; dy <= reach; ++dy) {
          for (int dx = -reach; dx <= reach; ++dx) {
            if (dx * dx + dy * dy > r2) continue;
            sum += src(std::clamp(r + dy, 0, h - 1), std::clamp(c + dx, 0, w - 1));
            ++count;
          }
        }
        out(r, c, ch) = sum / count;
      }
    }
  }
  return out;
}

double laplacian_variance(const Plane& p, const Mask* mask) {
  const int h = static_cast<int>(p.rows());
  const int w = static_cast<int>(p.cols());
  double sum = 0.0;
  double sq = 0.0;
  int n = 0;
  for (int r = 1; r + 1 < h; ++r) {
    for (int c = 1; c + 1 < w; ++c) {
      if (mask && (*mask)(r, c) == 0) continue;
      const double lap = p(r - 1, c) + p(r + 1, c) + p(r, c - 1) + p(r, c + 1) - 4.0 * p(r, c);
      sum += lap;
      sq += lap * lap;
      ++n;
    }
  }
  if (n == 0) return 0.0;
  const double mean = sum / n;
  return sq / n - mean * mean;
}

}  // namespace lfsep

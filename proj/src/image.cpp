#include "lfsep/image.hpp"

namespace lfsep {

Image::Image(int height, int width, int channels, double fill) : height_(height), width_(width) {
  if (height < 0 || width < 0 || channels < 1) throw InputError("invalid image shape");
  planes_.assign(static_cast<std::size_t>(channels), Plane::Constant(height, width, fill));
}

Image::Image(std::vector<Plane> channels) : planes_(std::move(channels)) {
  if (planes_.empty()) throw InputError("image needs at least one channel");
  height_ = static_cast<int>(planes_.front().rows());
  width_ = static_cast<int>(planes_.front().cols());
  for (const auto& p : planes_) {
    if (p.rows() != height_ || p.cols() != width_) throw InputError("channel planes differ in size");
  }
}

Image Image::from_plane(Plane plane) {
  std::vector<Plane> planes;
  planes.push_back(std::move(plane));
  return Image(std::move(planes));
}

Plane Image::luma() const {
  if (channel_count() == 1) return planes_[0];
  if (channel_count() != 3) throw InputError("luma needs one or three channels");
  return 0.299 * planes_[0] + 0.587 * planes_[1] + 0.114 * planes_[2];
}

RowVector unroll(const Plane& image) {
  return Eigen::Map<const RowVector>(image.data(), image.size());
}

Plane roll(const RowVector& vector, int height, int width) {
  if (height < 0 || width < 0 || vector.size() != static_cast<Eigen::Index>(height) * width) {
    throw InputError("roll: vector length " + std::to_string(vector.size()) + " does not match " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
  return Eigen::Map<const Plane>(vector.data(), height, width);
}

}  // namespace lfsep

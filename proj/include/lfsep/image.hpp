#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lfsep {

// All image-like data is stored row-major so that a single plane unrolls
// into a row vector without copying or reordering.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;
using Plane = Matrix;
using Mask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Raised for malformed inputs (missing files, inconsistent sizes, bad
// parameters). The CLI maps it to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A multi-channel image stored as one plane per channel.
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, double fill = 0.0);
  explicit Image(std::vector<Plane> channels);
  static Image from_plane(Plane plane);

  int height() const { return height_; }
  int width() const { return width_; }
  int channel_count() const { return static_cast<int>(planes_.size()); }
  bool empty() const { return planes_.empty(); }

  const Plane& channel(int c) const { return planes_.at(static_cast<std::size_t>(c)); }
  Plane& channel(int c) { return planes_.at(static_cast<std::size_t>(c)); }
  const std::vector<Plane>& channels() const { return planes_; }

  double operator()(int row, int col, int c = 0) const {
    return planes_[static_cast<std::size_t>(c)](row, col);
  }
  double& operator()(int row, int col, int c = 0) {
    return planes_[static_cast<std::size_t>(c)](row, col);
  }

  bool same_shape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           channel_count() == other.channel_count();
  }

  // ITU-R BT.601 luma for three channels; identity for one.
  Plane luma() const;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<Plane> planes_;
};

// Per-pixel disparity of the reference view, in pixels per one-hop grid step.
class DisparityMap {
 public:
  DisparityMap() = default;
  DisparityMap(int height, int width, double fill = 0.0) : values_(Plane::Constant(height, width, fill)) {}
  explicit DisparityMap(Plane values) : values_(std::move(values)) {}

  int height() const { return static_cast<int>(values_.rows()); }
  int width() const { return static_cast<int>(values_.cols()); }
  const Plane& values() const { return values_; }
  Plane& values() { return values_; }
  double operator()(int row, int col) const { return values_(row, col); }
  double& operator()(int row, int col) { return values_(row, col); }

  bool all_finite() const { return values_.allFinite(); }
  bool within(double lo, double hi) const {
    return values_.size() == 0 || (values_.minCoeff() >= lo && values_.maxCoeff() <= hi);
  }

 private:
  Plane values_;
};

// Row-major unrolling of a plane into a 1 x (h*w) vector and back.
RowVector unroll(const Plane& image);
Plane roll(const RowVector& vector, int height, int width);

}  // namespace lfsep

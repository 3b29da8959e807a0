#pragma once

#include "lfsep/image.hpp"

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace lfsep {

/// Position of a view within the camera grid relative to the central view,
/// in grid steps.
struct GridOffset {
  int dcol = 0;
  int drow = 0;

  double norm() const { return std::hypot(static_cast<double>(dcol), static_cast<double>(drow)); }
  bool is_zero() const { return dcol == 0 && drow == 0; }
  friend bool operator==(const GridOffset&, const GridOffset&) = default;
};

/// Offsets of an N x N grid in row-major view order. Throws InputError
/// unless N is odd and at least 3.
std::vector<GridOffset> grid_offsets(int grid_size);

/// A square grid of sub-aperture views. The central view is the reference.
class LightField {
 public:
  LightField(std::vector<Image> views, int grid_size);

  int grid_size() const { return grid_size_; }
  int view_count() const { return static_cast<int>(views_.size()); }
  int ref_index() const { return (view_count() - 1) / 2; }
  int height() const { return views_.front().height(); }
  int width() const { return views_.front().width(); }
  int channel_count() const { return views_.front().channel_count(); }

  const Image& view(int i) const { return views_.at(static_cast<std::size_t>(i)); }
  const Image& reference() const { return view(ref_index()); }
  const std::vector<Image>& views() const { return views_; }
  const std::vector<GridOffset>& offsets() const { return offsets_; }
  GridOffset offset(int i) const { return offsets_.at(static_cast<std::size_t>(i)); }

 private:
  int grid_size_;
  std::vector<Image> views_;
  std::vector<GridOffset> offsets_;
};

/// K x (h*w) matrix with one unrolled view per row.
struct LayerStack {
  Matrix data;
  int height = 0;
  int width = 0;

  int view_count() const { return static_cast<int>(data.rows()); }
  Plane row_image(int i) const { return roll(data.row(i), height, width); }
};

// ---- file formats -------------------------------------------------------

struct LightFieldManifest {
  int grid_size = 3;
  std::string baseline_note;
  double value_min = 0.0;
  double value_max = 1.0;
};

LightFieldManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const LightFieldManifest& manifest, const std::filesystem::path& path);

/// Loads `lf.json` plus `view_{row}_{col}.png|.pfm` from a directory. Without a
/// manifest the grid size is inferred from the view names (at least 3).
LightField load_lightfield(const std::filesystem::path& dir);
LightField load_lightfield(const std::filesystem::path& dir, const LightFieldManifest& manifest);
/// Writes 16-bit PNG views and the manifest.
void save_lightfield(const LightField& lf, const std::filesystem::path& dir, const std::string& baseline_note = "");

std::string view_filename(int row, int col, const std::string& extension);

/// PNG I/O with intensities mapped to [0,1]. 8- and 16-bit are accepted on
/// read; `bit_depth` selects the written depth.
Image read_png(const std::filesystem::path& path);
void write_png(const Image& image, const std::filesystem::path& path, int bit_depth = 8);

/// Portable float map, little-endian, one or three channels.
Image read_pfm(const std::filesystem::path& path);
void write_pfm(const Image& image, const std::filesystem::path& path);
DisparityMap read_disparity(const std::filesystem::path& path);
void write_disparity(const DisparityMap& d, const std::filesystem::path& path);

}  // namespace lfsep

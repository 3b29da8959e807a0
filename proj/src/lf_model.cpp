#include "lfsep/lf_model.hpp"

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <bit>
#include <cstring>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace lfsep {

namespace fs = std::filesystem;

std::vector<GridOffset> grid_offsets(int grid_size) {
  if (grid_size < 3 || grid_size % 2 == 0) {
    throw InputError("grid size must be odd and >= 3, got " + std::to_string(grid_size));
  }
  const int half = (grid_size - 1) / 2;
  std::vector<GridOffset> out;
  out.reserve(static_cast<std::size_t>(grid_size) * grid_size);
  for (int r = 0; r < grid_size; ++r) {
    for (int c = 0; c < grid_size; ++c) out.push_back({c - half, r - half});
  }
  return out;
}

LightField::LightField(std::vector<Image> views, int grid_size)
    : grid_size_(grid_size), views_(std::move(views)), offsets_(grid_offsets(grid_size)) {
  if (views_.size() != offsets_.size()) {
    throw InputError("missing view: expected " + std::to_string(offsets_.size()) + " views, got " +
                     std::to_string(views_.size()));
  }
  const Image& first = views_.front();
  if (first.channel_count() != 1 && first.channel_count() != 3) {
    throw InputError("views must have 1 or 3 channels");
  }
  if (first.height() < 2 || first.width() < 2) throw InputError("views must be at least 2x2");
  for (std::size_t i = 0; i < views_.size(); ++i) {
    if (!views_[i].same_shape(first)) {
      throw InputError("inconsistent dimensions: view " + std::to_string(i) + " is " +
                       std::to_string(views_[i].height()) + "x" + std::to_string(views_[i].width()) +
                       "x" + std::to_string(views_[i].channel_count()));
    }
    for (const auto& plane : views_[i].channels()) {
      if (!plane.allFinite() || plane.minCoeff() < 0.0 || plane.maxCoeff() > 1.0) {
        throw InputError("view " + std::to_string(i) + " has intensities outside [0,1]");
      }
    }
  }
}

std::string view_filename(int row, int col, const std::string& extension) {
  return "view_" + std::to_string(row) + "_" + std::to_string(col) + extension;
}

LightFieldManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed manifest " + path.string() + ": " + e.what());
  }
  LightFieldManifest m;
  if (!j.contains("grid_size")) throw InputError("manifest " + path.string() + " lacks grid_size");
  m.grid_size = j.at("grid_size").get<int>();
  m.baseline_note = j.value("baseline_note", std::string{});
  if (j.contains("value_range")) {
    const auto& r = j.at("value_range");
    m.value_min = r.at(0).get<double>();
    m.value_max = r.at(1).get<double>();
    if (!(m.value_max > m.value_min)) throw InputError("manifest value_range must be increasing");
  }
  return m;
}

void write_manifest(const LightFieldManifest& m, const fs::path& path) {
  nlohmann::json j = {{"grid_size", m.grid_size},
                      {"baseline_note", m.baseline_note},
                      {"value_range", {m.value_min, m.value_max}}};
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

LightField load_lightfield(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
  if (fs::exists(dir / "lf.json")) return load_lightfield(dir, read_manifest(dir / "lf.json"));
  // No manifest: take the grid size from the largest view index present.
  int n = 3;
  for (const auto& entry : fs::directory_iterator(dir)) {
    int r = 0;
    int c = 0;
    char ext[8] = {};
    if (std::sscanf(entry.path().filename().string().c_str(), "view_%d_%d.%3s", &r, &c, ext) == 3) {
      n = std::max({n, r + 1, c + 1});
    }
  }
  LightFieldManifest m;
  m.grid_size = n;
  return load_lightfield(dir, m);
}

LightField load_lightfield(const fs::path& dir, const LightFieldManifest& manifest) {
  const int n = manifest.grid_size;
  if (n < 3 || n % 2 == 0) throw InputError("grid size must be odd and >= 3, got " + std::to_string(n));
  std::vector<Image> views;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const fs::path png = dir / view_filename(r, c, ".png");
      const fs::path pfm = dir / view_filename(r, c, ".pfm");
      if (fs::exists(png)) {
        views.push_back(read_png(png));
      } else if (fs::exists(pfm)) {
        Image img = read_pfm(pfm);
        const double scale = 1.0 / (manifest.value_max - manifest.value_min);
        for (int ch = 0; ch < img.channel_count(); ++ch) {
          img.channel(ch) = ((img.channel(ch).array() - manifest.value_min) * scale).cwiseMax(0.0).cwiseMin(1.0);
        }
        views.push_back(std::move(img));
      } else {
        throw InputError("missing view: " + png.string());
      }
      if (!views.back().same_shape(views.front())) {
        throw InputError("inconsistent dimensions: " + view_filename(r, c, "") + " is " +
                         std::to_string(views.back().height()) + "x" + std::to_string(views.back().width()));
      }
    }
  }
  return LightField(std::move(views), n);
}

void save_lightfield(const LightField& lf, const fs::path& dir, const std::string& baseline_note) {
  fs::create_directories(dir);
  const int n = lf.grid_size();
  for (int i = 0; i < lf.view_count(); ++i) {
    write_png(lf.view(i), dir / view_filename(i / n, i % n, ".png"), 16);
  }
  write_manifest({n, baseline_note, 0.0, 1.0}, dir / "lf.json");
}

// ---- PNG ----------------------------------------------------------------

Image read_png(const fs::path& path) {
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw InputError("cannot read image " + path.string());
  double scale = 1.0;
  switch (raw.depth()) {
    case CV_8U: scale = 1.0 / 255.0; break;
    case CV_16U: scale = 1.0 / 65535.0; break;
    default: throw InputError("unsupported PNG bit depth in " + path.string());
  }
  if (raw.channels() == 4) cv::cvtColor(raw, raw, cv::COLOR_BGRA2BGR);
  if (raw.channels() == 2) throw InputError("gray+alpha PNG not supported: " + path.string());
  cv::Mat f;
  raw.convertTo(f, CV_64F, scale);
  std::vector<cv::Mat> split;
  cv::split(f, split);
  std::vector<Plane> planes;
  // OpenCV stores BGR; expose RGB.
  for (int c = static_cast<int>(split.size()) - 1; c >= 0; --c) {
    Plane p(f.rows, f.cols);
    for (int r = 0; r < f.rows; ++r) {
      std::memcpy(p.row(r).data(), split[static_cast<std::size_t>(c)].ptr<double>(r), sizeof(double) * static_cast<std::size_t>(f.cols));
    }
    planes.push_back(std::move(p));
  }
  return Image(std::move(planes));
}

void write_png(const Image& image, const fs::path& path, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw InputError("PNG bit depth must be 8 or 16");
  const double maxv = bit_depth == 8 ? 255.0 : 65535.0;
  std::vector<cv::Mat> planes;
  for (int c = image.channel_count() - 1; c >= 0; --c) {
    cv::Mat m(image.height(), image.width(), bit_depth == 8 ? CV_8U : CV_16U);
    const Plane& p = image.channel(c);
    for (int r = 0; r < image.height(); ++r) {
      for (int col = 0; col < image.width(); ++col) {
        const double v = std::clamp(p(r, col), 0.0, 1.0) * maxv + 0.5;
        if (bit_depth == 8) {
          m.at<std::uint8_t>(r, col) = static_cast<std::uint8_t>(v);
        } else {
          m.at<std::uint16_t>(r, col) = static_cast<std::uint16_t>(v);
        }
      }
    }
    planes.push_back(m);
  }
  cv::Mat merged;
  cv::merge(planes, merged);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), merged)) throw InputError("cannot write image " + path.string());
}

// ---- PFM ----------------------------------------------------------------

Image read_pfm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::string magic;
  int width = 0;
  int height = 0;
  double scale = 0.0;
  in >> magic >> width >> height >> scale;
  in.get();  // single whitespace before the raster
  if (!in || (magic != "Pf" && magic != "PF") || width <= 0 || height <= 0 || scale == 0.0) {
    throw InputError("malformed PFM header in " + path.string());
  }
  const int channels = magic == "PF" ? 3 : 1;
  const bool little = scale < 0.0;
  const bool host_little = std::endian::native == std::endian::little;
  std::vector<float> raw(static_cast<std::size_t>(width) * height * channels);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!in) throw InputError("truncated PFM raster in " + path.string());
  if (little != host_little) {
    for (auto& v : raw) {
      std::uint32_t bits = 0;
      std::memcpy(&bits, &v, 4);
      bits = __builtin_bswap32(bits);
      std::memcpy(&v, &bits, 4);
    }
  }
  Image img(height, width, channels);
  // Rows are stored bottom to top.
  std::size_t k = 0;
  for (int r = height - 1; r >= 0; --r) {
    for (int c = 0; c < width; ++c) {
      for (int ch = 0; ch < channels; ++ch) img(r, c, ch) = static_cast<double>(raw[k++]);
    }
  }
  return img;
}

void write_pfm(const Image& image, const fs::path& path) {
  const int channels = image.channel_count();
  if (channels != 1 && channels != 3) throw InputError("PFM supports 1 or 3 channels");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << (channels == 3 ? "PF" : "Pf") << "\n" << image.width() << " " << image.height() << "\n-1.0\n";
  std::vector<float> raw;
  raw.reserve(static_cast<std::size_t>(image.width()) * image.height() * channels);
  for (int r = image.height() - 1; r >= 0; --r) {
    for (int c = 0; c < image.width(); ++c) {
      for (int ch = 0; ch < channels; ++ch) raw.push_back(static_cast<float>(image(r, c, ch)));
    }
  }
  if constexpr (std::endian::native != std::endian::little) {
    for (auto& v : raw) {
      std::uint32_t bits = 0;
      std::memcpy(&bits, &v, 4);
      bits = __builtin_bswap32(bits);
      std::memcpy(&v, &bits, 4);
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(float)));
}

DisparityMap read_disparity(const fs::path& path) {
  Image img = read_pfm(path);
  if (img.channel_count() != 1) throw InputError("disparity PFM must be single-channel: " + path.string());
  return DisparityMap(img.channel(0));
}

void write_disparity(const DisparityMap& d, const fs::path& path) {
  write_pfm(Image::from_plane(d.values()), path);
}

}  // namespace lfsep

#include "lfsep/synth.hpp"

#include "lfsep/warp.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace lfsep::synth {

namespace {

// Uniform in [0,1) from raw engine output, independent of the standard
// library's distribution implementations.
class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : engine_(seed) {}
  double operator()() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double operator()(double lo, double hi) { return lo + (hi - lo) * (*this)(); }

 private:
  std::mt19937_64 engine_;
};

constexpr double kDarkFloor = 0.5;
constexpr double kToneGain = 0.8;
constexpr int kBarCount = 24;
constexpr int kDiscCount = 36;

double smooth_edge(double signed_distance, double softness) {
  return 0.5 + 0.5 * std::tanh(signed_distance / softness);
}

struct Wave {
  double kx, ky, phase, amplitude;
};

struct Disc {
  double cx, cy, radius;
};

struct Bar {
  double cx, cy, nx, ny, half_width, half_length;
};

// Dense layers are tone-mapped band-limited noise with a dark floor; sparse
// layers are soft capsules and discs on black. Scaled to image size.
class ProceduralTexture {
 public:
  ProceduralTexture(std::uint64_t seed, double scale, bool sparse) : sparse_(sparse), scale_(scale) {
    Uniform u(seed);
    if (!sparse) {
      double norm = 0.0;
      for (int k = 0; k < 24; ++k) {
        const double wavelength = u(6.0, 17.0) * scale;
        const double theta = u(0.0, std::numbers::pi);
        const double amp = u(0.5, 1.0);
        waves_.push_back({2.0 * std::numbers::pi / wavelength * std::cos(theta),
                          2.0 * std::numbers::pi / wavelength * std::sin(theta), u(0.0, 2.0 * std::numbers::pi), amp});
        norm += amp * amp;
      }
      wave_norm_ = std::sqrt(0.5 * norm);
    } else {
      for (int k = 0; k < kBarCount; ++k) {
        const double theta = u(0.0, std::numbers::pi);
        bars_.push_back({u(6.0, 58.0) * scale, u(6.0, 58.0) * scale, std::cos(theta), std::sin(theta),
                         u(1.0, 2.0) * scale, u(4.0, 8.0) * scale});
      }
      for (int k = 0; k < kDiscCount; ++k) discs_.push_back({u(4.0, 60.0) * scale, u(4.0, 60.0) * scale, u(1.5, 3.5) * scale});
    }
  }

  double operator()(double x, double y) const {
    if (sparse_) {
      const double soft = 2.0 * scale_;
      double shapes = 0.0;
      for (const auto& d : discs_) {
        shapes = std::max(shapes, smooth_edge(d.radius - std::hypot(x - d.cx, y - d.cy), soft));
      }
      for (const auto& b : bars_) {
        const double across = std::abs((x - b.cx) * b.nx + (y - b.cy) * b.ny);
        const double along = std::max(0.0, std::abs((x - b.cx) * b.ny - (y - b.cy) * b.nx) - b.half_length);
        const double dist = std::hypot(across, along);
        shapes = std::max(shapes, smooth_edge(b.half_width - dist, soft));
      }
      return shapes;
    }
    double s = 0.0;
    for (const auto& w : waves_) s += w.amplitude * std::sin(w.kx * x + w.ky * y + w.phase);
    const double v = 0.5 + 0.5 * std::tanh(kToneGain * s / wave_norm_);
    return std::max(0.0, (v - kDarkFloor) / (1.0 - kDarkFloor));
  }

 private:
  bool sparse_;
  double scale_;
  double wave_norm_ = 1.0;
  std::vector<Wave> waves_;
  std::vector<Disc> discs_;
  std::vector<Bar> bars_;
};

// A texture source for one layer: procedural per channel, or an image.
class Layer {
 public:
  Layer(const std::optional<Image>& image, std::uint64_t seed, int channels, double scale, bool sparse)
      : image_(image) {
    if (!image_) {
      for (int c = 0; c < channels; ++c) procedural_.emplace_back(seed + 7919u * static_cast<std::uint64_t>(c), scale, sparse);
    }
  }

  double operator()(double x, double y, int channel) const {
    if (image_) {
      const int c = std::min(channel, image_->channel_count() - 1);
      return sample_bilinear(image_->channel(c), x, y);
    }
    return procedural_[static_cast<std::size_t>(channel)](x, y);
  }

 private:
  std::optional<Image> image_;
  std::vector<ProceduralTexture> procedural_;
};

double texture_scale(const SyntheticSpec& spec) { return std::min(spec.height, spec.width) / 64.0; }

}  // namespace

double SyntheticSpec::resolved_secondary_motion() const {
  return secondary_motion.value_or(20.0 * width / 1024.0);
}

void SyntheticSpec::validate() const {
  if (grid_size < 3 || grid_size % 2 == 0) throw InputError("synthetic grid size must be odd and >= 3");
  if (height < 8 || width < 8) throw InputError("synthetic images must be at least 8x8");
  if (channels != 1 && channels != 3) throw InputError("synthetic channels must be 1 or 3");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw InputError("alpha must lie in [0, 1)");
  const double m = resolved_secondary_motion();
  if (!std::isfinite(m) || !std::isfinite(secondary_offset_x) || !std::isfinite(secondary_offset_y) ||
      !std::isfinite(disparity) || !std::isfinite(front_disparity)) {
    throw InputError("synthetic motions must be finite");
  }
  const double reach = (grid_size - 1) / 2.0 * std::sqrt(2.0);
  const double limit = std::min(height, width);
  if (std::abs(m) * reach >= limit) throw InputError("secondary motion pushes content fully out of frame");
  double dmax = std::max(std::abs(disparity), std::abs(front_disparity));
  if (disparity_field) {
    if (disparity_field->height() != height || disparity_field->width() != width) {
      throw InputError("disparity field size does not match the spec");
    }
    dmax = disparity_field->values().cwiseAbs().maxCoeff();
  }
  if (dmax * reach >= limit) throw InputError("disparity pushes content fully out of frame");
  if (scene == SceneKind::TwoPlane && !(front_extent > 0.0 && front_extent < 1.0)) {
    throw InputError("front_extent must lie in (0, 1)");
  }
  if (scene == SceneKind::DisparityField && !disparity_field) throw InputError("disparity field scene needs a field");
}

DisparityMap scene_disparity(const SyntheticSpec& spec) {
  switch (spec.scene) {
    case SceneKind::Planar: return DisparityMap(spec.height, spec.width, spec.disparity);
    case SceneKind::DisparityField: return *spec.disparity_field;
    case SceneKind::TwoPlane: break;
  }
  DisparityMap d(spec.height, spec.width, spec.disparity);
  const double side = spec.front_extent * std::min(spec.height, spec.width);
  const double cx = (spec.width - 1) / 2.0;
  const double cy = (spec.height - 1) / 2.0;
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      if (std::abs(c - cx) <= side / 2 && std::abs(r - cy) <= side / 2) d(r, c) = spec.front_disparity;
    }
  }
  return d;
}

LayerViews render_layers(const SyntheticSpec& spec) {
  spec.validate();
  const double scale = texture_scale(spec);
  const Layer back(spec.transmitted_texture, spec.seed, spec.channels, scale, false);
  const Layer front(spec.transmitted_texture, spec.seed + 1, spec.channels, scale, false);
  const Layer secondary(spec.secondary_texture, spec.seed + 2, spec.channels, scale, true);
  const double m = spec.resolved_secondary_motion();
  const DisparityMap dref = scene_disparity(spec);
  const double side = spec.front_extent * std::min(spec.height, spec.width);
  const double cx = (spec.width - 1) / 2.0;
  const double cy = (spec.height - 1) / 2.0;
  auto in_front = [&](double x, double y) { return std::abs(x - cx) <= side / 2 && std::abs(y - cy) <= side / 2; };

  LayerViews out;
  for (const GridOffset phi : grid_offsets(spec.grid_size)) {
    Image t(spec.height, spec.width, spec.channels);
    Image s(spec.height, spec.width, spec.channels);
    for (int r = 0; r < spec.height; ++r) {
      for (int c = 0; c < spec.width; ++c) {
        // Scene point seen at (c, r) in this view, in reference coordinates.
        double px = 0.0;
        double py = 0.0;
        bool front_hit = false;
        switch (spec.scene) {
          case SceneKind::Planar:
            px = c + spec.disparity * phi.dcol;
            py = r + spec.disparity * phi.drow;
            break;
          case SceneKind::TwoPlane: {
            const double fx = c + spec.front_disparity * phi.dcol;
            const double fy = r + spec.front_disparity * phi.drow;
            front_hit = in_front(fx, fy);
            px = front_hit ? fx : c + spec.disparity * phi.dcol;
            py = front_hit ? fy : r + spec.disparity * phi.drow;
            break;
          }
          case SceneKind::DisparityField: {
            px = c;
            py = r;
            for (int it = 0; it < 4; ++it) {
              const double dv = sample_bilinear(dref.values(), px, py);
              px = c + dv * phi.dcol;
              py = r + dv * phi.drow;
            }
            break;
          }
        }
        for (int ch = 0; ch < spec.channels; ++ch) {
          t(r, c, ch) = front_hit ? front(px, py, ch) : back(px, py, ch);
          s(r, c, ch) = secondary(c - m * phi.dcol - spec.secondary_offset_x, r - m * phi.drow - spec.secondary_offset_y, ch);
        }
      }
    }
    out.transmitted.push_back(std::move(t));
    out.secondary.push_back(std::move(s));
  }
  return out;
}

SyntheticInstance render(const SyntheticSpec& spec) {
  const LayerViews layers = render_layers(spec);
  const double a = spec.alpha;
  std::vector<Image> views;
  for (std::size_t i = 0; i < layers.transmitted.size(); ++i) {
    std::vector<Plane> planes;
    for (int ch = 0; ch < spec.channels; ++ch) {
      planes.push_back((1.0 - a) * layers.transmitted[i].channel(ch) + a * layers.secondary[i].channel(ch));
    }
    views.emplace_back(std::move(planes));
  }
  const std::size_t ref = (layers.transmitted.size() - 1) / 2;
  GroundTruth truth;
  truth.alpha = a;
  truth.disparity = scene_disparity(spec);
  std::vector<Plane> tp;
  std::vector<Plane> sp;
  for (int ch = 0; ch < spec.channels; ++ch) {
    tp.push_back((1.0 - a) * layers.transmitted[ref].channel(ch));
    sp.push_back(a * layers.secondary[ref].channel(ch));
  }
  truth.transmitted = Image(std::move(tp));
  truth.secondary = Image(std::move(sp));
  return {LightField(std::move(views), spec.grid_size), std::move(truth)};
}

std::vector<SyntheticInstance> alpha_sweep(const SyntheticSpec& spec, const std::vector<double>& alphas) {
  for (double a : alphas) {
    if (!(a >= 0.0 && a < 1.0)) throw InputError("alpha must lie in [0, 1)");
  }
  std::vector<SyntheticInstance> out;
  for (double a : alphas) {
    SyntheticSpec s = spec;
    s.alpha = a;
    out.push_back(render(s));
  }
  return out;
}

namespace {

std::string scene_name(SceneKind k) {
  switch (k) {
    case SceneKind::Planar: return "planar";
    case SceneKind::TwoPlane: return "two_plane";
    case SceneKind::DisparityField: return "disparity_field";
  }
  return "planar";
}

}  // namespace

std::string spec_to_json(const SyntheticSpec& spec) {
  nlohmann::json j = {{"grid_size", spec.grid_size},
                      {"height", spec.height},
                      {"width", spec.width},
                      {"channels", spec.channels},
                      {"scene", scene_name(spec.scene)},
                      {"disparity", spec.disparity},
                      {"front_disparity", spec.front_disparity},
                      {"front_extent", spec.front_extent},
                      {"secondary_motion", spec.resolved_secondary_motion()},
                      {"secondary_offset", {spec.secondary_offset_x, spec.secondary_offset_y}},
                      {"alpha", spec.alpha},
                      {"blending", "convex: (1-alpha)*T + alpha*S"},
                      {"seed", spec.seed}};
  if (!spec.transmitted_texture_path.empty()) j["transmitted_texture"] = spec.transmitted_texture_path;
  if (!spec.secondary_texture_path.empty()) j["secondary_texture"] = spec.secondary_texture_path;
  return j.dump(2);
}

SyntheticSpec spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed synthetic spec: ") + e.what());
  }
  SyntheticSpec s;
  try {
    s.grid_size = j.value("grid_size", s.grid_size);
    s.height = j.value("height", s.height);
    s.width = j.value("width", s.width);
    s.channels = j.value("channels", s.channels);
    const std::string scene = j.value("scene", std::string("planar"));
    if (scene == "planar") {
      s.scene = SceneKind::Planar;
    } else if (scene == "two_plane") {
      s.scene = SceneKind::TwoPlane;
    } else if (scene == "disparity_field") {
      s.scene = SceneKind::DisparityField;
      if (!j.contains("disparity_field")) throw InputError("disparity_field scene needs a disparity_field path");
      s.disparity_field = read_disparity(j.at("disparity_field").get<std::string>());
    } else {
      throw InputError("unknown scene kind: " + scene);
    }
    s.disparity = j.value("disparity", s.disparity);
    s.front_disparity = j.value("front_disparity", s.front_disparity);
    s.front_extent = j.value("front_extent", s.front_extent);
    if (j.contains("secondary_motion") && !j["secondary_motion"].is_null()) {
      s.secondary_motion = j["secondary_motion"].get<double>();
    }
    if (j.contains("secondary_offset")) {
      s.secondary_offset_x = j["secondary_offset"].at(0).get<double>();
      s.secondary_offset_y = j["secondary_offset"].at(1).get<double>();
    }
    s.alpha = j.value("alpha", s.alpha);
    s.seed = j.value("seed", s.seed);
    if (j.contains("transmitted_texture")) {
      s.transmitted_texture_path = j["transmitted_texture"].get<std::string>();
      s.transmitted_texture = read_png(s.transmitted_texture_path);
    }
    if (j.contains("secondary_texture")) {
      s.secondary_texture_path = j["secondary_texture"].get<std::string>();
      s.secondary_texture = read_png(s.secondary_texture_path);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad synthetic spec field: ") + e.what());
  }
  s.validate();
  return s;
}

void write_instance(const SyntheticInstance& instance, const SyntheticSpec& spec, const std::filesystem::path& dir) {
  save_lightfield(instance.lf, dir, "synthetic; disparity in pixels per grid step");
  const auto gt = dir / "gt";
  std::filesystem::create_directories(gt);
  write_png(instance.truth.transmitted, gt / "T_ref.png", 16);
  write_png(instance.truth.secondary, gt / "S_ref.png", 16);
  write_disparity(instance.truth.disparity, gt / "d_true.pfm");
  std::ofstream(gt / "spec.json") << spec_to_json(spec) << "\n";
}

GroundTruth read_ground_truth(const std::filesystem::path& gt_dir) {
  GroundTruth g;
  g.transmitted = read_png(gt_dir / "T_ref.png");
  g.secondary = read_png(gt_dir / "S_ref.png");
  g.disparity = read_disparity(gt_dir / "d_true.pfm");
  std::ifstream in(gt_dir / "spec.json");
  if (in) {
    nlohmann::json j;
    in >> j;
    g.alpha = j.value("alpha", 0.0);
  }
  return g;
}

SyntheticSpec two_plane_preset(double alpha, std::uint64_t seed) {
  SyntheticSpec s;
  s.scene = SceneKind::TwoPlane;
  s.disparity = 2.0;
  s.front_disparity = 3.0;
  s.alpha = alpha;
  s.seed = seed;
  return s;
}

SyntheticSpec planar_preset(double alpha, std::uint64_t seed) {
  SyntheticSpec s;
  s.scene = SceneKind::Planar;
  s.disparity = 1.0;
  s.alpha = alpha;
  s.seed = seed;
  return s;
}

}  // namespace lfsep::synth

#pragma once

#include "lfsep/lf_model.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lfsep::synth {

enum class SceneKind { Planar, TwoPlane, DisparityField };

struct SyntheticSpec {
  int grid_size = 3;
  int height = 64;
  int width = 64;
  int channels = 1;
  SceneKind scene = SceneKind::Planar;
  /// Disparity of the plane (Planar) or of the background (TwoPlane).
  double disparity = 1.0;
  /// TwoPlane only: disparity of a centred square covering `front_extent` of
  /// each image side.
  double front_disparity = 2.0;
  double front_extent = 0.45;
  /// DisparityField only: per-pixel disparity in reference coordinates.
  std::optional<DisparityMap> disparity_field;
  /// Secondary-layer motion in pixels per grid step, opposite to the
  /// transmitted layer's. Unset means 20 px per step at 1024 px width, scaled.
  std::optional<double> secondary_motion;
  /// Translation of the secondary layer in every view (pixels); used to
  /// animate sequences.
  double secondary_offset_x = 0.0;
  double secondary_offset_y = 0.0;
  double alpha = 0.2;
  std::uint64_t seed = 1;
  /// Optional image textures (sampled bilinearly with border clamping).
  std::optional<Image> transmitted_texture;
  std::optional<Image> secondary_texture;
  std::string transmitted_texture_path;
  std::string secondary_texture_path;

  double resolved_secondary_motion() const;
  void validate() const;
};

std::string spec_to_json(const SyntheticSpec& spec);
/// Texture images referenced by path are loaded.
SyntheticSpec spec_from_json(const std::string& text);

struct GroundTruth {
  Image transmitted;  // (1 - alpha) * transmitted texture, reference view
  Image secondary;    // alpha * secondary texture, reference view
  DisparityMap disparity;
  double alpha = 0.0;
};

struct SyntheticInstance {
  LightField lf;
  GroundTruth truth;
};

/// Unweighted per-view layers (both in [0,1]).
struct LayerViews {
  std::vector<Image> transmitted;
  std::vector<Image> secondary;
};

LayerViews render_layers(const SyntheticSpec& spec);
SyntheticInstance render(const SyntheticSpec& spec);
std::vector<SyntheticInstance> alpha_sweep(const SyntheticSpec& spec, const std::vector<double>& alphas);

/// Reference-view disparity of the scene.
DisparityMap scene_disparity(const SyntheticSpec& spec);

/// Writes the light-field layout plus gt/{T_ref.png,S_ref.png,d_true.pfm,spec.json}.
void write_instance(const SyntheticInstance& instance, const SyntheticSpec& spec, const std::filesystem::path& dir);
GroundTruth read_ground_truth(const std::filesystem::path& gt_dir);

/// Two-plane scene used for the blending sweep.
SyntheticSpec two_plane_preset(double alpha, std::uint64_t seed = 7);
/// Single textured plane.
SyntheticSpec planar_preset(double alpha, std::uint64_t seed = 3);

}  // namespace lfsep::synth

#pragma once

#include "lfsep/lf_model.hpp"

#include <filesystem>
#include <vector>

namespace lfsep {

/// Dense 2-D flow on the reference grid: ref(u) ~ src(u + w(u)).
struct FlowField {
  Plane wx;
  Plane wy;

  int height() const { return static_cast<int>(wx.rows()); }
  int width() const { return static_cast<int>(wx.cols()); }
  static FlowField zeros(int height, int width) {
    return {Plane::Zero(height, width), Plane::Zero(height, width)};
  }
};

struct MatcherOptions {
  int levels = 3;
  int patch_radius = 2;
  /// Cost added per pixel of deviation from the coarser level's flow (and
  /// from zero at the coarsest level).
  double smoothness = 0.02;
  /// Search half-width at finer levels around the propagated flow.
  int refine_radius = 1;
  /// Below this local standard deviation a patch is treated as textureless.
  double min_patch_std = 1e-3;
};

/// Coarse-to-fine NCC block matching with parabolic sub-pixel refinement and a
/// 3x3 median on the result. `radius` bounds the search at full resolution.
FlowField dense_correspondence(const Plane& src, const Plane& ref, int radius,
                               const MatcherOptions& options = {});

/// |w_i . phi_i| below this (pixels) excludes a view from the average.
inline constexpr double kDegenerateFlow = 0.25;

/// Averages the per-view disparity estimates implied by each flow. With the
/// warp convention V_i(p) = src_i(p - d(p) phi_i), a view moving purely by
/// disparity has w_i = -d * phi_i, so the estimate is -(w.w)/(w.phi).
/// Pixels without any contributing view take the median of valid neighbours
/// (or 0 when none exist). Throws InputError if no view can ever contribute.
DisparityMap initial_disparity(const std::vector<FlowField>& flows, const std::vector<GridOffset>& offsets);

Plane median_filter3(const Plane& in);

/// Runs the built-in matcher on every non-reference view (luma), averages and
/// median-filters the result, and clamps to [dmin, dmax].
DisparityMap estimate_initial_disparity(const LightField& lf, int radius, double dmin, double dmax);

/// Same but with externally supplied flows (one per view, zero for the reference).
DisparityMap initial_disparity_from_flows(const std::vector<FlowField>& flows, const LightField& lf,
                                          double dmin, double dmax);

/// Middlebury .flo files.
FlowField read_flo(const std::filesystem::path& path);
void write_flo(const FlowField& flow, const std::filesystem::path& path);

/// Loads `flow_{row}_{col}.flo` for every non-reference view of an N x N grid.
std::vector<FlowField> load_flow_dir(const std::filesystem::path& dir, int grid_size, int height, int width);

}  // namespace lfsep

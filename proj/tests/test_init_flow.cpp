#include "lfsep/init_flow.hpp"
#include "lfsep/synth.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace lfsep;

namespace {

Plane texture(int h, int w, std::uint64_t seed) {
  auto spec = synth::planar_preset(0.0, seed);
  spec.height = h;
  spec.width = w;
  return synth::render(spec).lf.reference().channel(0);
}

std::vector<FlowField> pure_disparity_flows(const Plane& d, const std::vector<GridOffset>& offsets) {
  std::vector<FlowField> flows;
  for (const auto& phi : offsets) flows.push_back({-phi.dcol * d, -phi.drow * d});
  return flows;
}

}  // namespace

TEST_CASE("identical images give zero flow") {
  const Plane img = texture(40, 40, 5);
  const FlowField f = dense_correspondence(img, img, 3);
  CHECK(f.wx.isZero(0.0));
  CHECK(f.wy.isZero(0.0));
}

TEST_CASE("a two-pixel shift is recovered on the interior") {
  const Plane ref = texture(48, 48, 6);
  Plane src(48, 48);
  for (int r = 0; r < 48; ++r) {
    for (int c = 0; c < 48; ++c) src(r, c) = ref(r, std::max(c - 2, 0));
  }
  const FlowField f = dense_correspondence(src, ref, 4);
  int good = 0, total = 0;
  for (int r = 6; r < 42; ++r) {
    for (int c = 6; c < 42; ++c) {
      ++total;
      if (std::abs(f.wx(r, c) - 2.0) <= 0.5 && std::abs(f.wy(r, c)) <= 0.5) ++good;
    }
  }
  CHECK(good >= 0.95 * total);
}

TEST_CASE("textureless images give zero flow") {
  const Plane flat = Plane::Constant(24, 24, 0.3);
  const FlowField f = dense_correspondence(flat, flat, 3);
  CHECK(f.wx.isZero(0.0));
  CHECK(f.wy.isZero(0.0));
}

TEST_CASE("matcher rejects a radius larger than the image") {
  CHECK_THROWS_AS(dense_correspondence(Plane::Zero(8, 8), Plane::Zero(8, 8), 20), InputError);
  CHECK_THROWS_AS(dense_correspondence(Plane::Zero(8, 8), Plane::Zero(8, 8), 0), InputError);
}

TEST_CASE("pure disparity flows recover the disparity exactly") {
  std::mt19937_64 rng(1);
  for (int n : {3, 5}) {
    const auto offsets = grid_offsets(n);
    const Plane d = testing::random_matrix(12, 15, rng, 0.5, 3.0);
    const DisparityMap d0 = initial_disparity(pure_disparity_flows(d, offsets), offsets);
    for (Eigen::Index k = 0; k < d.size(); ++k) {
      CHECK(std::abs(std::abs(d0.values().data()[k]) - d.data()[k]) <= 1e-6 * d.data()[k]);
      // Sign follows the warp convention.
      CHECK(d0.values().data()[k] > 0.0);
    }
  }
}

TEST_CASE("negative disparities keep their sign") {
  const auto offsets = grid_offsets(3);
  const Plane d = Plane::Constant(5, 5, -1.5);
  const DisparityMap d0 = initial_disparity(pure_disparity_flows(d, offsets), offsets);
  CHECK((d0.values() - d).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("all-zero flows give zero disparity") {
  const auto offsets = grid_offsets(3);
  std::vector<FlowField> flows(9, FlowField::zeros(6, 6));
  CHECK(initial_disparity(flows, offsets).values().isZero(0.0));
}

TEST_CASE("a reference-only grid has no contributing views") {
  CHECK_THROWS_AS(initial_disparity({FlowField::zeros(4, 4)}, {GridOffset{0, 0}}), InputError);
}

TEST_CASE("initial disparity is scale consistent") {
  std::mt19937_64 rng(2);
  const auto offsets = grid_offsets(3);
  const Plane d = testing::random_matrix(8, 8, rng, 0.5, 2.0);
  auto flows = pure_disparity_flows(d, offsets);
  // Perturb so the per-view estimates disagree.
  for (auto& f : flows) f.wx += 0.1 * testing::random_matrix(8, 8, rng);
  const DisparityMap base = initial_disparity(flows, offsets);
  for (auto& f : flows) {
    f.wx *= 2.0;
    f.wy *= 2.0;
  }
  const DisparityMap scaled = initial_disparity(flows, offsets);
  CHECK((scaled.values() - 2.0 * base.values()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("degenerate pixels take neighbouring values") {
  const auto offsets = grid_offsets(3);
  Plane d = Plane::Constant(7, 7, 2.0);
  auto flows = pure_disparity_flows(d, offsets);
  for (auto& f : flows) {
    f.wx(3, 3) = 0.0;
    f.wy(3, 3) = 0.0;
  }
  const DisparityMap d0 = initial_disparity(flows, offsets);
  CHECK(d0(3, 3) == doctest::Approx(2.0));
}

TEST_CASE("initial disparity is deterministic") {
  std::mt19937_64 rng(3);
  const auto offsets = grid_offsets(3);
  auto flows = pure_disparity_flows(testing::random_matrix(9, 9, rng, 0.5, 2.0), offsets);
  CHECK(initial_disparity(flows, offsets).values() == initial_disparity(flows, offsets).values());
}

TEST_CASE("median filter removes an isolated outlier") {
  Plane p = Plane::Constant(5, 5, 1.0);
  p(2, 2) = 50.0;
  CHECK(median_filter3(p)(2, 2) == 1.0);
}

TEST_CASE("matcher initialisation on a planar scene is close") {
  const auto inst = synth::render(synth::planar_preset(0.0));
  const DisparityMap d0 = estimate_initial_disparity(inst.lf, 4, -8.0, 8.0);
  double err = 0.0;
  for (int r = 8; r < 56; ++r) {
    for (int c = 8; c < 56; ++c) err += std::abs(d0(r, c) - 1.0);
  }
  CHECK(err / (48.0 * 48.0) < 0.2);
}

TEST_CASE("flo files round trip") {
  std::mt19937_64 rng(4);
  const auto dir = testing::scratch_dir("flo");
  const FlowField f{testing::random_matrix(6, 9, rng, -3, 3), testing::random_matrix(6, 9, rng, -3, 3)};
  write_flo(f, dir / "a.flo");
  const FlowField g = read_flo(dir / "a.flo");
  CHECK((g.wx - f.wx.cast<float>().cast<double>()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g.wy - f.wy.cast<float>().cast<double>()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("flow directory loading reports missing files") {
  const auto dir = testing::scratch_dir("flo_dir");
  CHECK_THROWS_AS(load_flow_dir(dir, 3, 4, 4), InputError);
}

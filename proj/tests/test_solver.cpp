#include "lfsep/init_flow.hpp"
#include "lfsep/metrics.hpp"
#include "lfsep/solver.hpp"
#include "lfsep/synth.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/SVD>
#include <cmath>

using namespace lfsep;

namespace {

LightField random_lightfield(int n, int h, int w, int channels, std::mt19937_64& rng) {
  std::vector<Image> views;
  for (int i = 0; i < n * n; ++i) {
    std::vector<Plane> planes;
    for (int c = 0; c < channels; ++c) planes.push_back(testing::random_matrix(h, w, rng, 0.0, 1.0));
    views.emplace_back(std::move(planes));
  }
  return LightField(views, n);
}

SolverState state_for(const LightField& lf, const DisparityMap& d) {
  return init_state(linearize(lf, d), d);
}

// Forward differences with replicate boundary, written out per pixel.
Matrix oracle_gradient(const Matrix& rows, int h, int w) {
  Matrix out = Matrix::Zero(rows.rows(), 2 * h * w);
  for (Eigen::Index k = 0; k < rows.rows(); ++k) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const int p = r * w + c;
        if (c + 1 < w) out(k, p) = rows(k, p + 1) - rows(k, p);
        if (r + 1 < h) out(k, h * w + p) = rows(k, p + w) - rows(k, p);
      }
    }
  }
  return out;
}

double oracle_objective(const SolverState& s, const Weights& w) {
  const int h = s.height, wd = s.width;
  double total = 0.0;
  for (const auto& ch : s.channels) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(ch.T);
    total += svd.singularValues().sum();
    const Matrix dt = oracle_gradient(ch.T, h, wd);
    const Matrix ds = oracle_gradient(ch.S, h, wd);
    const Matrix di = oracle_gradient(ch.I, h, wd);
    for (Eigen::Index e = 0; e < dt.size(); ++e) {
      const double a = dt.data()[e], b = ds.data()[e], c = di.data()[e];
      total += w.lambda1 * std::abs(a * b) + w.lambda2 * (c - a - b) * (c - a - b) + w.lambda3 * std::abs(a) +
               w.lambda4 * std::abs(b);
    }
  }
  const RowVector d = s.d_base + s.delta_d;
  const Matrix domega = oracle_gradient(s.omega, h, wd);
  for (Eigen::Index p = 0; p < d.size(); ++p) total += w.lambda5 * std::abs(d(p) - s.omega(p));
  total += w.lambda6 * domega.cwiseAbs().sum();
  return total;
}

}  // namespace

TEST_CASE("default weights") {
  const Weights w = resolve_weights(SolverConfig{}, 9, 4096);
  CHECK(w.lambda1 == doctest::Approx(1.0 / 64));
  CHECK(w.lambda2 == doctest::Approx(10.0 / 64));
  CHECK(w.lambda3 == doctest::Approx(0.5 / 64));
  CHECK(w.lambda4 == doctest::Approx(2.5 / 64));
  CHECK(w.lambda5 == doctest::Approx(0.05 / 64));
  CHECK(w.lambda6 == doctest::Approx(0.05 / 64));
  SolverConfig c;
  c.lambda3 = 0.2;
  CHECK(resolve_weights(c, 9, 4096).lambda3 == 0.2);
}

TEST_CASE("config validation") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  c.n = 1.0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = SolverConfig{};
  c.lambda2 = -1.0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = SolverConfig{};
  c.inner_tol = 0.0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = SolverConfig{};
  c.dmin = 3.0;
  c.dmax = 2.0;
  CHECK_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("config JSON round trip") {
  SolverConfig c;
  c.lambda4 = 0.125;
  c.mu0 = 0.5;
  c.max_inner = 17;
  c.dmin = -3.0;
  const SolverConfig back = config_from_json(config_to_json(c));
  CHECK(back.lambda4 == c.lambda4);
  CHECK_FALSE(back.lambda1.has_value());
  CHECK(back.mu0 == c.mu0);
  CHECK(back.max_inner == 17);
  CHECK(back.dmin == -3.0);
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK_THROWS_AS(config_from_json("{\"n\": 0.5}"), InputError);
  CHECK_THROWS_AS(config_from_json("not json"), InputError);
}

TEST_CASE("objective with empty layers is the gradient fit of I") {
  std::mt19937_64 rng(1);
  const LightField lf = random_lightfield(3, 8, 8, 3, rng);
  SolverState s = state_for(lf, DisparityMap(testing::random_matrix(8, 8, rng, -0.5, 0.5)));
  s.omega = s.d();
  const SolverConfig cfg;
  const Weights w = resolve_weights(cfg, 9, 64);
  double expect = 0.0;
  for (const auto& ch : s.channels) expect += w.lambda2 * oracle_gradient(ch.I, 8, 8).squaredNorm();
  expect += w.lambda6 * oracle_gradient(s.omega, 8, 8).lpNorm<1>();
  CHECK(objective(s, cfg) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("objective of an all-zero problem is zero") {
  std::vector<Image> views(9, Image(6, 6, 1, 0.0));
  const SolverState s = state_for(LightField(views, 3), DisparityMap(6, 6, 0.0));
  CHECK(objective(s, SolverConfig{}) == 0.0);
}

TEST_CASE("objective matches an independent implementation") {
  std::mt19937_64 rng(2);
  const LightField lf = random_lightfield(3, 8, 8, 1, rng);
  SolverState s = state_for(lf, DisparityMap(testing::random_matrix(8, 8, rng, -1, 1)));
  for (auto& ch : s.channels) {
    ch.T = testing::random_matrix(9, 64, rng, 0, 1);
    ch.S = testing::random_matrix(9, 64, rng, 0, 1);
  }
  s.omega = testing::random_matrix(1, 64, rng).row(0);
  s.delta_d = testing::random_matrix(1, 64, rng, -0.3, 0.3).row(0);
  SolverConfig cfg;
  cfg.lambda1 = 0.3;
  cfg.lambda2 = 0.7;
  cfg.lambda3 = 0.11;
  cfg.lambda4 = 0.13;
  cfg.lambda5 = 0.17;
  cfg.lambda6 = 0.19;
  const double expect = oracle_objective(s, resolve_weights(cfg, 9, 64));
  CHECK(std::abs(objective(s, cfg) - expect) <= 1e-10 * std::abs(expect));
}

TEST_CASE("objective names a non-finite term") {
  std::vector<Image> views(9, Image(4, 4, 1, 0.5));
  SolverState s = state_for(LightField(views, 3), DisparityMap(4, 4, 0.0));
  s.channels[0].S(0, 0) = std::numeric_limits<double>::infinity();
  try {
    objective(s, SolverConfig{});
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("not finite") != std::string::npos);
  }
}

TEST_CASE("zero input is a fixed point after one step") {
  std::vector<Image> views(9, Image(8, 8, 1, 0.0));
  SolverState s = state_for(LightField(views, 3), DisparityMap(8, 8, 0.0));
  s.mu = 1.0;
  s.feasibility = std::numeric_limits<double>::infinity();
  const SolverState next = inner_step(s, SolverConfig{});
  const auto& ch = next.channels[0];
  CHECK(ch.T.isZero(0.0));
  CHECK(ch.S.isZero(0.0));
  CHECK(ch.A.isZero(0.0));
  CHECK(ch.B.isZero(0.0));
  CHECK(ch.C.isZero(0.0));
  CHECK(ch.L1.isZero(0.0));
  CHECK(next.omega.isZero(0.0));
  CHECK(next.delta_d.isZero(0.0));
  CHECK(next.feasibility == 0.0);
  CHECK(next.mu == doctest::Approx(SolverConfig{}.n));
}

TEST_CASE("rank-one input without a secondary layer is absorbed by T") {
  // Every view is the same nonnegative image, so at d = 0 the stack is 1 v^T.
  auto spec = synth::planar_preset(0.0);
  spec.height = spec.width = 32;
  const Image v = synth::render(spec).lf.reference();
  std::vector<Image> views(9, v);
  const LightField lf(views, 3);
  SolverState s = state_for(lf, DisparityMap(32, 32, 0.0));
  const SolverConfig cfg;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(s.channels[0].I);
  s.mu = 1.25 / svd.singularValues()(0);
  s.mu_max = s.mu * cfg.mu_max_factor;
  s.feasibility = std::numeric_limits<double>::infinity();
  const double inorm = s.stack_norm();
  std::vector<double> feas;
  for (int k = 0; k < cfg.max_inner; ++k) {
    s = inner_step(s, cfg);
    feas.push_back(s.feasibility);
  }
  CHECK(s.channels[0].S.norm() / inorm < 1e-3);
  CHECK((s.channels[0].T - s.channels[0].I).norm() / inorm < 1e-2);
  CHECK(feas.back() <= cfg.inner_tol * inorm);
  CHECK(feas.back() < 1e-3 * feas.front());
}

TEST_CASE("multiplier updates are exact") {
  std::mt19937_64 rng(3);
  const auto inst = synth::render(synth::planar_preset(0.2));
  SolverState s = state_for(inst.lf, DisparityMap(64, 64, 0.8));
  const SolverConfig cfg;
  s.mu = 0.02;
  s.mu_max = 1e9;
  s.feasibility = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) s = inner_step(s, cfg);
  const GradientOperator D(64, 64);
  for (int k = 0; k < 3; ++k) {
    const SolverState prev = s;
    s = inner_step(s, cfg);
    const double mu = prev.mu;
    auto rel = [](const Matrix& got, const Matrix& expect) {
      return (got - expect).cwiseAbs().maxCoeff() / std::max(expect.cwiseAbs().maxCoeff(), 1e-300);
    };
    const auto& c = s.channels[0];
    const auto& p = prev.channels[0];
    CHECK(rel(c.L1 - p.L1, mu * (c.G - c.T - c.S)) <= 1e-12);
    CHECK(rel(c.L2 - p.L2, mu * (c.A - c.T)) <= 1e-12);
    CHECK(rel(c.L3 - p.L3, mu * (c.B - D.apply_rows(c.T))) <= 1e-12);
    CHECK(rel(c.L4 - p.L4, mu * (c.C - D.apply_rows(c.S))) <= 1e-12);
    CHECK(rel(s.L5 - prev.L5, mu * (s.E - (s.d() - s.omega))) <= 1e-12);
    CHECK(rel(s.L6 - prev.L6, mu * (s.F - D.apply(s.omega))) <= 1e-12);
    CHECK(s.mu == doctest::Approx(mu * cfg.n));
  }
}

TEST_CASE("G stays consistent with the disparity update") {
  const auto inst = synth::render(synth::planar_preset(0.3));
  SolverState s = state_for(inst.lf, DisparityMap(64, 64, 1.3));
  SolverConfig cfg;
  s.mu = 0.02;
  s.mu_max = 1e9;
  s.feasibility = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 5; ++k) {
    s = inner_step(s, cfg);
    const auto& c = s.channels[0];
    const Matrix g = c.I + (c.J.array().rowwise() * s.delta_d.array()).matrix();
    CHECK((c.G - g).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(c.G.minCoeff() >= -1e-12);
    CHECK(s.delta_d.cwiseAbs().maxCoeff() <= cfg.trust_region + 1e-12);
    CHECK(c.T.minCoeff() >= 0.0);
    CHECK(c.S.minCoeff() >= 0.0);
  }
}

TEST_CASE("divergence guard fires after the configured number of growing steps") {
  const auto inst = synth::render(synth::planar_preset(0.2));
  SolverState s = state_for(inst.lf, DisparityMap(64, 64, 1.0));
  SolverConfig cfg;
  s.mu = 0.02;
  s.mu_max = 1e9;
  s.feasibility = std::numeric_limits<double>::infinity();
  s = inner_step(s, cfg);
  CHECK(s.growth_streak == 0);
  // Pretend the previous residuals were tiny: the next step counts as growth.
  s.feasibility = 1e-30;
  s.growth_streak = cfg.divergence_window - 2;
  s = inner_step(s, cfg);
  CHECK(s.growth_streak == cfg.divergence_window - 1);
  s.feasibility = 1e-30;
  CHECK_THROWS_AS(inner_step(s, cfg), DivergenceError);
}

TEST_CASE("inner step requires a positive penalty") {
  std::vector<Image> views(9, Image(4, 4, 1, 0.5));
  SolverState s = state_for(LightField(views, 3), DisparityMap(4, 4, 0.0));
  CHECK_THROWS_AS(inner_step(s, SolverConfig{}), InputError);
}

TEST_CASE("separate recovers a reflection-free planar scene") {
  const auto inst = synth::render(synth::planar_preset(0.0));
  const auto r = separate(inst.lf, inst.truth.disparity, SolverConfig{});
  CHECK(metrics::psnr(r.transmitted, inst.truth.transmitted, &r.valid) > 40.0);
  CHECK(r.secondary.channel(0).cwiseAbs().maxCoeff() < 0.02);
  CHECK(r.transmitted.channel(0).minCoeff() >= 0.0);
  CHECK(r.secondary.channel(0).minCoeff() >= 0.0);
  CHECK(r.converged);
  CHECK(r.final_feasibility <= r.feasibility_bound);
  for (std::size_t k = 1; k < r.objective_history.size(); ++k) {
    CHECK(r.objective_history[k] <= r.objective_history[k - 1] + 1e-3);
  }
}

TEST_CASE("separation degrades with stronger blending") {
  auto run = [](double alpha) {
    const auto inst = synth::render(synth::two_plane_preset(alpha));
    const SolverConfig cfg;
    const auto r = separate(inst.lf, estimate_initial_disparity(inst.lf, 4, cfg.dmin, cfg.dmax), cfg);
    return metrics::evaluate(r.transmitted, r.secondary, r.disparity.values(), inst.truth.transmitted,
                             inst.truth.secondary, inst.truth.disparity.values(), &r.valid);
  };
  const auto low = run(0.2);
  const auto high = run(0.45);
  CHECK(low.incorrect_pixel_pct_T < high.incorrect_pixel_pct_T);
  CHECK(low.incorrect_pixel_pct_S < high.incorrect_pixel_pct_S);
}

TEST_CASE("separate is deterministic") {
  auto spec = synth::two_plane_preset(0.2);
  spec.height = spec.width = 32;
  const auto inst = synth::render(spec);
  SolverConfig cfg;
  cfg.max_outer = 3;
  const auto a = separate(inst.lf, inst.truth.disparity, cfg);
  const auto b = separate(inst.lf, inst.truth.disparity, cfg);
  CHECK(a.objective_history == b.objective_history);
  CHECK(a.disparity.values() == b.disparity.values());
}

TEST_CASE("separate validates its inputs") {
  const auto inst = synth::render(synth::planar_preset(0.0));
  CHECK_THROWS_AS(separate(inst.lf, DisparityMap(32, 32, 0.0), SolverConfig{}), InputError);
  CHECK_THROWS_AS(separate(inst.lf, DisparityMap(64, 64, 20.0), SolverConfig{}), InputError);
}

TEST_CASE("stop reasons have names") {
  CHECK(to_string(StopReason::ObjectiveConverged) == "objective_converged");
  CHECK(to_string(StopReason::MaxOuter) == "max_outer");
}

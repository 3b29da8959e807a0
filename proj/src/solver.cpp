#include "lfsep/solver.hpp"

#include "lfsep/prox.hpp"

#include <Eigen/SVD>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace lfsep {

void SolverConfig::validate() const {
  for (const auto& l : {lambda1, lambda2, lambda3, lambda4, lambda5, lambda6}) {
    if (l && !(*l >= 0.0)) throw InputError("solver config: lambdas must be >= 0");
  }
  if (mu0 && !(*mu0 > 0.0)) throw InputError("solver config: mu0 must be > 0");
  if (!(n > 1.0)) throw InputError("solver config: n must be > 1");
  if (!(mu_max_factor >= 1.0)) throw InputError("solver config: mu_max_factor must be >= 1");
  if (!(outer_tol > 0.0) || !(inner_tol > 0.0) || !(cg_tol > 0.0)) {
    throw InputError("solver config: tolerances must be > 0");
  }
  if (!(monotone_slack >= 0.0)) throw InputError("solver config: monotone_slack must be >= 0");
  if (max_inner < 1 || max_outer < 1) throw InputError("solver config: iteration limits must be >= 1");
  if (!(dmax > dmin)) throw InputError("solver config: dmax must exceed dmin");
  if (!(trust_region > 0.0)) throw InputError("solver config: trust_region must be > 0");
  if (divergence_window < 1) throw InputError("solver config: divergence_window must be >= 1");
}

namespace {

const char* kLambdaKeys[] = {"lambda1", "lambda2", "lambda3", "lambda4", "lambda5", "lambda6"};

std::optional<double>* lambda_slot(SolverConfig& c, int i) {
  std::optional<double>* slots[] = {&c.lambda1, &c.lambda2, &c.lambda3, &c.lambda4, &c.lambda5, &c.lambda6};
  return slots[i];
}

}  // namespace

std::string config_to_json(const SolverConfig& config) {
  nlohmann::json j;
  SolverConfig copy = config;
  for (int i = 0; i < 6; ++i) {
    const auto* slot = lambda_slot(copy, i);
    j[kLambdaKeys[i]] = *slot ? nlohmann::json(**slot) : nlohmann::json(nullptr);
  }
  j["mu0"] = config.mu0 ? nlohmann::json(*config.mu0) : nlohmann::json(nullptr);
  j["n"] = config.n;
  j["mu_max_factor"] = config.mu_max_factor;
  j["outer_tol"] = config.outer_tol;
  j["inner_tol"] = config.inner_tol;
  j["monotone_slack"] = config.monotone_slack;
  j["max_inner"] = config.max_inner;
  j["max_outer"] = config.max_outer;
  j["dmin"] = config.dmin;
  j["dmax"] = config.dmax;
  j["trust_region"] = config.trust_region;
  j["cg_tol"] = config.cg_tol;
  j["divergence_window"] = config.divergence_window;
  return j.dump(2);
}

SolverConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed solver config: ") + e.what());
  }
  if (!j.is_object()) throw InputError("solver config must be a JSON object");
  SolverConfig c;
  try {
    for (int i = 0; i < 6; ++i) {
      if (j.contains(kLambdaKeys[i]) && !j[kLambdaKeys[i]].is_null()) *lambda_slot(c, i) = j[kLambdaKeys[i]].get<double>();
    }
    if (j.contains("mu0") && !j["mu0"].is_null()) c.mu0 = j["mu0"].get<double>();
    c.n = j.value("n", c.n);
    c.mu_max_factor = j.value("mu_max_factor", c.mu_max_factor);
    c.outer_tol = j.value("outer_tol", c.outer_tol);
    c.inner_tol = j.value("inner_tol", c.inner_tol);
    c.monotone_slack = j.value("monotone_slack", c.monotone_slack);
    c.max_inner = j.value("max_inner", c.max_inner);
    c.max_outer = j.value("max_outer", c.max_outer);
    c.dmin = j.value("dmin", c.dmin);
    c.dmax = j.value("dmax", c.dmax);
    c.trust_region = j.value("trust_region", c.trust_region);
    c.cg_tol = j.value("cg_tol", c.cg_tol);
    c.divergence_window = j.value("divergence_window", c.divergence_window);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad solver config field: ") + e.what());
  }
  c.validate();
  return c;
}

SolverConfig load_solver_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

Weights resolve_weights(const SolverConfig& c, int views, Eigen::Index pixels) {
  const double base = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(views, pixels)));
  const double l3 = c.lambda3.value_or(0.5 * base);
  return {c.lambda1.value_or(base), c.lambda2.value_or(10.0 * base), l3,
          c.lambda4.value_or(2.5 * base), c.lambda5.value_or(0.1 * l3), c.lambda6.value_or(0.1 * l3)};
}

double SolverState::stack_norm() const {
  double sq = 0.0;
  for (const auto& ch : channels) sq += ch.I.squaredNorm();
  return std::sqrt(sq);
}

SolverState init_state(const Linearization& lin, const DisparityMap& d0) {
  const auto& first = lin.stack.channels.front();
  SolverState s;
  s.height = first.height;
  s.width = first.width;
  const Eigen::Index k = first.data.rows();
  const Eigen::Index n = first.data.cols();
  if (d0.height() != s.height || d0.width() != s.width) throw InputError("init_state: disparity size mismatch");
  for (std::size_t c = 0; c < lin.stack.channels.size(); ++c) {
    ChannelState ch;
    ch.T = ch.S = ch.A = ch.L1 = ch.L2 = Matrix::Zero(k, n);
    ch.B = ch.C = ch.L3 = ch.L4 = Matrix::Zero(k, 2 * n);
    s.channels.push_back(std::move(ch));
  }
  s.omega = s.E = s.L5 = s.delta_d = RowVector::Zero(n);
  s.F = s.L6 = RowVector::Zero(2 * n);
  relinearize(s, lin, d0);
  return s;
}

void relinearize(SolverState& state, const Linearization& lin, const DisparityMap& d) {
  const GradientOperator grad(state.height, state.width);
  if (lin.stack.channels.size() != state.channels.size()) throw InputError("relinearize: channel count changed");
  for (std::size_t c = 0; c < state.channels.size(); ++c) {
    auto& ch = state.channels[c];
    ch.I = lin.stack.channels[c].data;
    ch.J = lin.jacobian[c];
    ch.DI = grad.apply_rows(ch.I);
    ch.G = ch.I;
  }
  state.valid = lin.stack.valid;
  state.d_base = unroll(d.values());
  state.delta_d.setZero();
}

ObjectiveTerms objective_terms(const SolverState& s, const SolverConfig& config) {
  const Weights w = resolve_weights(config, s.view_count(), s.pixels());
  const GradientOperator grad(s.height, s.width);
  ObjectiveTerms t;
  for (const auto& ch : s.channels) {
    const Matrix dt = grad.apply_rows(ch.T);
    const Matrix ds = grad.apply_rows(ch.S);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(ch.T.transpose()));
    t.nuclear += svd.singularValues().sum();
    t.coupling += w.lambda1 * dt.cwiseProduct(ds).cwiseAbs().sum();
    t.gradient_fit += w.lambda2 * (ch.DI - dt - ds).squaredNorm();
    t.sparse_t += w.lambda3 * dt.cwiseAbs().sum();
    t.sparse_s += w.lambda4 * ds.cwiseAbs().sum();
  }
  t.disparity_fit = w.lambda5 * (s.d() - s.omega).cwiseAbs().sum();
  t.disparity_tv = w.lambda6 * grad.apply(s.omega).cwiseAbs().sum();
  const std::pair<const char*, double> named[] = {
      {"nuclear norm", t.nuclear},          {"gradient coupling", t.coupling},
      {"gradient fit", t.gradient_fit},     {"transmitted gradient sparsity", t.sparse_t},
      {"secondary gradient sparsity", t.sparse_s}, {"disparity fit", t.disparity_fit},
      {"disparity total variation", t.disparity_tv}};
  for (const auto& [name, value] : named) {
    if (!std::isfinite(value)) throw std::runtime_error(std::string("objective term is not finite: ") + name);
  }
  return t;
}

double objective(const SolverState& state, const SolverConfig& config) {
  return objective_terms(state, config).total();
}

SolverState inner_step(SolverState s, const SolverConfig& config) {
  const Weights w = resolve_weights(config, s.view_count(), s.pixels());
  const GradientOperator grad(s.height, s.width);
  const double mu = s.mu;
  if (!(mu > 0.0)) throw InputError("inner_step: mu must be positive");
  const double inv = 1.0 / mu;
  const RowVector d = s.d();

  // A, B, C (per channel).
  for (auto& ch : s.channels) {
    ch.A = prox::svt(ch.T - inv * ch.L2, inv);
    const Matrix dt = grad.apply_rows(ch.T);
    const Matrix ds = grad.apply_rows(ch.S);
    const Matrix b_weights = (w.lambda3 + w.lambda1 * ch.C.array().abs()).matrix();
    ch.B = prox::solve_quadratic_gradient(ch.C, ch.DI, w.lambda2, mu, dt - inv * ch.L3, b_weights);
    const Matrix c_weights = (w.lambda4 + w.lambda1 * ch.B.array().abs()).matrix();
    ch.C = prox::solve_quadratic_gradient(ch.B, ch.DI, w.lambda2, mu, ds - inv * ch.L4, c_weights);
  }

  // E, F, omega (shared).
  s.E = prox::soft_threshold(d - s.omega - inv * s.L5, w.lambda5 * inv);
  s.F = prox::soft_threshold(grad.apply(s.omega) - inv * s.L6, w.lambda6 * inv);
  {
    Matrix rhs = d - s.E - inv * s.L5 + grad.adjoint(s.F + inv * s.L6);
    Matrix x = s.omega;
    grad.solve_screened(1.0, rhs, x, config.cg_tol);
    s.omega = x.row(0);
  }

  // S then T (per channel).
  for (auto& ch : s.channels) {
    Matrix rhs_s = ch.G - ch.T + inv * ch.L1 + grad.adjoint_rows(ch.C + inv * ch.L4);
    grad.solve_screened(1.0, rhs_s, ch.S, config.cg_tol);
    ch.S = prox::project_nonneg(ch.S);

    Matrix rhs_t = (ch.G - ch.S + inv * ch.L1) + (ch.A + inv * ch.L2) + grad.adjoint_rows(ch.B + inv * ch.L3);
    grad.solve_screened(2.0, rhs_t, ch.T, config.cg_tol);
    ch.T = prox::project_nonneg(ch.T);
  }

  // Disparity update: per-pixel least squares over all views and channels.
  {
    const RowVector q = s.E - s.d_base + s.omega + inv * s.L5;
    RowVector num = q;
    RowVector den = RowVector::Ones(s.pixels());
    for (const auto& ch : s.channels) {
      const Matrix r = ch.I - ch.T - ch.S + inv * ch.L1;
      num -= ch.J.cwiseProduct(r).colwise().sum();
      den += ch.J.cwiseAbs2().colwise().sum();
    }
    RowVector dd = num.cwiseQuotient(den);
    RowVector lo = ((config.dmin - s.d_base.array()).max(-config.trust_region)).matrix();
    RowVector hi = ((config.dmax - s.d_base.array()).min(config.trust_region)).matrix();
    // G = T + S is nonnegative, so keep I + dd J >= 0 in every view.
    for (const auto& ch : s.channels) {
      for (Eigen::Index k = 0; k < ch.J.rows(); ++k) {
        for (Eigen::Index p = 0; p < ch.J.cols(); ++p) {
          const double j = ch.J(k, p);
          const double i = std::max(ch.I(k, p), 0.0);
          if (j > 0.0) {
            lo[p] = std::max(lo[p], -i / j);
          } else if (j < 0.0) {
            hi[p] = std::min(hi[p], -i / j);
          }
        }
      }
    }
    hi = hi.cwiseMax(lo);
    s.delta_d = dd.cwiseMax(lo).cwiseMin(hi);
    for (auto& ch : s.channels) {
      ch.G = ch.I + (ch.J.array().rowwise() * s.delta_d.array()).matrix();
    }
  }

  // Multipliers.
  double feas_sq = 0.0;
  for (auto& ch : s.channels) {
    const Matrix r1 = ch.G - ch.T - ch.S;
    feas_sq += r1.squaredNorm();
    ch.L1 += mu * r1;
    ch.L2 += mu * (ch.A - ch.T);
    ch.L3 += mu * (ch.B - grad.apply_rows(ch.T));
    ch.L4 += mu * (ch.C - grad.apply_rows(ch.S));
  }
  const RowVector d_new = s.d();
  s.L5 += mu * (s.E - d_new + s.omega);
  s.L6 += mu * (s.F - grad.apply(s.omega));

  s.mu = std::min(mu * config.n, s.mu_max);

  const double feas = std::sqrt(feas_sq);
  s.growth_streak = feas > kDivergenceGrowth * s.feasibility ? s.growth_streak + 1 : 0;
  s.feasibility = feas;
  if (s.growth_streak >= config.divergence_window) {
    throw DivergenceError("feasibility residual grew for " + std::to_string(s.growth_streak) +
                          " consecutive steps (now " + std::to_string(feas) + ")");
  }
  return s;
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::ObjectiveConverged: return "objective_converged";
    case StopReason::ObjectiveIncreased: return "objective_increased";
    case StopReason::MaxOuter: return "max_outer";
    case StopReason::Diverged: return "diverged";
  }
  return "unknown";
}

namespace {

double spectral_norm(const SolverState& s) {
  double best = 0.0;
  for (const auto& ch : s.channels) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(ch.I.transpose()));
    best = std::max(best, svd.singularValues()(0));
  }
  return best;
}

Image reference_rows(const SolverState& s, bool transmitted, int ref) {
  std::vector<Plane> planes;
  for (const auto& ch : s.channels) {
    planes.push_back(roll((transmitted ? ch.T : ch.S).row(ref), s.height, s.width));
  }
  return Image(std::move(planes));
}

}  // namespace

SeparationResult separate(const LightField& lf, const DisparityMap& d0, const SolverConfig& config,
                          const DiagnosticsSink& sink) {
  config.validate();
  if (d0.height() != lf.height() || d0.width() != lf.width()) throw InputError("separate: disparity size mismatch");
  if (!d0.all_finite() || !d0.within(config.dmin, config.dmax)) {
    throw InputError("separate: initial disparity outside [dmin, dmax]");
  }

  SolverState state = init_state(linearize(lf, d0), d0);
  const double norm2 = spectral_norm(state);
  const double mu0 = config.mu0.value_or(norm2 > 0.0 ? 1.25 / norm2 : 1.0);
  const double mu_max = mu0 * config.mu_max_factor;

  SeparationResult result;
  SolverState accepted = state;
  bool have_accepted = false;
  double accepted_objective = 0.0;
  bool accepted_inner_converged = false;
  double accepted_feasibility = 0.0;
  double accepted_bound = 0.0;
  result.reason = StopReason::MaxOuter;

  for (int outer = 1; outer <= config.max_outer; ++outer) {
    state.mu = mu0;
    state.mu_max = mu_max;
    state.feasibility = std::numeric_limits<double>::infinity();
    state.growth_streak = 0;
    const double bound = config.inner_tol * state.stack_norm();
    bool inner_converged = false;
    bool diverged = false;
    for (int inner = 1; inner <= config.max_inner; ++inner) {
      try {
        state = inner_step(state, config);
      } catch (const DivergenceError&) {
        diverged = true;
        break;
      }
      ++result.inner_iterations;
      if (sink) sink({outer, inner, objective(state, config), state.feasibility, state.mu});
      if (state.feasibility <= bound) {
        inner_converged = true;
        break;
      }
    }
    if (diverged) {
      result.reason = StopReason::Diverged;
      break;
    }
    const double exit_feasibility = state.feasibility;

    DisparityMap next(roll(state.d(), state.height, state.width));
    next.values() = next.values().cwiseMax(config.dmin).cwiseMin(config.dmax);
    relinearize(state, linearize(lf, next), next);
    const double obj = objective(state, config);

    if (have_accepted && obj > accepted_objective + config.monotone_slack) {
      result.reason = StopReason::ObjectiveIncreased;
      break;
    }
    const bool small_change = have_accepted && std::abs(accepted_objective - obj) < config.outer_tol;
    accepted = state;
    have_accepted = true;
    accepted_objective = obj;
    accepted_inner_converged = inner_converged;
    accepted_feasibility = exit_feasibility;
    accepted_bound = bound;
    result.objective_history.push_back(obj);
    result.outer_iterations = outer;
    if (small_change) {
      result.reason = StopReason::ObjectiveConverged;
      break;
    }
  }

  if (!have_accepted) {
    // Diverged before any outer iteration completed: report the initial state.
    accepted = state;
    accepted_feasibility = state.feasibility;
    accepted_bound = config.inner_tol * state.stack_norm();
  }
  result.inner_converged = accepted_inner_converged;
  result.converged = accepted_inner_converged && (result.reason == StopReason::ObjectiveConverged ||
                                                  result.reason == StopReason::ObjectiveIncreased);
  result.final_feasibility = accepted_feasibility;
  result.feasibility_bound = accepted_bound;
  const int ref = lf.ref_index();
  result.transmitted = reference_rows(accepted, true, ref);
  result.secondary = reference_rows(accepted, false, ref);
  result.disparity = DisparityMap(roll(accepted.d(), accepted.height, accepted.width));
  const RowVector all = accepted.valid.colwise().minCoeff();
  result.valid = Mask(accepted.height, accepted.width);
  for (Eigen::Index k = 0; k < all.size(); ++k) result.valid.data()[k] = all[k] > 0.5 ? 1 : 0;
  result.state = std::move(accepted);
  return result;
}

}  // namespace lfsep

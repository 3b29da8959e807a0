#pragma once

#include "lfsep/lf_model.hpp"
#include "lfsep/warp.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace lfsep {

// Joint layer separation and disparity refinement.
//
// Per channel c the warped stack I_c (K x hw) is split into a low-rank
// transmitted stack T_c and a secondary stack S_c by minimizing
//
//   sum_c ||T_c||_* + l1 ||DT_c . DS_c||_1 + l2 ||DI_c - DT_c - DS_c||_F^2
//        + l3 ||DT_c||_1 + l4 ||DS_c||_1 + l5 ||d - w||_1 + l6 ||Dw||_1
//
// subject to I_c + diag(dd) J_c = T_c + S_c and T_c, S_c >= 0, where the warp
// is linearized around the current disparity and dd is the disparity update.
// Auxiliaries A = T, B = DT, C = DS, E = d - w, F = Dw and G = I + dd J are
// handled by an inexact augmented Lagrangian with alternating updates; the
// disparity map and w are shared by all channels.

struct SolverConfig {
  // Unset weights resolve from the problem size, see resolve_weights().
  std::optional<double> lambda1, lambda2, lambda3, lambda4, lambda5, lambda6;
  std::optional<double> mu0;  // default 1.25 / ||I||_2
  double n = 1.03;            // penalty growth per inner step
  double mu_max_factor = 1e7; // mu is capped at mu0 * mu_max_factor
  double outer_tol = 0.1;     // stop when the objective changes less than this
  double inner_tol = 1e-4;    // ||G - T - S||_F <= inner_tol * ||I||_F
  double monotone_slack = 1e-3;
  int max_inner = 200;
  int max_outer = 20;
  double dmin = -8.0;
  double dmax = 8.0;
  double trust_region = 1.0;  // |dd| bound per outer iteration, pixels
  double cg_tol = 1e-8;
  int divergence_window = 5;

  void validate() const;
};

std::string config_to_json(const SolverConfig& config);
SolverConfig config_from_json(const std::string& text);
SolverConfig load_solver_config(const std::filesystem::path& path);

struct Weights {
  double lambda1, lambda2, lambda3, lambda4, lambda5, lambda6;
};

/// Defaults with b = 1/sqrt(max(K, hw)): l1 = b, l2 = 10 b, l3 = 0.5 b, l4 = 2.5 b,
/// l5 = l6 = 0.1 l3.
Weights resolve_weights(const SolverConfig& config, int views, Eigen::Index pixels);

struct ChannelState {
  Matrix I, J, DI;  // linearization data for this channel
  Matrix G, T, S, A, B, C;
  Matrix L1, L2, L3, L4;
};

struct SolverState {
  int height = 0;
  int width = 0;
  std::vector<ChannelState> channels;
  Matrix valid;  // K x hw sample validity of the current warp
  RowVector d_base, delta_d, omega, E, F, L5, L6;
  double mu = 0.0;
  double mu_max = std::numeric_limits<double>::infinity();
  double feasibility = 0.0;  // ||G - T - S||_F summed over channels
  int growth_streak = 0;

  int view_count() const { return static_cast<int>(valid.rows()); }
  Eigen::Index pixels() const { return static_cast<Eigen::Index>(height) * width; }
  RowVector d() const { return d_base + delta_d; }
  double stack_norm() const;  // ||I||_F over all channels
};

/// Zero-initialized state around a linearization at d0.
SolverState init_state(const Linearization& lin, const DisparityMap& d0);

/// Replaces I, J and the linearization point; T, S, auxiliaries and
/// multipliers carry over, and G is reset to the new I.
void relinearize(SolverState& state, const Linearization& lin, const DisparityMap& d);

struct ObjectiveTerms {
  double nuclear = 0.0;
  double coupling = 0.0;   // l1 ||DT . DS||_1
  double gradient_fit = 0.0;  // l2 ||DI - DT - DS||^2
  double sparse_t = 0.0;
  double sparse_s = 0.0;
  double disparity_fit = 0.0;  // l5 ||d - w||_1
  double disparity_tv = 0.0;   // l6 ||Dw||_1

  double total() const {
    return nuclear + coupling + gradient_fit + sparse_t + sparse_s + disparity_fit + disparity_tv;
  }
};

/// Exact objective (not the Lagrangian) at the current iterate. Throws
/// std::runtime_error naming the offending term if one is non-finite.
ObjectiveTerms objective_terms(const SolverState& state, const SolverConfig& config);
double objective(const SolverState& state, const SolverConfig& config);

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A step counts towards divergence when ||G - T - S||_F exceeds the previous
/// step's value by more than this factor.
inline constexpr double kDivergenceGrowth = 1.05;

/// One alternating sweep over A, B, C, E, F, w, S, T, dd followed by the
/// multiplier updates and mu <- min(n mu, mu_max). Throws DivergenceError when
/// ||G - T - S||_F has grown for `divergence_window` consecutive steps.
SolverState inner_step(SolverState state, const SolverConfig& config);

struct InnerDiagnostics {
  int outer = 0;
  int inner = 0;
  double objective = 0.0;
  double feasibility = 0.0;
  double mu = 0.0;
};

using DiagnosticsSink = std::function<void(const InnerDiagnostics&)>;

enum class StopReason { ObjectiveConverged, ObjectiveIncreased, MaxOuter, Diverged };
std::string to_string(StopReason reason);

struct SeparationResult {
  Image transmitted;  // reference-view rows of T
  Image secondary;    // reference-view rows of S
  DisparityMap disparity;
  Mask valid;  // reference pixels whose samples were valid in every view
  std::vector<double> objective_history;  // one entry per accepted outer iteration
  bool converged = false;
  bool inner_converged = false;
  StopReason reason = StopReason::MaxOuter;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double final_feasibility = 0.0;
  double feasibility_bound = 0.0;  // inner_tol * ||I||_F at exit
  SolverState state;
};

SeparationResult separate(const LightField& lf, const DisparityMap& d0, const SolverConfig& config,
                          const DiagnosticsSink& sink = {});

}  // namespace lfsep

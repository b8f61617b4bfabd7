#pragma once

// Optimistic controller selection: alternating minimization of the
// expected cost over the mode distribution (restricted to the confidence
// set) and the feedback gain, plus the static comparison controllers.

#include <optional>
#include <vector>

#include "ofu/belief.hpp"
#include "ofu/switched_system.hpp"

namespace ofu {

struct SelectionConfig {
  int max_outer_iters = 50;
  double outer_tol = 1e-8;
  int max_inner_iters = 500;
  double grad_tol = 1e-6;
  double backtrack_shrink = 0.5;
  double armijo_c = 1e-4;
  double init_step = 1.0;

  // Throws ContractError when a field is out of range.
  void validate() const;
};

struct SelectionResult {
  Controller k;
  Probabilities theta_opt;
  double objective = 0.0;
  int outer_iters = 0;
  bool converged = false;
  // Objective after the initial theta-step and after every later half-step.
  std::vector<double> trace;
};

/// sum_i theta_i cost(mode_i, k); infeasible unless k stabilizes every mode.
CostValue mixture_cost(const SwitchedSystem& system, std::span<const double> theta,
                       const Controller& k);

/// Gradient descent with Armijo backtracking on the mixture cost. Trial
/// gains that leave the stabilizing set are rejected by the line search.
Controller minimize_mixture(const SwitchedSystem& system, std::span<const double> theta,
                            const Controller& k_init, const SelectionConfig& cfg);

/// Per-mode CARE gains; nullopt where the Riccati solve has no stabilizing
/// solution.
std::vector<std::optional<Controller>> per_mode_optimal_gains(const SwitchedSystem& system);

SelectionResult optimistic_select(const SwitchedSystem& system, const BeliefState& belief,
                                  const std::optional<Controller>& warm_start,
                                  const SelectionConfig& cfg);

/// Approximate minimizer of max_i cost(mode_i, K), started from the best
/// per-mode CARE gain.
Controller robust_controller(const SwitchedSystem& system, const SelectionConfig& cfg);

/// Best static gain for the true mode distribution.
Controller oracle_controller(const SwitchedSystem& system, std::span<const double> theta_true,
                             const SelectionConfig& cfg);

}  // namespace ofu

#include "ofu/opt_select.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "ofu/identify.hpp"

namespace ofu {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Line searches give up after this many contractions of the step.
constexpr int kMaxBacktracks = 60;

void check_theta(const SwitchedSystem& system, std::span<const double> theta) {
  if (theta.size() != system.size()) {
    throw ContractError("theta has " + std::to_string(theta.size()) +
                        " entries for a system with " + std::to_string(system.size()) +
                        " modes");
  }
  double sum = 0.0;
  for (double t : theta) {
    if (!(t >= 0.0)) throw ContractError("theta has a negative entry");
    sum += t;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ContractError("theta does not sum to one");
}

// Mixture cost as a plain double; +inf outside the stabilizing set.
double mixture_value(const SwitchedSystem& system, std::span<const double> theta,
                     const Controller& k) {
  double total = 0.0;
  for (std::size_t i = 0; i < system.size(); ++i) {
    if (theta[i] == 0.0) {
      if (!is_stabilizing(system.mode(i), k)) return kInf;
      continue;
    }
    const CostValue c = cost(system.mode(i), k, system.weights());
    if (!c.is_finite()) return kInf;
    total += theta[i] * c.value();
  }
  return total;
}

Matrix mixture_gradient(const SwitchedSystem& system, std::span<const double> theta,
                        const Controller& k) {
  Matrix g = Matrix::Zero(k.K().rows(), k.K().cols());
  for (std::size_t i = 0; i < system.size(); ++i) {
    if (theta[i] == 0.0) continue;
    g += theta[i] * cost_gradient(system.mode(i), k, system.weights());
  }
  return g;
}

struct Descent {
  Controller k;
  double value;
  double grad_norm;
};

// Steepest descent with Armijo backtracking; value() returns +inf for
// gains outside the admissible set so such trials are always rejected.
Descent descend(const std::function<double(const Controller&)>& value,
                const std::function<Matrix(const Controller&)>& direction,
                Controller k, const SelectionConfig& cfg) {
  double f = value(k);
  double grad_norm = kInf;
  for (int iter = 0; iter < cfg.max_inner_iters; ++iter) {
    const Matrix g = direction(k);
    grad_norm = g.norm();
    if (grad_norm <= cfg.grad_tol) break;
    const double g2 = grad_norm * grad_norm;
    double step = cfg.init_step;
    bool accepted = false;
    for (int bt = 0; bt < kMaxBacktracks; ++bt, step *= cfg.backtrack_shrink) {
      Controller trial(k.K() - step * g);
      const double ft = value(trial);
      if (ft <= f - cfg.armijo_c * step * g2) {
        k = std::move(trial);
        f = ft;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (grad_norm > cfg.grad_tol) grad_norm = direction(k).norm();
  return {std::move(k), f, grad_norm};
}

Descent descend_mixture(const SwitchedSystem& system, std::span<const double> theta,
                        const Controller& k_init, const SelectionConfig& cfg) {
  return descend([&](const Controller& k) { return mixture_value(system, theta, k); },
                 [&](const Controller& k) { return mixture_gradient(system, theta, k); },
                 k_init, cfg);
}

// Feasible candidates (warm start first, then the per-mode CARE gains).
std::vector<Controller> initial_candidates(const SwitchedSystem& system,
                                           const std::optional<Controller>& warm_start) {
  std::vector<Controller> out;
  if (warm_start && system.stabilizes_all(*warm_start)) out.push_back(*warm_start);
  for (auto& k : per_mode_optimal_gains(system)) {
    if (k && system.stabilizes_all(*k)) out.push_back(std::move(*k));
  }
  return out;
}

double worst_mode_value(const SwitchedSystem& system, const Controller& k) {
  double worst = 0.0;
  for (const auto& mode : system.modes()) {
    worst = std::max(worst, cost(mode, k, system.weights()).value_or_inf());
  }
  return worst;
}

}  // namespace

void SelectionConfig::validate() const {
  if (max_outer_iters <= 0) throw ContractError("selection.max_outer_iters must be positive");
  if (!(outer_tol > 0.0)) throw ContractError("selection.outer_tol must be positive");
  if (max_inner_iters <= 0) throw ContractError("selection.max_inner_iters must be positive");
  if (!(grad_tol > 0.0)) throw ContractError("selection.grad_tol must be positive");
  if (!(backtrack_shrink > 0.0 && backtrack_shrink < 1.0)) {
    throw ContractError("selection.backtrack_shrink must lie in (0, 1)");
  }
  if (!(armijo_c > 0.0)) throw ContractError("selection.armijo_c must be positive");
  if (!(init_step > 0.0)) throw ContractError("selection.init_step must be positive");
}

CostValue mixture_cost(const SwitchedSystem& system, std::span<const double> theta,
                       const Controller& k) {
  check_theta(system, theta);
  const double v = mixture_value(system, theta, k);
  return std::isfinite(v) ? CostValue::finite(v) : CostValue::infeasible();
}

Controller minimize_mixture(const SwitchedSystem& system, std::span<const double> theta,
                            const Controller& k_init, const SelectionConfig& cfg) {
  check_theta(system, theta);
  cfg.validate();
  if (!system.stabilizes_all(k_init)) {
    throw PreconditionError("initial gain does not stabilize every mode");
  }
  return descend_mixture(system, theta, k_init, cfg).k;
}

std::vector<std::optional<Controller>> per_mode_optimal_gains(const SwitchedSystem& system) {
  std::vector<std::optional<Controller>> gains;
  gains.reserve(system.size());
  for (const auto& mode : system.modes()) {
    try {
      gains.emplace_back(solve_care(mode, system.weights()).k_star);
    } catch (const InfeasibleError&) {
      gains.emplace_back(std::nullopt);
    } catch (const NumericalError&) {
      gains.emplace_back(std::nullopt);
    }
  }
  return gains;
}

SelectionResult optimistic_select(const SwitchedSystem& system, const BeliefState& belief,
                                  const std::optional<Controller>& warm_start,
                                  const SelectionConfig& cfg) {
  cfg.validate();
  if (belief.modes() != system.size()) {
    throw ContractError("belief and system disagree on the number of modes");
  }
  const ConfidenceSet cs = confidence_set(belief);

  auto theta_step = [&](const Controller& k) {
    const auto costs = mode_costs(system, k);
    Probabilities theta = optimistic_theta(cs, costs);
    const double objective = expected_cost(theta, costs);
    return std::pair{std::move(theta), objective};
  };

  const auto candidates = initial_candidates(system, warm_start);
  if (candidates.empty()) {
    throw InfeasibleError("no initial gain stabilizes every mode");
  }
  std::size_t best = 0;
  auto [theta, objective] = theta_step(candidates[0]);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    auto [t, obj] = theta_step(candidates[i]);
    if (obj < objective) {
      best = i;
      theta = std::move(t);
      objective = obj;
    }
  }

  SelectionResult result{candidates[best], theta, objective, 0, false, {objective}};
  double grad_norm = kInf;
  for (int outer = 0; outer < cfg.max_outer_iters; ++outer) {
    const double before = result.objective;
    Descent d = descend_mixture(system, result.theta_opt, result.k, cfg);
    result.k = std::move(d.k);
    result.trace.push_back(d.value);

    auto [next_theta, next_objective] = theta_step(result.k);
    result.theta_opt = std::move(next_theta);
    result.objective = next_objective;
    result.trace.push_back(next_objective);
    result.outer_iters = outer + 1;

    if (before - result.objective < cfg.outer_tol) {
      grad_norm = mixture_gradient(system, result.theta_opt, result.k).norm();
      result.converged = grad_norm <= cfg.grad_tol;
      break;
    }
  }
  return result;
}

Controller robust_controller(const SwitchedSystem& system, const SelectionConfig& cfg) {
  cfg.validate();
  const auto candidates = initial_candidates(system, std::nullopt);
  if (candidates.empty()) {
    throw InfeasibleError("no per-mode optimal gain stabilizes every mode");
  }
  std::size_t best = 0;
  double best_value = worst_mode_value(system, candidates[0]);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double v = worst_mode_value(system, candidates[i]);
    if (v < best_value) {
      best = i;
      best_value = v;
    }
  }

  auto value = [&](const Controller& k) {
    return system.stabilizes_all(k) ? worst_mode_value(system, k) : kInf;
  };
  // Gradient of the active (largest-cost) mode, lowest index on ties.
  auto subgradient = [&](const Controller& k) {
    std::size_t active = 0;
    double worst = -kInf;
    for (std::size_t i = 0; i < system.size(); ++i) {
      const double c = cost(system.mode(i), k, system.weights()).value_or_inf();
      if (c > worst) {
        worst = c;
        active = i;
      }
    }
    return cost_gradient(system.mode(active), k, system.weights());
  };
  return descend(value, subgradient, candidates[best], cfg).k;
}

Controller oracle_controller(const SwitchedSystem& system, std::span<const double> theta_true,
                             const SelectionConfig& cfg) {
  check_theta(system, theta_true);
  cfg.validate();
  const auto candidates = initial_candidates(system, std::nullopt);
  if (candidates.empty()) {
    throw InfeasibleError("no per-mode optimal gain stabilizes every mode");
  }
  std::size_t best = 0;
  double best_value = mixture_value(system, theta_true, candidates[0]);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double v = mixture_value(system, theta_true, candidates[i]);
    if (v < best_value) {
      best = i;
      best_value = v;
    }
  }
  return descend_mixture(system, theta_true, candidates[best], cfg).k;
}

}  // namespace ofu

#include "ofu/identify.hpp"

#include <cmath>
#include <limits>

namespace ofu {

SwitchedSystem::SwitchedSystem(std::vector<SystemMode> modes, CostWeights weights)
    : modes_(std::move(modes)), weights_(std::move(weights)) {
  if (modes_.empty()) throw ContractError("a switched system needs at least one mode");
  const auto n = modes_.front().state_dim();
  const auto m = modes_.front().input_dim();
  for (const auto& mode : modes_) {
    if (mode.state_dim() != n || mode.input_dim() != m) {
      throw ContractError("all modes must share state and input dimensions");
    }
  }
  if (weights_.Q().rows() != n || weights_.R().rows() != m) {
    throw ContractError("cost weights do not match the mode dimensions");
  }
}

bool SwitchedSystem::stabilizes_all(const Controller& k) const {
  for (const auto& mode : modes_) {
    if (!is_stabilizing(mode, k)) return false;
  }
  return true;
}

std::vector<CostValue> mode_costs(const SwitchedSystem& system, const Controller& k) {
  std::vector<CostValue> costs;
  costs.reserve(system.size());
  for (const auto& mode : system.modes()) {
    costs.push_back(cost(mode, k, system.weights()));
  }
  return costs;
}

IdentificationResult identify_realization(double observed,
                                          std::span<const CostValue> costs) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  IdentificationResult result;
  result.all_costs.assign(costs.begin(), costs.end());

  double best = inf;
  double runner_up = inf;
  std::size_t best_index = costs.size();
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (!costs[i].is_finite()) continue;
    const double r = std::abs(observed - costs[i].value());
    if (r < best) {
      runner_up = best;
      best = r;
      best_index = i;
    } else if (r < runner_up) {
      runner_up = r;
    }
  }
  if (best_index == costs.size()) {
    throw InfeasibleError("cannot identify the realization: every mode cost is infeasible");
  }
  result.mode_index = best_index;
  result.residual = best;
  result.ambiguous = runner_up - best < kAmbiguityThreshold;
  return result;
}

}  // namespace ofu

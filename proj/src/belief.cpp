#include "ofu/belief.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace ofu {

BeliefState::BeliefState(CountVector counts, std::int64_t t_init, double delta)
    : counts_(std::move(counts)), t_init_(t_init), delta_(delta) {
  if (counts_.empty()) throw ContractError("belief needs at least one mode");
  for (auto c : counts_) {
    if (c < 0) throw ContractError("counts must be nonnegative");
  }
  if (t_init_ < 0) throw ContractError("t_init must be nonnegative");
  if (!(delta_ > 0.0 && delta_ < 1.0)) throw ContractError("delta must lie in (0, 1)");
}

std::int64_t BeliefState::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

BeliefState BeliefState::observed(std::size_t i) const {
  return BeliefState(update_counts(counts_, i), t_init_, delta_);
}

Probabilities mle_estimate(const CountVector& c) {
  const auto total = std::accumulate(c.begin(), c.end(), std::int64_t{0});
  if (total <= 0) {
    throw PreconditionError("empirical estimate needs at least one observed realization");
  }
  Probabilities theta(c.size());
  std::transform(c.begin(), c.end(), theta.begin(), [total](std::int64_t ci) {
    return static_cast<double>(ci) / static_cast<double>(total);
  });
  return theta;
}

double confidence_radius(std::int64_t tau, std::size_t p, double delta) {
  if (tau < 1) throw PreconditionError("confidence radius needs tau >= 1");
  if (p < 1) throw ContractError("confidence radius needs p >= 1");
  if (!(delta > 0.0)) throw ContractError("delta must be positive");
  const double t = static_cast<double>(tau);
  const double log_term = static_cast<double>(p) * std::log2(t + 1.0) - std::log2(delta);
  return std::sqrt(2.0 / t * std::max(0.0, log_term));
}

ConfidenceSet confidence_set(const BeliefState& b) {
  return {mle_estimate(b.counts()),
          confidence_radius(b.total(), b.modes(), b.delta())};
}

Probabilities optimistic_theta(const ConfidenceSet& cs,
                               std::span<const CostValue> mode_costs) {
  const std::size_t p = cs.theta_hat.size();
  if (mode_costs.size() != p) {
    throw ContractError("expected " + std::to_string(p) + " mode costs, got " +
                        std::to_string(mode_costs.size()));
  }
  if (!(cs.radius >= 0.0)) throw ContractError("radius must be nonnegative");

  std::size_t cheapest = p;
  for (std::size_t i = 0; i < p; ++i) {
    if (mode_costs[i].is_finite() &&
        (cheapest == p || mode_costs[i] < mode_costs[cheapest])) {
      cheapest = i;
    }
  }
  if (cheapest == p) throw InfeasibleError("every mode cost is infeasible");

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return mode_costs[a] > mode_costs[b];
  });

  Probabilities theta = cs.theta_hat;
  double budget = cs.radius / 2.0;
  for (std::size_t i : order) {
    if (budget <= 0.0) break;
    if (i == cheapest) continue;
    const double moved = std::min(theta[i], budget);
    theta[i] -= moved;
    theta[cheapest] += moved;
    budget -= moved;
  }
  return theta;
}

CountVector update_counts(CountVector c, std::size_t i) {
  if (i >= c.size()) {
    throw ContractError("mode index " + std::to_string(i) + " out of range for p=" +
                        std::to_string(c.size()));
  }
  ++c[i];
  return c;
}

double expected_cost(std::span<const double> theta,
                     std::span<const CostValue> mode_costs) {
  if (theta.size() != mode_costs.size()) throw ContractError("size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (theta[i] == 0.0) continue;
    total += theta[i] * mode_costs[i].value_or_inf();
  }
  return total;
}

}  // namespace ofu

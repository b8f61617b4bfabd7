#pragma once

// Realization counts, the empirical mode distribution, and the L1
// confidence set built from the method-of-types deviation bound.

#include <cstdint>
#include <span>
#include <vector>

#include "ofu/lqr_core.hpp"

namespace ofu {

using CountVector = std::vector<std::int64_t>;
using Probabilities = std::vector<double>;

class BeliefState {
 public:
  // delta must lie in (0, 1); t_init is the number of exploration rounds
  // already folded into counts.
  BeliefState(CountVector counts, std::int64_t t_init, double delta);

  const CountVector& counts() const { return counts_; }
  std::int64_t t_init() const { return t_init_; }
  double delta() const { return delta_; }
  std::size_t modes() const { return counts_.size(); }
  std::int64_t total() const;  // tau = T_init + t - 1

  // Copy with mode i (0-based) counted once more.
  BeliefState observed(std::size_t i) const;

 private:
  CountVector counts_;
  std::int64_t t_init_;
  double delta_;
};

struct ConfidenceSet {
  Probabilities theta_hat;
  double radius = 0.0;
};

/// c / sum(c). Throws PreconditionError on an all-zero count vector.
Probabilities mle_estimate(const CountVector& c);

/// sqrt((2/tau) log2((tau+1)^p / delta)), clamped at 0 when the log
/// argument drops below one.
double confidence_radius(std::int64_t tau, std::size_t p, double delta);

ConfidenceSet confidence_set(const BeliefState& b);

/// Minimizes sum_i theta_i * J_i over {||theta - theta_hat||_1 <= r} within
/// the simplex by moving up to r/2 mass from the most expensive modes onto
/// the cheapest one (lowest index on ties). Infeasible costs act as +inf.
Probabilities optimistic_theta(const ConfidenceSet& cs,
                               std::span<const CostValue> mode_costs);

/// Returns c with coordinate i (0-based) incremented.
CountVector update_counts(CountVector c, std::size_t i);

/// sum_i theta_i * J_i with 0 * inf = 0.
double expected_cost(std::span<const double> theta,
                     std::span<const CostValue> mode_costs);

}  // namespace ofu

#pragma once

#include <span>
#include <vector>

#include "ofu/switched_system.hpp"

namespace ofu {

// Two smallest residuals closer than this mark the round as ambiguous.
inline constexpr double kAmbiguityThreshold = 1e-9;

struct IdentificationResult {
  std::size_t mode_index = 0;  // 0-based
  double residual = 0.0;
  std::vector<CostValue> all_costs;
  bool ambiguous = false;
};

/// cost(mode_i, k) for every mode; infeasible where k does not stabilize.
std::vector<CostValue> mode_costs(const SwitchedSystem& system, const Controller& k);

/// argmin_i |observed - J_i| over the finite J_i, lowest index on ties.
IdentificationResult identify_realization(double observed,
                                          std::span<const CostValue> costs);

}  // namespace ofu

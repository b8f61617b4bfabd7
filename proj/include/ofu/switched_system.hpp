#pragma once

#include <vector>

#include "ofu/lqr_core.hpp"

namespace ofu {

/// The p candidate modes of a repeatedly operated plant together with the
/// shared cost weights.
class SwitchedSystem {
 public:
  SwitchedSystem(std::vector<SystemMode> modes, CostWeights weights);

  const std::vector<SystemMode>& modes() const { return modes_; }
  const SystemMode& mode(std::size_t i) const { return modes_.at(i); }
  const CostWeights& weights() const { return weights_; }
  std::size_t size() const { return modes_.size(); }
  Eigen::Index state_dim() const { return modes_.front().state_dim(); }
  Eigen::Index input_dim() const { return modes_.front().input_dim(); }

  /// Membership in the admissible set: the gain stabilizes every mode.
  bool stabilizes_all(const Controller& k) const;

 private:
  std::vector<SystemMode> modes_;
  CostWeights weights_;
};

}  // namespace ofu

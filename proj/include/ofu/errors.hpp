#pragma once

#include <stdexcept>
#include <string>

namespace ofu {

// Dimension mismatches, out-of-range indices and similar caller bugs.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Inputs that are well-formed but violate an operation's precondition
// (empty counts, a start gain outside the stabilizing set, ...).
class PreconditionError : public ContractError {
 public:
  using ContractError::ContractError;
};

// No stabilizing answer exists: non-Hurwitz closed loop, unstabilizable
// pair, no feasible initial controller.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical routine failed to converge or produced an unacceptable
// residual.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An agent applied a control that does not stabilize the realized mode.
class EpisodeFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An experiment cannot be set up (e.g. the experts table has an
// infeasible entry, or no exploration controller exists).
class SetupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ofu

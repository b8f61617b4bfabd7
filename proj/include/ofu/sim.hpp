#pragma once

// Repeated-operation environment and the agents that act in it.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "ofu/belief.hpp"
#include "ofu/identify.hpp"
#include "ofu/opt_select.hpp"
#include "ofu/switched_system.hpp"

namespace ofu {

/// Independent random streams derived from one episode seed.
enum class Stream : std::uint64_t {
  kRealizations = 1,
  kExploration = 2,
  kExperts = 3,
};

/// Deterministic uniform source. Uniforms are built from the top 53 bits
/// of a 64-bit Mersenne twister so streams are identical across standard
/// library implementations.
class Rng {
 public:
  Rng(std::uint64_t seed, Stream stream);
  double uniform();  // [0, 1)

 private:
  std::mt19937_64 engine_;
};

struct Environment {
  SwitchedSystem system;
  Probabilities theta_true;  // hidden from agents
  std::uint64_t seed = 0;
};

struct OfuAgent {
  double delta = 0.1;
  std::int64_t t_init = 2;
  SelectionConfig selection;
};
struct StaticAgent {
  Controller k;
};
struct ExpertsAgent {
  double eta = 0.3;
};
struct OracleAgent {
  SelectionConfig selection;
};

struct AgentSpec {
  std::variant<OfuAgent, StaticAgent, ExpertsAgent, OracleAgent> kind;
  std::string label;
};

struct RoundRecord {
  // Exploration rounds are numbered 1 - t_init .. 0; learning rounds 1..T.
  std::int64_t t = 0;
  std::string agent;
  Controller k;
  std::size_t omega = 0;  // realized mode, 0-based
  double cost = 0.0;
  // Running sum within the record's phase (exploration or learning).
  double cum_cost = 0.0;
  std::optional<Probabilities> theta_hat;
  std::optional<double> radius;
  bool exploration = false;
  bool fallback = false;
  bool ambiguous = false;
};

/// Inverse-CDF draw of a mode index (0-based) from one uniform.
std::size_t sample_mode(std::span<const double> theta, Rng& rng);

/// Cost revealed when gain k is applied to realized mode i. Throws
/// EpisodeFault when k does not stabilize that mode.
double realized_cost(const Environment& env, std::size_t i, const Controller& k);

struct Exploration {
  CountVector counts;
  Controller last;
  std::vector<RoundRecord> records;
};

/// Round-robin over the per-mode CARE gains (robust gain substituted for
/// any that does not stabilize every mode); realizations are identified and
/// counted.
Exploration explore_init(const Environment& env, std::int64_t t_init,
                         const SelectionConfig& cfg, Rng& stream,
                         const std::string& label = "explore");

/// Normalized loss table for the experts baseline: entry (j, e) is
/// cost(mode_j, K_e*) / max over the table.
struct ExpertsPanel {
  std::vector<Controller> gains;
  Matrix normalized_loss;
};

/// Throws SetupError when some K_e* fails to stabilize some mode.
ExpertsPanel make_experts_panel(const SwitchedSystem& system);

std::size_t choose_expert(std::span<const double> weights, double u);

std::vector<double> update_expert_weights(const ExpertsPanel& panel,
                                          std::vector<double> weights,
                                          std::size_t realized, double eta);

struct ExpertsStep {
  std::size_t chosen;
  std::vector<double> weights;
};

/// One round of randomized weighted majority: choose from the current
/// weights with uniform draw u, then apply the multiplicative update for the
/// realized mode.
ExpertsStep experts_step(const ExpertsPanel& panel, std::vector<double> weights,
                         std::size_t realized, double eta, double u);

/// Called with every optimistic selection performed during an episode.
using SelectionObserver = std::function<void(std::int64_t t, const SelectionResult&)>;

/// Runs t_rounds learning rounds (plus exploration for OFU agents). The
/// realization sequence depends only on env.seed, so agents run with the
/// same environment face identical modes.
std::vector<RoundRecord> run_episode(const Environment& env, const AgentSpec& agent,
                                     std::int64_t t_rounds,
                                     const SelectionObserver& observer = {});

}  // namespace ofu

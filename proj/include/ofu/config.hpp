#pragma once

// Experiment configuration: JSON ingestion, validation and echo.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ofu/sim.hpp"

namespace ofu {

// Exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitParse = 2,
  kExitValidation = 3,
  kExitIo = 4,
  kExitNumerical = 5,
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Names the offending field with a dotted path such as "system.Q".
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Where a static agent's gain comes from.
struct CareGain {
  std::size_t mode;  // 0-based
};
struct RobustGain {};
using GainSource = std::variant<CareGain, RobustGain, Matrix>;

struct AgentDescriptor {
  enum class Kind { kOfu, kStatic, kExperts, kOracle };
  Kind kind = Kind::kOfu;
  std::string label;
  std::optional<GainSource> gain;  // static agents only
  double eta = 0.3;                // experts only
};

struct ExperimentConfig {
  SwitchedSystem system;
  Probabilities theta_true;
  std::vector<AgentDescriptor> agents;
  std::int64_t rounds = 30;
  std::int64_t t_init = 2;
  double delta = 0.1;
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path output_dir = "out";
  SelectionConfig selection{};
  std::string note{};
};

/// Parses and validates a JSON document. Throws ParseError or
/// ValidationError.
ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Effective configuration with all defaults filled in; loading it back
/// gives an identical experiment.
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Builds the agent list, computing CARE and robust gains as needed.
std::vector<AgentSpec> resolve_agents(const ExperimentConfig& config);

/// The two-mode, three-state experiment with theta = [0.5, 0.5], Q = I,
/// R = 1 and 30 rounds, comparing the optimistic learner against both
/// per-mode optimal gains, the minimax gain, the experts baseline and the
/// clairvoyant gain.
ExperimentConfig paper_config(std::vector<std::uint64_t> seeds,
                              std::filesystem::path output_dir);

}  // namespace ofu

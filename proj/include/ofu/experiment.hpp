#pragma once

// Experiment orchestration and CSV emission behind the command line tool.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ofu/config.hpp"

namespace ofu {

struct Episode {
  std::string agent;
  std::uint64_t seed = 0;
  std::size_t run_id = 0;  // position of the seed in the config
  std::vector<RoundRecord> records;
};

struct SummaryRow {
  std::string agent;
  std::uint64_t seed = 0;
  double total_cost = 0.0;
  double mean_round_cost = 0.0;
  std::int64_t rounds_flagged = 0;
  std::optional<Probabilities> final_theta_hat{};
  std::optional<double> final_radius{};
};

struct ExperimentResult {
  std::vector<Episode> episodes;  // ordered by (agent, seed)
  std::vector<SummaryRow> summary;
};

using ExperimentObserver = std::function<void(const std::string& agent, std::uint64_t seed,
                                              std::int64_t t, const SelectionResult&)>;

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const ExperimentObserver& observer = {});

SummaryRow summarize(const Episode& episode);

/// Formats a number with 12 significant digits.
std::string format_number(double x);

std::string rounds_csv(const ExperimentResult& result, std::size_t p);
std::string summary_csv(const ExperimentResult& result, std::size_t p);

struct AgentComparison {
  std::string agent;
  double mean_total_cost = 0.0;
  double std_total_cost = 0.0;
  int wins_vs_proposed = 0;  // seeds where this agent beat the proposed learner
  int losses_vs_proposed = 0;
  int ties_vs_proposed = 0;
};

/// Per-agent mean and sample standard deviation of total cost across
/// seeds; "proposed" is the first optimistic learner in the config.
std::vector<AgentComparison> compare_agents(const ExperimentConfig& config,
                                            const ExperimentResult& result);

std::string compare_csv(const std::vector<AgentComparison>& rows);
std::string compare_by_seed_csv(const ExperimentConfig& config, const ExperimentResult& result);

/// Writes config.json, rounds.csv and summary.csv into config.output_dir.
ExperimentResult cmd_run(const ExperimentConfig& config,
                         const ExperimentObserver& observer = {});

/// cmd_run on the two-mode benchmark configuration plus compare.csv and
/// compare_by_seed.csv.
ExperimentResult cmd_reproduce_paper(const std::filesystem::path& output_dir,
                                     std::size_t seed_count,
                                     const ExperimentObserver& observer = {});

struct SweepGrid {
  std::vector<double> delta;
  std::vector<std::int64_t> t_init;
  std::vector<std::int64_t> rounds;
};

/// Grid axes left out of the document default to the base config value.
SweepGrid load_grid(const std::filesystem::path& path, const ExperimentConfig& base);
SweepGrid grid_from_json(const nlohmann::json& doc, const ExperimentConfig& base);

struct SweepPoint {
  double delta;
  std::int64_t t_init;
  std::int64_t rounds;
  std::string directory;
};

std::vector<SweepPoint> expand_grid(const SweepGrid& grid);

/// One subdirectory per grid point (summary.csv and config.json) and a
/// manifest.csv mapping grid points to directories.
std::vector<SweepPoint> cmd_sweep(const ExperimentConfig& base, const SweepGrid& grid);

/// Writes text to a file, throwing IoError on failure.
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace ofu

#include "ofu/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace ofu {
namespace {

std::string flags(const RoundRecord& r) {
  std::string out;
  auto add = [&](const char* f) {
    if (!out.empty()) out += '|';
    out += f;
  };
  if (r.exploration) add("explore");
  if (r.fallback) add("fallback");
  if (r.ambiguous) add("ambiguous");
  return out;
}

void append_theta(std::ostringstream& os, const std::optional<Probabilities>& theta,
                  std::size_t p) {
  for (std::size_t i = 0; i < p; ++i) {
    os << ',';
    if (theta) os << format_number((*theta)[i]);
  }
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
}

std::size_t proposed_agent(const ExperimentConfig& config) {
  for (std::size_t i = 0; i < config.agents.size(); ++i) {
    if (config.agents[i].kind == AgentDescriptor::Kind::kOfu) return i;
  }
  return config.agents.size();
}

void write_run_outputs(const ExperimentConfig& config, const ExperimentResult& result) {
  ensure_dir(config.output_dir);
  const std::size_t p = config.system.size();
  write_file(config.output_dir / "config.json", config_to_json(config).dump(2) + "\n");
  write_file(config.output_dir / "rounds.csv", rounds_csv(result, p));
  write_file(config.output_dir / "summary.csv", summary_csv(result, p));
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << contents;
  if (!out) throw IoError("failed writing " + path.string());
}

SummaryRow summarize(const Episode& episode) {
  SummaryRow row{episode.agent, episode.seed};
  std::int64_t learning_rounds = 0;
  for (const auto& r : episode.records) {
    if (r.exploration) continue;
    ++learning_rounds;
    row.total_cost = r.cum_cost;
    if (r.fallback || r.ambiguous) ++row.rounds_flagged;
    row.final_theta_hat = r.theta_hat;
    row.final_radius = r.radius;
  }
  if (learning_rounds > 0) row.mean_round_cost = row.total_cost / static_cast<double>(learning_rounds);
  return row;
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const ExperimentObserver& observer) {
  const auto agents = resolve_agents(config);
  ExperimentResult result;
  for (const auto& agent : agents) {
    for (std::size_t run = 0; run < config.seeds.size(); ++run) {
      const std::uint64_t seed = config.seeds[run];
      const Environment env{config.system, config.theta_true, seed};
      SelectionObserver forward;
      if (observer) {
        forward = [&](std::int64_t t, const SelectionResult& sel) {
          observer(agent.label, seed, t, sel);
        };
      }
      Episode ep{agent.label, seed, run, run_episode(env, agent, config.rounds, forward)};
      result.summary.push_back(summarize(ep));
      result.episodes.push_back(std::move(ep));
    }
  }
  return result;
}

std::string rounds_csv(const ExperimentResult& result, std::size_t p) {
  std::ostringstream os;
  os << "run_id,seed,agent,t,omega,cost,cum_cost";
  for (std::size_t i = 1; i <= p; ++i) os << ",theta_hat_" << i;
  os << ",radius,flags\n";
  for (const auto& ep : result.episodes) {
    for (const auto& r : ep.records) {
      os << ep.run_id << ',' << ep.seed << ',' << r.agent << ',' << r.t << ',' << (r.omega + 1)
         << ',' << format_number(r.cost) << ',' << format_number(r.cum_cost);
      append_theta(os, r.theta_hat, p);
      os << ',';
      if (r.radius) os << format_number(*r.radius);
      os << ',' << flags(r) << '\n';
    }
  }
  return os.str();
}

std::string summary_csv(const ExperimentResult& result, std::size_t p) {
  std::ostringstream os;
  os << "agent,seed,total_cost,mean_round_cost,rounds_flagged";
  for (std::size_t i = 1; i <= p; ++i) os << ",final_theta_hat_" << i;
  os << ",final_radius\n";
  for (const auto& row : result.summary) {
    os << row.agent << ',' << row.seed << ',' << format_number(row.total_cost) << ','
       << format_number(row.mean_round_cost) << ',' << row.rounds_flagged;
    append_theta(os, row.final_theta_hat, p);
    os << ',';
    if (row.final_radius) os << format_number(*row.final_radius);
    os << '\n';
  }
  return os.str();
}

std::vector<AgentComparison> compare_agents(const ExperimentConfig& config,
                                            const ExperimentResult& result) {
  const std::size_t seeds = config.seeds.size();
  const std::size_t proposed = proposed_agent(config);
  std::vector<AgentComparison> rows;
  for (std::size_t a = 0; a < config.agents.size(); ++a) {
    AgentComparison row{config.agents[a].label};
    double sum = 0.0;
    for (std::size_t s = 0; s < seeds; ++s) sum += result.summary[a * seeds + s].total_cost;
    row.mean_total_cost = sum / static_cast<double>(seeds);
    double sq = 0.0;
    for (std::size_t s = 0; s < seeds; ++s) {
      const double d = result.summary[a * seeds + s].total_cost - row.mean_total_cost;
      sq += d * d;
    }
    row.std_total_cost = seeds > 1 ? std::sqrt(sq / static_cast<double>(seeds - 1)) : 0.0;
    if (proposed < config.agents.size()) {
      for (std::size_t s = 0; s < seeds; ++s) {
        const double mine = result.summary[a * seeds + s].total_cost;
        const double theirs = result.summary[proposed * seeds + s].total_cost;
        if (mine < theirs) ++row.wins_vs_proposed;
        else if (mine > theirs) ++row.losses_vs_proposed;
        else ++row.ties_vs_proposed;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string compare_csv(const std::vector<AgentComparison>& rows) {
  std::ostringstream os;
  os << "agent,mean_total_cost,std_total_cost,wins_vs_proposed,losses_vs_proposed,"
        "ties_vs_proposed\n";
  for (const auto& r : rows) {
    os << r.agent << ',' << format_number(r.mean_total_cost) << ','
       << format_number(r.std_total_cost) << ',' << r.wins_vs_proposed << ','
       << r.losses_vs_proposed << ',' << r.ties_vs_proposed << '\n';
  }
  return os.str();
}

std::string compare_by_seed_csv(const ExperimentConfig& config, const ExperimentResult& result) {
  const std::size_t seeds = config.seeds.size();
  const std::size_t proposed = proposed_agent(config);
  std::ostringstream os;
  os << "seed,agent,total_cost,proposed_total_cost,outcome\n";
  if (proposed == config.agents.size()) return os.str();
  for (std::size_t s = 0; s < seeds; ++s) {
    const double theirs = result.summary[proposed * seeds + s].total_cost;
    for (std::size_t a = 0; a < config.agents.size(); ++a) {
      const double mine = result.summary[a * seeds + s].total_cost;
      const char* outcome = mine < theirs ? "win" : (mine > theirs ? "loss" : "tie");
      os << config.seeds[s] << ',' << config.agents[a].label << ',' << format_number(mine) << ','
         << format_number(theirs) << ',' << outcome << '\n';
    }
  }
  return os.str();
}

ExperimentResult cmd_run(const ExperimentConfig& config, const ExperimentObserver& observer) {
  ensure_dir(config.output_dir);
  ExperimentResult result = run_experiment(config, observer);
  write_run_outputs(config, result);
  return result;
}

ExperimentResult cmd_reproduce_paper(const std::filesystem::path& output_dir,
                                     std::size_t seed_count,
                                     const ExperimentObserver& observer) {
  std::vector<std::uint64_t> seeds(seed_count);
  std::iota(seeds.begin(), seeds.end(), std::uint64_t{0});
  const ExperimentConfig config = paper_config(std::move(seeds), output_dir);
  ExperimentResult result = cmd_run(config, observer);
  write_file(output_dir / "compare.csv", compare_csv(compare_agents(config, result)));
  write_file(output_dir / "compare_by_seed.csv", compare_by_seed_csv(config, result));
  return result;
}

SweepGrid grid_from_json(const nlohmann::json& doc, const ExperimentConfig& base) {
  if (!doc.is_object()) throw ValidationError("(grid)", "expected an object");
  SweepGrid grid{{base.delta}, {base.t_init}, {base.rounds}};
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_array() || value.empty()) {
      throw ValidationError("grid." + key, "expected a non-empty array");
    }
    for (std::size_t i = 0; i < value.size(); ++i) {
      const std::string path = "grid." + key + "[" + std::to_string(i) + "]";
      const auto& v = value[i];
      if (key == "delta") {
        if (i == 0) grid.delta.clear();
        if (!v.is_number()) throw ValidationError(path, "expected a number");
        const double d = v.get<double>();
        if (!(d > 0.0 && d < 1.0)) throw ValidationError(path, "must lie in (0, 1)");
        grid.delta.push_back(d);
      } else if (key == "t_init" || key == "rounds") {
        auto& axis = key == "t_init" ? grid.t_init : grid.rounds;
        if (i == 0) axis.clear();
        if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
          throw ValidationError(path, "expected a positive integer");
        }
        axis.push_back(v.get<std::int64_t>());
      } else {
        throw ValidationError("grid." + key, "unknown sweep parameter");
      }
    }
  }
  return grid;
}

SweepGrid load_grid(const std::filesystem::path& path, const ExperimentConfig& base) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open grid file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return grid_from_json(doc, base);
}

std::vector<SweepPoint> expand_grid(const SweepGrid& grid) {
  std::vector<SweepPoint> points;
  for (double d : grid.delta) {
    for (auto t : grid.t_init) {
      for (auto r : grid.rounds) {
        const std::string dir = "delta_" + format_number(d) + "__t_init_" + std::to_string(t) +
                                "__rounds_" + std::to_string(r);
        points.push_back({d, t, r, dir});
      }
    }
  }
  return points;
}

std::vector<SweepPoint> cmd_sweep(const ExperimentConfig& base, const SweepGrid& grid) {
  ensure_dir(base.output_dir);
  const auto points = expand_grid(grid);
  std::ostringstream manifest;
  manifest << "point,delta,t_init,rounds,directory\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& pt = points[i];
    ExperimentConfig cfg = base;
    cfg.delta = pt.delta;
    cfg.t_init = pt.t_init;
    cfg.rounds = pt.rounds;
    cfg.output_dir = base.output_dir / pt.directory;
    ensure_dir(cfg.output_dir);
    const ExperimentResult result = run_experiment(cfg);
    write_file(cfg.output_dir / "config.json", config_to_json(cfg).dump(2) + "\n");
    write_file(cfg.output_dir / "summary.csv", summary_csv(result, cfg.system.size()));
    manifest << i << ',' << format_number(pt.delta) << ',' << pt.t_init << ',' << pt.rounds << ','
             << pt.directory << '\n';
  }
  write_file(base.output_dir / "manifest.csv", manifest.str());
  return points;
}

}  // namespace ofu

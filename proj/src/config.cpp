#include "ofu/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace ofu {
namespace {

using nlohmann::json;

const json& require(const json& obj, const std::string& key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(path, "missing required field");
  return *it;
}

std::string join(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

std::string index(const std::string& parent, std::size_t i) {
  return parent + "[" + std::to_string(i) + "]";
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ValidationError(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ValidationError(path, "must be finite");
  return x;
}

std::int64_t integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ValidationError(path, "expected an integer");
  return v.get<std::int64_t>();
}

// Row-major nested arrays, e.g. [[0, 1], [-2, -3]].
Matrix matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ValidationError(path, "expected a non-empty array of rows");
  const std::size_t rows = v.size();
  std::size_t cols = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (!v[i].is_array() || v[i].empty()) {
      throw ValidationError(index(path, i), "expected a non-empty row");
    }
    if (i == 0) cols = v[i].size();
    if (v[i].size() != cols) throw ValidationError(index(path, i), "ragged row");
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          number(v[i][j], index(index(path, i), j));
    }
  }
  return m;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

// Constructors of the numeric types throw ContractError; rethrow with the
// config path attached.
template <typename F>
auto at_path(const std::string& path, F&& make) {
  try {
    return make();
  } catch (const ContractError& e) {
    throw ValidationError(path, e.what());
  }
}

SwitchedSystem parse_system(const json& doc) {
  const json& sys = require(doc, "system", "system");
  if (!sys.is_object()) throw ValidationError("system", "expected an object");
  const json& modes_json = require(sys, "modes", "system.modes");
  if (!modes_json.is_array() || modes_json.empty()) {
    throw ValidationError("system.modes", "expected a non-empty array");
  }
  std::vector<SystemMode> modes;
  for (std::size_t i = 0; i < modes_json.size(); ++i) {
    const std::string p = index("system.modes", i);
    const Matrix a = matrix(require(modes_json[i], "A", p + ".A"), p + ".A");
    const Matrix b = matrix(require(modes_json[i], "B", p + ".B"), p + ".B");
    modes.push_back(at_path(p, [&] { return SystemMode(a, b); }));
    if (i > 0 && (modes[i].state_dim() != modes[0].state_dim() ||
                  modes[i].input_dim() != modes[0].input_dim())) {
      throw ValidationError(p, "dimensions differ from system.modes[0]");
    }
  }
  const auto n = modes.front().state_dim();
  const auto m = modes.front().input_dim();
  const Matrix q = matrix(require(sys, "Q", "system.Q"), "system.Q");
  const Matrix r = matrix(require(sys, "R", "system.R"), "system.R");
  if (q.rows() != n || q.cols() != n) {
    throw ValidationError("system.Q", "expected " + std::to_string(n) + "x" + std::to_string(n));
  }
  if (r.rows() != m || r.cols() != m) {
    throw ValidationError("system.R", "expected " + std::to_string(m) + "x" + std::to_string(m));
  }
  const Matrix q_checked = at_path("system.Q", [&] { return CostWeights(q, Matrix::Identity(m, m)).Q(); });
  const Matrix r_checked = at_path("system.R", [&] { return CostWeights(Matrix::Identity(n, n), r).R(); });
  return SwitchedSystem(std::move(modes), CostWeights(q_checked, r_checked));
}

GainSource parse_gain(const json& v, const std::string& path, const SwitchedSystem& system) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "robust") return RobustGain{};
    if (s.rfind("care:", 0) == 0) {
      std::size_t mode = 0;
      try {
        mode = std::stoul(s.substr(5));
      } catch (const std::exception&) {
        throw ValidationError(path, "malformed mode reference '" + s + "'");
      }
      if (mode < 1 || mode > system.size()) {
        throw ValidationError(path, "mode reference out of range 1.." +
                                        std::to_string(system.size()));
      }
      return CareGain{mode - 1};
    }
    throw ValidationError(path, "expected \"robust\", \"care:<mode>\" or a matrix");
  }
  Matrix k = matrix(v, path);
  if (k.rows() != system.input_dim() || k.cols() != system.state_dim()) {
    throw ValidationError(path, "gain must be " + std::to_string(system.input_dim()) + "x" +
                                    std::to_string(system.state_dim()));
  }
  return k;
}

AgentDescriptor parse_agent(const json& v, const std::string& path, const SwitchedSystem& system) {
  if (!v.is_object()) throw ValidationError(path, "expected an object");
  const json& kind = require(v, "kind", path + ".kind");
  if (!kind.is_string()) throw ValidationError(path + ".kind", "expected a string");
  AgentDescriptor a;
  const auto k = kind.get<std::string>();
  if (k == "ofu") {
    a.kind = AgentDescriptor::Kind::kOfu;
  } else if (k == "static") {
    a.kind = AgentDescriptor::Kind::kStatic;
    a.gain = parse_gain(require(v, "gain", path + ".gain"), path + ".gain", system);
  } else if (k == "experts") {
    a.kind = AgentDescriptor::Kind::kExperts;
    if (v.contains("eta")) a.eta = number(v["eta"], path + ".eta");
    if (!(a.eta > 0.0 && a.eta <= 0.5)) throw ValidationError(path + ".eta", "must lie in (0, 0.5]");
  } else if (k == "oracle") {
    a.kind = AgentDescriptor::Kind::kOracle;
  } else {
    throw ValidationError(path + ".kind", "unknown agent kind '" + k + "'");
  }
  const json& label = require(v, "label", path + ".label");
  if (!label.is_string() || label.get<std::string>().empty()) {
    throw ValidationError(path + ".label", "expected a non-empty string");
  }
  a.label = label.get<std::string>();
  if (a.label.find_first_of(",\"\n") != std::string::npos) {
    throw ValidationError(path + ".label", "must not contain commas, quotes or newlines");
  }
  return a;
}

SelectionConfig parse_selection(const json& doc) {
  SelectionConfig cfg;
  if (!doc.contains("selection")) return cfg;
  const json& s = doc["selection"];
  if (!s.is_object()) throw ValidationError("selection", "expected an object");
  for (const auto& [key, value] : s.items()) {
    const std::string p = join("selection", key);
    if (key == "max_outer_iters") cfg.max_outer_iters = static_cast<int>(integer(value, p));
    else if (key == "outer_tol") cfg.outer_tol = number(value, p);
    else if (key == "max_inner_iters") cfg.max_inner_iters = static_cast<int>(integer(value, p));
    else if (key == "grad_tol") cfg.grad_tol = number(value, p);
    else if (key == "backtrack_shrink") cfg.backtrack_shrink = number(value, p);
    else if (key == "armijo_c") cfg.armijo_c = number(value, p);
    else if (key == "init_step") cfg.init_step = number(value, p);
    else throw ValidationError(p, "unknown selection field");
  }
  try {
    cfg.validate();
  } catch (const ContractError& e) {
    const std::string what = e.what();
    throw ValidationError(what.substr(0, what.find(' ')), what);
  }
  return cfg;
}

const char* kind_name(AgentDescriptor::Kind k) {
  switch (k) {
    case AgentDescriptor::Kind::kOfu: return "ofu";
    case AgentDescriptor::Kind::kStatic: return "static";
    case AgentDescriptor::Kind::kExperts: return "experts";
    case AgentDescriptor::Kind::kOracle: return "oracle";
  }
  return "?";
}

}  // namespace

ExperimentConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("(root)", "expected an object");
  SwitchedSystem system = parse_system(doc);
  const std::size_t p = system.size();

  const json& theta_json = require(doc, "theta_true", "theta_true");
  if (!theta_json.is_array() || theta_json.size() != p) {
    throw ValidationError("theta_true", "expected " + std::to_string(p) + " probabilities");
  }
  Probabilities theta;
  double sum = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    const double t = number(theta_json[i], index("theta_true", i));
    if (t < 0.0) throw ValidationError(index("theta_true", i), "probabilities must be nonnegative");
    theta.push_back(t);
    sum += t;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("theta_true", "not in the probability simplex (sums to " +
                                            std::to_string(sum) + ")");
  }

  const json& agents_json = require(doc, "agents", "agents");
  if (!agents_json.is_array() || agents_json.empty()) {
    throw ValidationError("agents", "expected a non-empty array");
  }
  std::vector<AgentDescriptor> agents;
  for (std::size_t i = 0; i < agents_json.size(); ++i) {
    agents.push_back(parse_agent(agents_json[i], index("agents", i), system));
    for (std::size_t j = 0; j < i; ++j) {
      if (agents[j].label == agents[i].label) {
        throw ValidationError(index("agents", i) + ".label", "duplicate label");
      }
    }
  }

  ExperimentConfig cfg{std::move(system), std::move(theta), std::move(agents)};
  cfg.rounds = integer(require(doc, "rounds", "rounds"), "rounds");
  if (cfg.rounds < 1) throw ValidationError("rounds", "must be at least 1");
  cfg.t_init = static_cast<std::int64_t>(std::max<std::size_t>(p, 2));
  if (doc.contains("t_init")) cfg.t_init = integer(doc["t_init"], "t_init");
  if (cfg.t_init < 1) throw ValidationError("t_init", "must be at least 1");
  if (doc.contains("delta")) cfg.delta = number(doc["delta"], "delta");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ValidationError("delta", "must lie in (0, 1)");
  if (doc.contains("seeds")) {
    const json& seeds = doc["seeds"];
    if (!seeds.is_array() || seeds.empty()) throw ValidationError("seeds", "expected a non-empty array");
    cfg.seeds.clear();
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      if (!seeds[i].is_number_unsigned()) {
        throw ValidationError(index("seeds", i), "expected a nonnegative integer");
      }
      cfg.seeds.push_back(seeds[i].get<std::uint64_t>());
    }
  }
  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string()) throw ValidationError("output_dir", "expected a string");
    cfg.output_dir = doc["output_dir"].get<std::string>();
  }
  if (doc.contains("note")) {
    if (!doc["note"].is_string()) throw ValidationError("note", "expected a string");
    cfg.note = doc["note"].get<std::string>();
  }
  cfg.selection = parse_selection(doc);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

json config_to_json(const ExperimentConfig& config) {
  json modes = json::array();
  for (const auto& mode : config.system.modes()) {
    modes.push_back({{"A", matrix_json(mode.A())}, {"B", matrix_json(mode.B())}});
  }
  json agents = json::array();
  for (const auto& a : config.agents) {
    json entry = {{"kind", kind_name(a.kind)}, {"label", a.label}};
    if (a.kind == AgentDescriptor::Kind::kExperts) entry["eta"] = a.eta;
    if (a.gain) {
      std::visit(
          [&](const auto& g) {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, CareGain>) {
              entry["gain"] = "care:" + std::to_string(g.mode + 1);
            } else if constexpr (std::is_same_v<T, RobustGain>) {
              entry["gain"] = "robust";
            } else {
              entry["gain"] = matrix_json(g);
            }
          },
          *a.gain);
    }
    agents.push_back(std::move(entry));
  }
  const auto& s = config.selection;
  json doc = {
      {"system",
       {{"modes", modes},
        {"Q", matrix_json(config.system.weights().Q())},
        {"R", matrix_json(config.system.weights().R())}}},
      {"theta_true", config.theta_true},
      {"agents", agents},
      {"rounds", config.rounds},
      {"t_init", config.t_init},
      {"delta", config.delta},
      {"seeds", config.seeds},
      {"output_dir", config.output_dir.string()},
      {"selection",
       {{"max_outer_iters", s.max_outer_iters},
        {"outer_tol", s.outer_tol},
        {"max_inner_iters", s.max_inner_iters},
        {"grad_tol", s.grad_tol},
        {"backtrack_shrink", s.backtrack_shrink},
        {"armijo_c", s.armijo_c},
        {"init_step", s.init_step}}},
  };
  if (!config.note.empty()) doc["note"] = config.note;
  return doc;
}

std::vector<AgentSpec> resolve_agents(const ExperimentConfig& config) {
  const auto& system = config.system;
  std::optional<std::vector<std::optional<Controller>>> care;
  std::optional<Controller> robust;
  std::vector<AgentSpec> specs;
  for (std::size_t i = 0; i < config.agents.size(); ++i) {
    const auto& a = config.agents[i];
    switch (a.kind) {
      case AgentDescriptor::Kind::kOfu:
        specs.push_back({OfuAgent{config.delta, config.t_init, config.selection}, a.label});
        break;
      case AgentDescriptor::Kind::kExperts:
        specs.push_back({ExpertsAgent{a.eta}, a.label});
        break;
      case AgentDescriptor::Kind::kOracle:
        specs.push_back({OracleAgent{config.selection}, a.label});
        break;
      case AgentDescriptor::Kind::kStatic: {
        const GainSource& g = *a.gain;
        if (const auto* c = std::get_if<CareGain>(&g)) {
          if (!care) care = per_mode_optimal_gains(system);
          const auto& k = (*care)[c->mode];
          if (!k) {
            throw InfeasibleError("agents[" + std::to_string(i) + "]: mode " +
                                  std::to_string(c->mode + 1) + " has no stabilizing Riccati gain");
          }
          specs.push_back({StaticAgent{*k}, a.label});
        } else if (std::holds_alternative<RobustGain>(g)) {
          if (!robust) robust = robust_controller(system, config.selection);
          specs.push_back({StaticAgent{*robust}, a.label});
        } else {
          specs.push_back({StaticAgent{Controller(std::get<Matrix>(g))}, a.label});
        }
        break;
      }
    }
  }
  return specs;
}

ExperimentConfig paper_config(std::vector<std::uint64_t> seeds,
                              std::filesystem::path output_dir) {
  Matrix a1(3, 3), a2(3, 3), b(3, 1);
  a1 << 0, 1, -1,
        0, 0, 1,
        0, 0, 0;
  a2 << 0, 1, 1,
        0, 0, 1,
        0, 0, 0;
  b << 0, 1, 1;
  SwitchedSystem system({SystemMode(a1, b), SystemMode(a2, b)},
                        CostWeights(Matrix::Identity(3, 3), Matrix::Identity(1, 1)));
  using Kind = AgentDescriptor::Kind;
  std::vector<AgentDescriptor> agents{
      {Kind::kOfu, "Kproposed", std::nullopt},
      {Kind::kStatic, "K1", CareGain{0}},
      {Kind::kStatic, "K2", CareGain{1}},
      {Kind::kStatic, "Krobust", RobustGain{}},
      {Kind::kExperts, "Experts", std::nullopt, 0.3},
      {Kind::kOracle, "Oracle", std::nullopt},
  };
  ExperimentConfig cfg{std::move(system), {0.5, 0.5}, std::move(agents)};
  cfg.rounds = 30;
  cfg.t_init = 2;
  cfg.delta = 0.1;
  cfg.seeds = std::move(seeds);
  cfg.output_dir = std::move(output_dir);
  cfg.note =
      "R is the scalar 1: the original experiment lists R = [1 1 1], which is "
      "dimensionally inconsistent with a single input (B is 3x1).";
  return cfg;
}

}  // namespace ofu

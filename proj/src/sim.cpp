#include "ofu/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <type_traits>

namespace ofu {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Lazily computed robust gain shared by fallbacks within one episode.
class RobustCache {
 public:
  RobustCache(const SwitchedSystem& system, const SelectionConfig& cfg)
      : system_(system), cfg_(cfg) {}
  const Controller& get() {
    if (!k_) k_ = robust_controller(system_, cfg_);
    return *k_;
  }

 private:
  const SwitchedSystem& system_;
  const SelectionConfig& cfg_;
  std::optional<Controller> k_;
};

struct Applied {
  std::size_t omega;
  double cost;
  IdentificationResult id;
};

Applied apply_round(const Environment& env, const Controller& k, Rng& realizations) {
  const std::size_t omega = sample_mode(env.theta_true, realizations);
  const double c = realized_cost(env, omega, k);
  const auto costs = mode_costs(env.system, k);
  return {omega, c, identify_realization(c, costs)};
}

}  // namespace

Rng::Rng(std::uint64_t seed, Stream stream)
    : engine_(splitmix64(seed + 0x632be59bd9b4e019ULL * static_cast<std::uint64_t>(stream))) {}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t sample_mode(std::span<const double> theta, Rng& rng) {
  if (theta.empty()) throw ContractError("cannot sample from an empty distribution");
  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (theta[i] <= 0.0) continue;
    last_positive = i;
    cumulative += theta[i];
    if (u < cumulative) return i;
  }
  return last_positive;
}

double realized_cost(const Environment& env, std::size_t i, const Controller& k) {
  if (i >= env.system.size()) throw ContractError("realized mode index out of range");
  const CostValue c = cost(env.system.mode(i), k, env.system.weights());
  if (!c.is_finite()) {
    throw EpisodeFault("applied gain does not stabilize realized mode " +
                       std::to_string(i + 1));
  }
  return c.value();
}

Exploration explore_init(const Environment& env, std::int64_t t_init,
                         const SelectionConfig& cfg, Rng& stream, const std::string& label) {
  if (t_init < 1) throw PreconditionError("exploration needs t_init >= 1");
  const auto& system = env.system;
  RobustCache robust(system, cfg);

  std::vector<Controller> gains;
  for (auto& k : per_mode_optimal_gains(system)) {
    if (k && system.stabilizes_all(*k)) {
      gains.push_back(std::move(*k));
      continue;
    }
    try {
      gains.push_back(robust.get());
    } catch (const InfeasibleError& e) {
      throw SetupError(std::string("no feasible exploration controller: ") + e.what());
    }
  }

  CountVector counts(system.size(), 0);
  std::vector<RoundRecord> records;
  double cum = 0.0;
  for (std::int64_t j = 1; j <= t_init; ++j) {
    const Controller& k = gains[static_cast<std::size_t>(j - 1) % gains.size()];
    const Applied a = apply_round(env, k, stream);
    counts = update_counts(std::move(counts), a.id.mode_index);
    cum += a.cost;
    RoundRecord r{j - t_init, label, k, a.omega, a.cost, cum, mle_estimate(counts),
                  std::nullopt};
    r.exploration = true;
    r.ambiguous = a.id.ambiguous;
    records.push_back(std::move(r));
  }
  return {std::move(counts), gains[static_cast<std::size_t>(t_init - 1) % gains.size()],
          std::move(records)};
}

ExpertsPanel make_experts_panel(const SwitchedSystem& system) {
  ExpertsPanel panel;
  for (auto& k : per_mode_optimal_gains(system)) {
    if (!k) throw SetupError("experts baseline: a mode has no stabilizing Riccati gain");
    panel.gains.push_back(std::move(*k));
  }
  const auto p = static_cast<Eigen::Index>(system.size());
  Matrix table(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index e = 0; e < p; ++e) {
      const CostValue c = cost(system.mode(static_cast<std::size_t>(j)),
                               panel.gains[static_cast<std::size_t>(e)], system.weights());
      if (!c.is_finite()) {
        throw SetupError("experts baseline: gain of mode " + std::to_string(e + 1) +
                         " does not stabilize mode " + std::to_string(j + 1));
      }
      table(j, e) = c.value();
    }
  }
  panel.normalized_loss = table / table.maxCoeff();
  return panel;
}

std::size_t choose_expert(std::span<const double> weights, double u) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double cumulative = 0.0;
  for (std::size_t e = 0; e < weights.size(); ++e) {
    cumulative += weights[e] / total;
    if (u < cumulative) return e;
  }
  return weights.size() - 1;
}

std::vector<double> update_expert_weights(const ExpertsPanel& panel,
                                          std::vector<double> weights,
                                          std::size_t realized, double eta) {
  if (!(eta > 0.0 && eta <= 0.5)) throw ContractError("eta must lie in (0, 0.5]");
  if (weights.size() != panel.gains.size()) throw ContractError("one weight per expert");
  if (realized >= weights.size()) throw ContractError("realized mode out of range");
  for (std::size_t e = 0; e < weights.size(); ++e) {
    if (!(weights[e] > 0.0)) throw ContractError("expert weights must be positive");
    const double loss = panel.normalized_loss(static_cast<Eigen::Index>(realized),
                                              static_cast<Eigen::Index>(e));
    weights[e] *= std::pow(1.0 - eta, loss);
  }
  const double top = *std::max_element(weights.begin(), weights.end());
  for (auto& w : weights) w /= top;
  return weights;
}

ExpertsStep experts_step(const ExpertsPanel& panel, std::vector<double> weights,
                         std::size_t realized, double eta, double u) {
  const std::size_t chosen = choose_expert(weights, u);
  return {chosen, update_expert_weights(panel, std::move(weights), realized, eta)};
}

std::vector<RoundRecord> run_episode(const Environment& env, const AgentSpec& agent,
                                     std::int64_t t_rounds, const SelectionObserver& observer) {
  if (t_rounds < 1) throw PreconditionError("an episode needs at least one round");
  Rng realizations(env.seed, Stream::kRealizations);
  std::vector<RoundRecord> records;
  double cum = 0.0;

  auto log = [&](std::int64_t t, const Controller& k, const Applied& a) -> RoundRecord& {
    cum += a.cost;
    RoundRecord r{t, agent.label, k, a.omega, a.cost, cum, std::nullopt, std::nullopt};
    r.ambiguous = a.id.ambiguous;
    records.push_back(std::move(r));
    return records.back();
  };

  std::visit(
      [&](const auto& spec) {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, OfuAgent>) {
          Rng exploration_stream(env.seed, Stream::kExploration);
          Exploration ex = explore_init(env, spec.t_init, spec.selection, exploration_stream,
                                        agent.label);
          records = std::move(ex.records);
          BeliefState belief(std::move(ex.counts), spec.t_init, spec.delta);
          RobustCache robust(env.system, spec.selection);
          std::optional<Controller> warm = std::move(ex.last);
          for (std::int64_t t = 1; t <= t_rounds; ++t) {
            std::optional<Controller> k;
            bool fallback = false;
            try {
              SelectionResult sel = optimistic_select(env.system, belief, warm, spec.selection);
              if (observer) observer(t, sel);
              k = std::move(sel.k);
            } catch (const InfeasibleError&) {
              k = robust.get();
              fallback = true;
            }
            const Applied a = apply_round(env, *k, realizations);
            belief = belief.observed(a.id.mode_index);
            const ConfidenceSet cs = confidence_set(belief);
            RoundRecord& r = log(t, *k, a);
            r.theta_hat = cs.theta_hat;
            r.radius = cs.radius;
            r.fallback = fallback;
            warm = std::move(k);
          }
        } else if constexpr (std::is_same_v<T, StaticAgent>) {
          for (std::int64_t t = 1; t <= t_rounds; ++t) {
            log(t, spec.k, apply_round(env, spec.k, realizations));
          }
        } else if constexpr (std::is_same_v<T, OracleAgent>) {
          const Controller k = oracle_controller(env.system, env.theta_true, spec.selection);
          for (std::int64_t t = 1; t <= t_rounds; ++t) {
            log(t, k, apply_round(env, k, realizations));
          }
        } else {
          const ExpertsPanel panel = make_experts_panel(env.system);
          Rng experts_stream(env.seed, Stream::kExperts);
          std::vector<double> weights(panel.gains.size(), 1.0);
          for (std::int64_t t = 1; t <= t_rounds; ++t) {
            const std::size_t chosen = choose_expert(weights, experts_stream.uniform());
            const Controller& k = panel.gains[chosen];
            const Applied a = apply_round(env, k, realizations);
            weights = update_expert_weights(panel, std::move(weights), a.id.mode_index,
                                            spec.eta);
            log(t, k, a);
          }
        }
      },
      agent.kind);
  return records;
}

}  // namespace ofu

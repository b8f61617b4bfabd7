#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "ofu/identify.hpp"
#include "ofu/opt_select.hpp"

using namespace ofu;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

SwitchedSystem scalar_system(std::initializer_list<double> as) {
  std::vector<SystemMode> modes;
  for (double a : as) modes.emplace_back(scalar(a), scalar(1));
  return SwitchedSystem(std::move(modes), CostWeights(scalar(1), scalar(1)));
}

SwitchedSystem benchmark_system() {
  Matrix a1(3, 3), a2(3, 3), b(3, 1);
  a1 << 0, 1, -1, 0, 0, 1, 0, 0, 0;
  a2 << 0, 1, 1, 0, 0, 1, 0, 0, 0;
  b << 0, 1, 1;
  return SwitchedSystem({SystemMode(a1, b), SystemMode(a2, b)},
                        CostWeights(Matrix::Identity(3, 3), scalar(1)));
}

double care_cost(const SwitchedSystem& s, std::size_t i) {
  return solve_care(s.mode(i), s.weights()).P.trace();
}

void check_monotone(const SelectionResult& r) {
  for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] <= r.trace[i - 1] + 1e-10);
}

}  // namespace

TEST_CASE("mixture_cost") {
  const auto one = scalar_system({0});
  CHECK(mixture_cost(one, std::vector{1.0}, Controller(scalar(-2))).value() ==
        doctest::Approx(1.25));

  const auto two = scalar_system({0, 1});
  const Controller k(scalar(-2));
  CHECK(mixture_cost(two, std::vector{1.0, 0.0}, k).value() == doctest::Approx(1.25));
  CHECK(mixture_cost(two, std::vector{0.5, 0.5}, k).value() ==
        doctest::Approx(0.5 * 1.25 + 0.5 * 2.5));
  // Stabilizes mode 1 only: outside the admissible set even with theta on mode 1.
  CHECK_FALSE(mixture_cost(two, std::vector{1.0, 0.0}, Controller(scalar(-0.5))).is_finite());
  CHECK_THROWS_AS(mixture_cost(two, std::vector{0.7, 0.7}, k), ContractError);
  CHECK_THROWS_AS(mixture_cost(two, std::vector{1.0}, k), ContractError);
}

TEST_CASE("minimize_mixture") {
  SelectionConfig cfg;
  SUBCASE("single mode reaches the Riccati gain") {
    const auto one = scalar_system({0});
    const auto k = minimize_mixture(one, std::vector{1.0}, Controller(scalar(-3)), cfg);
    CHECK(std::abs(k.K()(0, 0) + 1.0) <= 1e-4);
  }
  SUBCASE("vertex theta reduces to one mode") {
    const auto two = scalar_system({0, 1});
    const auto k = minimize_mixture(two, std::vector{1.0, 0.0}, Controller(scalar(-3)), cfg);
    // The mode-1 optimum K = -1 would make mode 2 marginal; the descent must
    // stay strictly inside the admissible set.
    CHECK(two.stabilizes_all(k));
    CHECK(mixture_cost(two, std::vector{1.0, 0.0}, k).value() <=
          cost(two.mode(0), Controller(scalar(-3)), two.weights()).value());
  }
  SUBCASE("vertex theta where the mode-1 optimum stabilizes both") {
    const auto two = scalar_system({-1, 0.2});
    const double k1 = solve_care(two.mode(0), two.weights()).k_star.K()(0, 0);
    REQUIRE(two.stabilizes_all(Controller(scalar(k1))));
    const auto k = minimize_mixture(two, std::vector{1.0, 0.0}, Controller(scalar(-4)), cfg);
    CHECK(mixture_cost(two, std::vector{1.0, 0.0}, k).value() ==
          doctest::Approx(care_cost(two, 0)).epsilon(1e-4));
  }
  SUBCASE("benchmark from the best per-mode gain") {
    const auto sys = benchmark_system();
    const std::vector theta{0.5, 0.5};
    const auto gains = per_mode_optimal_gains(sys);
    const double c1 = mixture_cost(sys, theta, *gains[0]).value();
    const double c2 = mixture_cost(sys, theta, *gains[1]).value();
    const Controller start = c1 <= c2 ? *gains[0] : *gains[1];
    const auto k = minimize_mixture(sys, theta, start, cfg);
    CHECK(mixture_cost(sys, theta, k).value() <= std::min(c1, c2));
    CHECK(sys.stabilizes_all(k));
  }
  SUBCASE("infeasible start") {
    const auto two = scalar_system({0, 1});
    CHECK_THROWS_AS(minimize_mixture(two, std::vector{0.5, 0.5}, Controller(scalar(-0.5)), cfg),
                    PreconditionError);
  }
}

TEST_CASE("optimistic_select") {
  SelectionConfig cfg;
  SUBCASE("single mode") {
    const auto one = scalar_system({1});
    const auto r = optimistic_select(one, BeliefState({3}, 1, 0.1), std::nullopt, cfg);
    CHECK(r.objective == doctest::Approx(care_cost(one, 0)).epsilon(1e-6));
    CHECK(r.theta_opt == Probabilities{1.0});
    check_monotone(r);
  }
  SUBCASE("huge radius collapses onto the cheapest mode") {
    const auto sys = benchmark_system();
    const BeliefState b({1, 1}, 2, 0.1);
    REQUIRE(confidence_set(b).radius >= 2.0);
    const auto r = optimistic_select(sys, b, std::nullopt, cfg);
    const double floor = std::min(care_cost(sys, 0), care_cost(sys, 1));
    CHECK(r.objective <= floor + 1e-9);
    CHECK((r.theta_opt[0] == 0.0 || r.theta_opt[1] == 0.0));
    check_monotone(r);
    CHECK(sys.stabilizes_all(r.k));
  }
  SUBCASE("concentrated counts approach the vertex problem") {
    const auto sys = benchmark_system();
    // Radius ~1e-2, so at most ~5e-3 of the mass can leave the first mode.
    const BeliefState b({1000000, 0}, 2, 0.1);
    const auto r = optimistic_select(sys, b, std::nullopt, cfg);
    const auto gains = per_mode_optimal_gains(sys);
    const auto vertex = minimize_mixture(sys, std::vector{1.0, 0.0}, *gains[0], cfg);
    const double v = mixture_cost(sys, std::vector{1.0, 0.0}, vertex).value();
    CHECK(std::abs(r.objective - v) / v <= 1e-2);
    check_monotone(r);
  }
  SUBCASE("optimism dominance and stationarity on random beliefs") {
    const auto sys = benchmark_system();
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> count(0, 60);
    std::optional<Controller> warm;
    for (int trial = 0; trial < 20; ++trial) {
      const BeliefState b({count(rng) + 1, count(rng) + 1}, 2, 0.1);
      const auto r = optimistic_select(sys, b, warm, cfg);
      check_monotone(r);
      CHECK(sys.stabilizes_all(r.k));
      const auto cs = confidence_set(b);
      CHECK(r.objective <= mixture_cost(sys, cs.theta_hat, r.k).value() + 1e-10);
      CHECK(r.objective == doctest::Approx(mixture_cost(sys, r.theta_opt, r.k).value()).epsilon(1e-12));
      if (r.converged) {
        Matrix g = Matrix::Zero(1, 3);
        for (std::size_t i = 0; i < 2; ++i) {
          if (r.theta_opt[i] > 0) g += r.theta_opt[i] * cost_gradient(sys.mode(i), r.k, sys.weights());
        }
        CHECK(g.norm() <= cfg.grad_tol);
      }
      warm = r.k;
    }
  }
  SUBCASE("no feasible initialization") {
    // Mode 2 is unstable and uncontrollable, so no gain stabilizes both.
    Matrix a(2, 2), b(2, 1);
    a << 1, 0, 0, -1;
    b << 0, 1;
    const SwitchedSystem sys({SystemMode(-Matrix::Identity(2, 2), b), SystemMode(a, b)},
                             CostWeights(Matrix::Identity(2, 2), scalar(1)));
    CHECK_THROWS_AS(optimistic_select(sys, BeliefState({1, 1}, 2, 0.1), std::nullopt, cfg),
                    InfeasibleError);
    CHECK_THROWS_AS(robust_controller(sys, cfg), InfeasibleError);
  }
}

TEST_CASE("robust_controller") {
  SelectionConfig cfg;
  SUBCASE("single mode") {
    const auto one = scalar_system({0.5});
    const auto k = robust_controller(one, cfg);
    CHECK(k.K()(0, 0) == doctest::Approx(solve_care(one.mode(0), one.weights()).k_star.K()(0, 0)));
  }
  SUBCASE("identical modes match the mixture minimizer") {
    const auto sys = benchmark_system();
    const SwitchedSystem twin({sys.mode(1), sys.mode(1)}, sys.weights());
    const auto k = robust_controller(twin, cfg);
    const auto gains = per_mode_optimal_gains(twin);
    const auto km = minimize_mixture(twin, std::vector{0.5, 0.5}, *gains[0], cfg);
    CHECK(mixture_cost(twin, std::vector{0.5, 0.5}, k).value() ==
          doctest::Approx(mixture_cost(twin, std::vector{0.5, 0.5}, km).value()).epsilon(1e-6));
  }
  SUBCASE("benchmark does not lose to either per-mode gain") {
    const auto sys = benchmark_system();
    auto worst = [&](const Controller& k) {
      double w = 0.0;
      for (const auto& c : mode_costs(sys, k)) w = std::max(w, c.value());
      return w;
    };
    const auto gains = per_mode_optimal_gains(sys);
    CHECK(worst(robust_controller(sys, cfg)) <= std::min(worst(*gains[0]), worst(*gains[1])));
  }
}

TEST_CASE("oracle_controller") {
  SelectionConfig cfg;
  const auto one = scalar_system({0});
  CHECK(oracle_controller(one, std::vector{1.0}, cfg).K()(0, 0) == doctest::Approx(-1.0).epsilon(1e-4));

  const auto sys = benchmark_system();
  const auto k1 = oracle_controller(sys, std::vector{1.0, 0.0}, cfg);
  CHECK(cost(sys.mode(0), k1, sys.weights()).value() ==
        doctest::Approx(care_cost(sys, 0)).epsilon(1e-4));

  const std::vector theta{0.5, 0.5};
  const auto k = oracle_controller(sys, theta, cfg);
  const auto gains = per_mode_optimal_gains(sys);
  CHECK(mixture_cost(sys, theta, k).value() <=
        std::min(mixture_cost(sys, theta, *gains[0]).value(),
                 mixture_cost(sys, theta, *gains[1]).value()));
}

TEST_CASE("selection config validation") {
  SelectionConfig cfg;
  cfg.backtrack_shrink = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg = SelectionConfig{};
  cfg.max_inner_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
}

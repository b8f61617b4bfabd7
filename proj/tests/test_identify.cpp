#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "ofu/identify.hpp"

using namespace ofu;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

std::vector<CostValue> finite(std::initializer_list<double> vs) {
  std::vector<CostValue> out;
  for (double v : vs) out.push_back(CostValue::finite(v));
  return out;
}

}  // namespace

TEST_CASE("mode_costs") {
  const CostWeights w(scalar(1), scalar(1));
  const SwitchedSystem scalar2({SystemMode(scalar(0), scalar(1)), SystemMode(scalar(1), scalar(1))}, w);
  const auto c = mode_costs(scalar2, Controller(scalar(-2)));
  CHECK(c[0].value() == doctest::Approx(1.25));
  CHECK(c[1].value() == doctest::Approx(2.5));

  const auto partial = mode_costs(scalar2, Controller(scalar(-0.5)));
  CHECK(partial[0].is_finite());
  CHECK_FALSE(partial[1].is_finite());

  const SwitchedSystem twins({SystemMode(scalar(0.3), scalar(2)), SystemMode(scalar(0.3), scalar(2))}, w);
  const auto t = mode_costs(twins, Controller(scalar(-1)));
  CHECK(t[0] == t[1]);
}

TEST_CASE("identify_realization") {
  auto r = identify_realization(5.1, finite({5, 9}));
  CHECK(r.mode_index == 0);
  CHECK(r.residual == doctest::Approx(0.1));
  CHECK_FALSE(r.ambiguous);

  r = identify_realization(7.0, finite({5, 9}));
  CHECK(r.mode_index == 0);
  CHECK(r.ambiguous);

  r = identify_realization(2.5, finite({1.25, 2.5}));
  CHECK(r.mode_index == 1);
  CHECK(r.residual == 0.0);

  r = identify_realization(100.0, std::vector{CostValue::infeasible(), CostValue::finite(3.0)});
  CHECK(r.mode_index == 1);
  CHECK(r.all_costs.size() == 2);

  CHECK_THROWS_AS(identify_realization(1.0, std::vector{CostValue::infeasible(), CostValue::infeasible()}),
                  InfeasibleError);
}

TEST_CASE("identification is exact and permutation equivariant on random systems") {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> pdist(2, 4), ndist(2, 4);
  int checked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int p = pdist(rng);
    const Eigen::Index n = ndist(rng), m = std::min<Eigen::Index>(ndist(rng), 2);
    const Matrix k = ofu::testing::random_matrix(rng, m, n, 0.5);
    std::vector<SystemMode> modes;
    for (int i = 0; i < p; ++i) {
      const Matrix h = ofu::testing::random_hurwitz(rng, n, 0.2);
      const Matrix b = ofu::testing::random_matrix(rng, n, m);
      modes.emplace_back(h - b * k, b);
    }
    const SwitchedSystem sys(modes, CostWeights(Matrix::Identity(n, n), Matrix::Identity(m, m)));
    const auto costs = mode_costs(sys, Controller(k));
    const int j = std::uniform_int_distribution<int>(0, p - 1)(rng);
    const auto r = identify_realization(costs[static_cast<std::size_t>(j)].value(), costs);
    if (r.ambiguous) continue;
    ++checked;
    CHECK(r.mode_index == static_cast<std::size_t>(j));
    CHECK(r.residual <= 1e-9);

    std::vector<std::size_t> perm(static_cast<std::size_t>(p));
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<SystemMode> permuted;
    for (auto idx : perm) permuted.push_back(modes[idx]);
    const SwitchedSystem psys(permuted, sys.weights());
    const auto pr = identify_realization(costs[static_cast<std::size_t>(j)].value(),
                                         mode_costs(psys, Controller(k)));
    CHECK(perm[pr.mode_index] == static_cast<std::size_t>(j));
  }
  CHECK(checked > 450);
}

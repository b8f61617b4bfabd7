#pragma once

// Test-only oracles and random problem generators. Nothing here calls the
// library routine it is used to check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ofu/lqr_core.hpp"

namespace ofu::testing {

using CMatrix = Eigen::MatrixXcd;

/// Lyapunov solution through the eigendecomposition M = V L V^{-1}:
/// in the basis V, P~_ij = -S~_ij / (conj(l_i) + l_j).
inline Matrix lyapunov_by_eigendecomposition(const Matrix& m, const Matrix& s) {
  Eigen::EigenSolver<Matrix> es(m);
  const CMatrix v = es.eigenvectors();
  const Eigen::VectorXcd l = es.eigenvalues();
  const CMatrix s_t = v.adjoint() * s.cast<std::complex<double>>() * v;
  CMatrix p_t(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      p_t(i, j) = -s_t(i, j) / (std::conj(l(i)) + l(j));
    }
  }
  const CMatrix vinv = v.inverse();
  return (vinv.adjoint() * p_t * vinv).real();
}

/// Scalar closed form p(K) = (q + r K^2) / (-2 (a + b K)).
inline double scalar_cost(double a, double b, double q, double r, double k) {
  return (q + r * k * k) / (-2.0 * (a + b * k));
}

/// Central finite differences of f over the entries of K.
template <typename F>
Matrix finite_difference_gradient(F&& f, const Matrix& k, double h) {
  Matrix g(k.rows(), k.cols());
  for (Eigen::Index i = 0; i < k.rows(); ++i) {
    for (Eigen::Index j = 0; j < k.cols(); ++j) {
      Matrix kp = k, km = k;
      kp(i, j) += h;
      km(i, j) -= h;
      g(i, j) = (f(kp) - f(km)) / (2.0 * h);
    }
  }
  return g;
}

/// Random matrix with iid N(0, scale^2) entries.
inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                            double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  return m;
}

inline double abscissa(const Matrix& m) {
  return Eigen::EigenSolver<Matrix>(m, false).eigenvalues().real().maxCoeff();
}

/// Random Hurwitz matrix whose spectral abscissa equals -margin.
inline Matrix random_hurwitz(std::mt19937_64& rng, Eigen::Index n, double margin) {
  Matrix g = random_matrix(rng, n, n, 1.0 / std::sqrt(static_cast<double>(n)));
  return g - (abscissa(g) + margin) * Matrix::Identity(n, n);
}

inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index n, double floor = 0.1) {
  const Matrix g = random_matrix(rng, n, n, 1.0 / std::sqrt(static_cast<double>(n)));
  return g * g.transpose() + floor * Matrix::Identity(n, n);
}

inline Matrix random_psd(std::mt19937_64& rng, Eigen::Index n) {
  const Matrix g = random_matrix(rng, n, n / 2 + 1);
  return g * g.transpose();
}

/// A mode together with a gain that stabilizes it: A = H - B K with H
/// Hurwitz, so A + BK = H.
struct StabilizedMode {
  SystemMode mode;
  Controller k;
};

inline StabilizedMode random_stabilized_mode(std::mt19937_64& rng, Eigen::Index n,
                                             Eigen::Index m, double margin) {
  const Matrix h = random_hurwitz(rng, n, margin);
  const Matrix b = random_matrix(rng, n, m);
  const Matrix k = random_matrix(rng, m, n, 0.5);
  return {SystemMode(h - b * k, b), Controller(k)};
}

/// Brute-force minimum of theta . J over {||theta - theta_hat||_1 <= r} within
/// the simplex on the grid theta_i = k_i / steps (theta_hat must lie on the
/// grid). For p = 4 the last free coordinate is minimized exactly, so the
/// value is at most the pure grid minimum.
inline double grid_lp_minimum(const std::vector<double>& theta_hat, double r,
                              const std::vector<double>& j, int steps) {
  const std::size_t p = theta_hat.size();
  const double h = 1.0 / steps;
  constexpr double tol = 1e-12;
  double best = std::numeric_limits<double>::infinity();
  if (p == 1) return j[0];
  if (p == 2) {
    for (int k = 0; k <= steps; ++k) {
      const double t0 = k * h, t1 = 1.0 - t0;
      if (std::abs(t0 - theta_hat[0]) + std::abs(t1 - theta_hat[1]) <= r + tol) {
        best = std::min(best, t0 * j[0] + t1 * j[1]);
      }
    }
    return best;
  }
  if (p == 3) {
    for (int k0 = 0; k0 <= steps; ++k0) {
      for (int k1 = 0; k0 + k1 <= steps; ++k1) {
        const double t0 = k0 * h, t1 = k1 * h, t2 = (steps - k0 - k1) * h;
        const double d = std::abs(t0 - theta_hat[0]) + std::abs(t1 - theta_hat[1]) +
                         std::abs(t2 - theta_hat[2]);
        if (d <= r + tol) best = std::min(best, t0 * j[0] + t1 * j[1] + t2 * j[2]);
      }
    }
    return best;
  }
  // p == 4: grid over (theta_0, theta_1); theta_2 = x, theta_3 = s - x with
  // |x - a| + |s - x - b| <= r', which is an interval in x.
  for (int k0 = 0; k0 <= steps; ++k0) {
    for (int k1 = 0; k0 + k1 <= steps; ++k1) {
      const double t0 = k0 * h, t1 = k1 * h;
      const double s = (steps - k0 - k1) * h;
      const double rr = r - std::abs(t0 - theta_hat[0]) - std::abs(t1 - theta_hat[1]);
      const double a = theta_hat[2], b = theta_hat[3];
      const double c = std::abs(s - a - b);
      if (rr + tol < c) continue;
      const double slack = std::max(0.0, rr - c) / 2.0;
      const double lo = std::max(0.0, std::min(a, s - b) - slack);
      const double hi = std::min(s, std::max(a, s - b) + slack);
      if (lo > hi + tol) continue;
      for (double x : {lo, std::max(lo, hi)}) {
        best = std::min(best, t0 * j[0] + t1 * j[1] + x * j[2] + (s - x) * j[3]);
      }
    }
  }
  return best;
}

}  // namespace ofu::testing

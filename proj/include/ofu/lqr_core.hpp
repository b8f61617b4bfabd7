#pragma once

// Dense small-matrix continuous-time LQR numerics: Lyapunov and Riccati
// solves, stability tests, and the infinite-horizon quadratic cost of a
// static state-feedback gain together with its gradient.

#include <compare>
#include <optional>

#include <Eigen/Dense>

#include "ofu/errors.hpp"

namespace ofu {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Margin used for every strict inequality (Hurwitz, positive definite).
inline constexpr double kStabilityMargin = 1e-9;

/// One candidate plant dz/dt = A z + B u.
class SystemMode {
 public:
  SystemMode(Matrix a, Matrix b);

  const Matrix& A() const { return a_; }
  const Matrix& B() const { return b_; }
  Eigen::Index state_dim() const { return a_.rows(); }
  Eigen::Index input_dim() const { return b_.cols(); }

 private:
  Matrix a_;
  Matrix b_;
};

/// Quadratic weights of the running cost z'Qz + u'Ru. Both must be
/// symmetric (to 1e-12) and positive definite; they are stored symmetrized.
class CostWeights {
 public:
  CostWeights(Matrix q, Matrix r);

  const Matrix& Q() const { return q_; }
  const Matrix& R() const { return r_; }

 private:
  Matrix q_;
  Matrix r_;
};

/// Static state feedback u = K z, K is m x n.
class Controller {
 public:
  explicit Controller(Matrix k);

  const Matrix& K() const { return k_; }

 private:
  Matrix k_;
};

/// Infinite-horizon cost of a gain on one mode. An unstable closed loop
/// has the distinguished value infeasible(), which orders above every
/// finite cost.
class CostValue {
 public:
  static CostValue infeasible() { return CostValue(); }
  static CostValue finite(double v);

  bool is_finite() const { return value_.has_value(); }
  // Throws InfeasibleError when called on an infeasible cost.
  double value() const;
  // +inf for infeasible costs; convenient for arithmetic.
  double value_or_inf() const;

  friend bool operator==(const CostValue&, const CostValue&) = default;
  friend std::partial_ordering operator<=>(const CostValue& a,
                                           const CostValue& b) {
    return a.value_or_inf() <=> b.value_or_inf();
  }

 private:
  CostValue() = default;
  std::optional<double> value_;
};

/// A + B K.
Matrix closed_loop(const SystemMode& mode, const Controller& k);

/// Largest real part of the eigenvalues of a square matrix.
double spectral_abscissa(const Matrix& m);

bool is_hurwitz(const Matrix& m);
bool is_stabilizing(const SystemMode& mode, const Controller& k);

/// Solves M'P + PM + S = 0 for Hurwitz M by Kronecker vectorization.
/// The returned P is symmetric; relative residual is at most 1e-9.
Matrix solve_lyapunov(const Matrix& m, const Matrix& s);

/// ||M'P + PM + S||_F / (1 + ||S||_F).
double lyapunov_residual(const Matrix& m, const Matrix& p, const Matrix& s);

/// tr(P) with M'P + PM + Q + K'RK = 0, M = A + BK; infeasible when the
/// closed loop is not Hurwitz.
CostValue cost(const SystemMode& mode, const Controller& k,
               const CostWeights& w);

/// Gradient of tr(P) with respect to K: 2 (RK + B'P) X with
/// MX + XM' + I = 0. Throws InfeasibleError for non-stabilizing K.
Matrix cost_gradient(const SystemMode& mode, const Controller& k,
                     const CostWeights& w);

struct CostAndGradient {
  double cost;
  Matrix gradient;
};

/// Both of the above from a single pair of Lyapunov solves.
CostAndGradient cost_and_gradient(const SystemMode& mode, const Controller& k,
                                  const CostWeights& w);

struct CareSolution {
  Matrix P;
  Controller k_star;
};

/// Stabilizing solution of A'P + PA - PBR^{-1}B'P + Q = 0 and the optimal
/// gain K* = -R^{-1}B'P. Throws InfeasibleError when no stabilizing
/// solution is found.
CareSolution solve_care(const SystemMode& mode, const CostWeights& w);

/// ||A'P + PA - PBR^{-1}B'P + Q||_F / (1 + ||Q||_F).
double care_residual(const SystemMode& mode, const CostWeights& w,
                     const Matrix& p);

/// Time-domain cost: sum over canonical initial states of the integral of
/// z'(Q + K'RK)z over [0, t_f], with fixed-step classical RK4 applied to
/// the state augmented by the running cost.
double simulate_cost_oracle(const SystemMode& mode, const Controller& k,
                            const CostWeights& w, double t_f, double dt);

}  // namespace ofu

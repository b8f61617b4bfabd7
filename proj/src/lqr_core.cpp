#include "ofu/lqr_core.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

namespace ofu {
namespace {

std::string shape(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw ContractError(std::string(what) + " has non-finite entries");
  }
}

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw ContractError(std::string(what) + " must be square and non-empty, got " +
                        shape(m));
  }
}

// Symmetric with tolerance 1e-12 relative to the largest entry, and
// smallest eigenvalue above the stability margin.
Matrix checked_spd(Matrix m, const char* what) {
  require_square(m, what);
  require_finite(m, what);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ContractError(std::string(what) + " is not symmetric");
  }
  Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericalError(std::string("eigenvalue solve failed for ") + what);
  }
  if (es.eigenvalues().minCoeff() <= kStabilityMargin) {
    throw ContractError(std::string(what) + " is not positive definite");
  }
  return sym;
}

void check_compatible(const SystemMode& mode, const Controller& k) {
  if (k.K().rows() != mode.input_dim() || k.K().cols() != mode.state_dim()) {
    throw ContractError("gain is " + shape(k.K()) + ", expected " +
                        std::to_string(mode.input_dim()) + "x" +
                        std::to_string(mode.state_dim()));
  }
}

void check_compatible(const SystemMode& mode, const CostWeights& w) {
  if (w.Q().rows() != mode.state_dim() || w.R().rows() != mode.input_dim()) {
    throw ContractError("weights are Q " + shape(w.Q()) + ", R " + shape(w.R()) +
                        " for a mode with n=" + std::to_string(mode.state_dim()) +
                        ", m=" + std::to_string(mode.input_dim()));
  }
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Kronecker form of P -> M'P + PM on column-major vec(P).
Matrix lyapunov_operator(const Matrix& m) {
  const Eigen::Index n = m.rows();
  Matrix op = Matrix::Zero(n * n, n * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index row = i + j * n;
      for (Eigen::Index k = 0; k < n; ++k) {
        op(row, k + j * n) += m(k, i);  // (M'P)(i,j)
        op(row, i + k * n) += m(k, j);  // (PM)(i,j)
      }
    }
  }
  return op;
}

}  // namespace

SystemMode::SystemMode(Matrix a, Matrix b) : a_(std::move(a)), b_(std::move(b)) {
  require_square(a_, "A");
  if (b_.rows() != a_.rows() || b_.cols() == 0) {
    throw ContractError("B is " + shape(b_) + ", expected " +
                        std::to_string(a_.rows()) + "xm with m >= 1");
  }
  require_finite(a_, "A");
  require_finite(b_, "B");
}

CostWeights::CostWeights(Matrix q, Matrix r)
    : q_(checked_spd(std::move(q), "Q")), r_(checked_spd(std::move(r), "R")) {}

Controller::Controller(Matrix k) : k_(std::move(k)) {
  if (k_.size() == 0) throw ContractError("gain is empty");
  require_finite(k_, "K");
}

CostValue CostValue::finite(double v) {
  if (!std::isfinite(v)) throw ContractError("finite cost must be finite");
  CostValue c;
  c.value_ = v;
  return c;
}

double CostValue::value() const {
  if (!value_) throw InfeasibleError("cost is infeasible (closed loop unstable)");
  return *value_;
}

double CostValue::value_or_inf() const {
  return value_ ? *value_ : std::numeric_limits<double>::infinity();
}

Matrix closed_loop(const SystemMode& mode, const Controller& k) {
  check_compatible(mode, k);
  return mode.A() + mode.B() * k.K();
}

double spectral_abscissa(const Matrix& m) {
  require_square(m, "matrix");
  Eigen::EigenSolver<Matrix> es(m, false);
  if (es.info() != Eigen::Success) {
    std::ostringstream os;
    os << "eigenvalue iteration did not converge for\n" << m;
    throw NumericalError(os.str());
  }
  return es.eigenvalues().real().maxCoeff();
}

bool is_hurwitz(const Matrix& m) { return spectral_abscissa(m) < -kStabilityMargin; }

bool is_stabilizing(const SystemMode& mode, const Controller& k) {
  return is_hurwitz(closed_loop(mode, k));
}

double lyapunov_residual(const Matrix& m, const Matrix& p, const Matrix& s) {
  return (m.transpose() * p + p * m + s).norm() / (1.0 + s.norm());
}

Matrix solve_lyapunov(const Matrix& m, const Matrix& s) {
  require_square(m, "M");
  if (s.rows() != m.rows() || s.cols() != m.cols()) {
    throw ContractError("S is " + shape(s) + ", M is " + shape(m));
  }
  if (!is_hurwitz(m)) throw InfeasibleError("Lyapunov operator: M is not Hurwitz");

  const Eigen::Index n = m.rows();
  const Matrix op = lyapunov_operator(m);
  const Eigen::PartialPivLU<Matrix> lu(op);
  const Vector rhs = -Eigen::Map<const Vector>(s.data(), n * n);
  Vector x = lu.solve(rhs);
  // One step of iterative refinement recovers the digits lost to pivoting
  // on poorly separated spectra.
  x += lu.solve(rhs - op * x);

  Matrix p = symmetrized(Eigen::Map<const Matrix>(x.data(), n, n));
  const double residual = lyapunov_residual(m, p, s);
  if (!(residual <= 1e-9)) {
    throw NumericalError("Lyapunov solve residual " + std::to_string(residual) +
                         " exceeds 1e-9");
  }
  return p;
}

CostValue cost(const SystemMode& mode, const Controller& k, const CostWeights& w) {
  check_compatible(mode, w);
  const Matrix m = closed_loop(mode, k);
  if (!is_hurwitz(m)) return CostValue::infeasible();
  const Matrix s = w.Q() + k.K().transpose() * w.R() * k.K();
  return CostValue::finite(solve_lyapunov(m, s).trace());
}

CostAndGradient cost_and_gradient(const SystemMode& mode, const Controller& k,
                                  const CostWeights& w) {
  check_compatible(mode, w);
  const Matrix m = closed_loop(mode, k);
  if (!is_hurwitz(m)) {
    throw InfeasibleError("cost gradient requested at a non-stabilizing gain");
  }
  const Matrix& kk = k.K();
  const Matrix p = solve_lyapunov(m, w.Q() + kk.transpose() * w.R() * kk);
  const Eigen::Index n = mode.state_dim();
  // State covariance accumulated from the canonical initial states.
  const Matrix x = solve_lyapunov(m.transpose(), Matrix::Identity(n, n));
  return {p.trace(), 2.0 * (w.R() * kk + mode.B().transpose() * p) * x};
}

Matrix cost_gradient(const SystemMode& mode, const Controller& k,
                     const CostWeights& w) {
  return cost_and_gradient(mode, k, w).gradient;
}

double care_residual(const SystemMode& mode, const CostWeights& w, const Matrix& p) {
  const Matrix& a = mode.A();
  const Matrix& b = mode.B();
  const Matrix res = a.transpose() * p + p * a -
                     p * b * w.R().llt().solve(b.transpose()) * p + w.Q();
  return res.norm() / (1.0 + w.Q().norm());
}

CareSolution solve_care(const SystemMode& mode, const CostWeights& w) {
  check_compatible(mode, w);
  const Eigen::Index n = mode.state_dim();
  const Matrix& a = mode.A();
  const Matrix& b = mode.B();
  const Eigen::LLT<Matrix> r_llt(w.R());
  const Matrix g = b * r_llt.solve(b.transpose());

  // Stable invariant subspace of the Hamiltonian through its matrix sign
  // function, with determinant scaling.
  Matrix h(2 * n, 2 * n);
  h << a, -g, -w.Q(), -a.transpose();
  Matrix z = h;
  bool converged = false;
  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::PartialPivLU<Matrix> lu(z);
    const Vector diag = lu.matrixLU().diagonal().cwiseAbs();
    if (diag.minCoeff() == 0.0 || !diag.allFinite()) {
      throw InfeasibleError(
          "Riccati: Hamiltonian has an eigenvalue on the imaginary axis "
          "(pair not stabilizable or not detectable)");
    }
    const double log_det = diag.array().log().sum();
    const double scale = std::exp(-log_det / static_cast<double>(2 * n));
    const Matrix next = 0.5 * (scale * z + lu.inverse() / scale);
    const double change = (next - z).lpNorm<1>();
    z = next;
    if (change <= 1e-12 * z.lpNorm<1>()) {
      converged = true;
      break;
    }
  }
  if (!converged || !z.allFinite()) {
    throw InfeasibleError("Riccati: sign iteration did not converge");
  }

  Matrix lhs(2 * n, n);
  lhs << z.topRightCorner(n, n), z.bottomRightCorner(n, n) + Matrix::Identity(n, n);
  Matrix rhs(2 * n, n);
  rhs << z.topLeftCorner(n, n) + Matrix::Identity(n, n), z.bottomLeftCorner(n, n);
  Matrix p = symmetrized(lhs.colPivHouseholderQr().solve(-rhs));
  if (!p.allFinite()) throw InfeasibleError("Riccati: invariant subspace is singular");

  // Newton-Kleinman polishing.
  double residual = care_residual(mode, w, p);
  for (int iter = 0; iter < 20 && residual > 1e-14; ++iter) {
    const Matrix k = -r_llt.solve(b.transpose() * p);
    const Matrix m = a + b * k;
    if (!is_hurwitz(m)) break;
    Matrix next;
    try {
      next = solve_lyapunov(m, w.Q() + k.transpose() * w.R() * k);
    } catch (const NumericalError&) {
      break;
    }
    const double next_residual = care_residual(mode, w, next);
    if (!(next_residual < residual)) break;
    p = std::move(next);
    residual = next_residual;
  }

  Controller k_star(-r_llt.solve(b.transpose() * p));
  if (!is_stabilizing(mode, k_star)) {
    throw InfeasibleError("Riccati: no stabilizing solution found");
  }
  if (!(residual <= 1e-8)) {
    throw NumericalError("Riccati residual " + std::to_string(residual) +
                         " exceeds 1e-8");
  }
  return {std::move(p), std::move(k_star)};
}

double simulate_cost_oracle(const SystemMode& mode, const Controller& k,
                            const CostWeights& w, double t_f, double dt) {
  check_compatible(mode, w);
  if (!(t_f > 0.0) || !(dt > 0.0)) throw ContractError("t_f and dt must be positive");
  const Matrix m = closed_loop(mode, k);
  if (!is_hurwitz(m)) throw InfeasibleError("simulation requested for an unstable closed loop");

  const Eigen::Index n = m.rows();
  const Matrix s = w.Q() + k.K().transpose() * w.R() * k.K();
  const Matrix eye = Matrix::Identity(n, n);
  const double h = dt;

  // For the linear state equation the RK4 stage states are fixed linear
  // maps of the step's initial state, so the stage maps and the quadrature
  // weight of the running-cost component can be formed once.
  const Matrix m2 = m * m;
  const Matrix m3 = m2 * m;
  const Matrix t2 = eye + 0.5 * h * m;
  const Matrix t3 = eye + 0.5 * h * m + 0.25 * h * h * m2;
  const Matrix t4 = eye + h * m + 0.5 * h * h * m2 + 0.25 * h * h * h * m3;
  const Matrix step = eye + h * m + (h * h / 2.0) * m2 + (h * h * h / 6.0) * m3 +
                      (h * h * h * h / 24.0) * (m2 * m2);
  const Matrix weight = (h / 6.0) * (s + 2.0 * t2.transpose() * s * t2 +
                                     2.0 * t3.transpose() * s * t3 +
                                     t4.transpose() * s * t4);

  const auto steps = static_cast<long long>(std::llround(t_f / dt));
  Matrix z = eye;  // column j is the trajectory from the j-th basis state
  Matrix scratch(n, n);
  double total = 0.0;
  for (long long i = 0; i < steps; ++i) {
    scratch.noalias() = weight * z;
    total += z.cwiseProduct(scratch).sum();
    scratch.noalias() = step * z;
    z.swap(scratch);
  }
  return total;
}

}  // namespace ofu

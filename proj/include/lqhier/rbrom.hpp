#ifndef LQHIER_RBROM_HPP
#define LQHIER_RBROM_HPP

#include "lqhier/estimator.hpp"

namespace lqhier {

// Reduced basis of raw (non-orthonormalized) final-time-adjoint snapshots.
// Alongside the snapshots an orthonormal factorization Phi = Q R is grown
// incrementally (classical Gram-Schmidt with one reorthogonalization, positive
// diagonal); it backs the dependence test on extension and provides the
// well-conditioned coefficient frame used by the coefficient surrogates.
struct ReducedBasis {
  std::vector<Vector> vectors;
  std::vector<Parameter> provenance;
  Matrix Q;  // n x N, orthonormal columns spanning the snapshots
  Matrix R;  // N x N upper-triangular, Phi = Q R

  int size() const { return static_cast<int>(vectors.size()); }
  Eigen::Index dim() const { return vectors.empty() ? 0 : vectors.front().size(); }

  // Phi * alpha
  Vector expand(const Vector& alpha) const {
    if (alpha.size() != size()) throw std::invalid_argument("coefficient length != basis size");
    Vector out = Vector::Zero(dim());
    for (int i = 0; i < size(); ++i) out += alpha[i] * vectors[i];
    return out;
  }
};

enum class ExtendOutcome { appended, rejected_dependent, rejected_zero };

// Appends the snapshot raw unless it is numerically dependent on the current
// span (projection residual <= 1e-10 * ||snapshot||) or zero; rejections leave
// the basis unchanged.
inline ExtendOutcome extend_basis(ReducedBasis& basis, const Vector& snapshot,
                                  const Parameter& source_parameter) {
  const double norm = snapshot.norm();
  if (norm == 0.0) return ExtendOutcome::rejected_zero;
  const int N = basis.size();
  Vector coeffs = Vector::Zero(N);
  Vector residual = snapshot;
  if (N > 0) {
    coeffs = basis.Q.transpose() * snapshot;
    residual -= basis.Q * coeffs;
    const Vector correction = basis.Q.transpose() * residual;  // reorthogonalize once
    residual -= basis.Q * correction;
    coeffs += correction;
  }
  const double rho = residual.norm();
  if (rho <= 1e-10 * norm) return ExtendOutcome::rejected_dependent;

  basis.vectors.push_back(snapshot);
  basis.provenance.push_back(source_parameter);
  Matrix Q(snapshot.size(), N + 1);
  Matrix R = Matrix::Zero(N + 1, N + 1);
  if (N > 0) {
    Q.leftCols(N) = basis.Q;
    R.topLeftCorner(N, N) = basis.R;
    R.block(0, N, N, 1) = coeffs;
  }
  Q.col(N) = residual / rho;
  R(N, N) = rho;
  basis.Q = std::move(Q);
  basis.R = std::move(R);
  return ExtendOutcome::appended;
}

struct RBSolution {
  Vector coefficients;
  Vector final_adjoint;  // Phi * coefficients
  ControlTrajectory control;
  StateTrajectory state;
  std::optional<double> residual_norm;  // || rhs - X alpha ||, set by solve_rb
  double cost = 0.0;
  long operator_applications = 0;
};

namespace detail {

struct RBCoefficients {
  Vector alpha;
  double residual_norm = 0.0;
};

// Normal-equation least squares over the snapshot span: N operator
// applications assemble X (columns (I + M Lambda) phi_i), then
// X'X alpha = X' rhs is solved directly (LDLT plus one refinement step, with
// a tiny Tikhonov fallback when the factorization fails).  The reported
// residual || rhs - X alpha || equals the error estimator at Phi alpha by
// linearity of the system operator.
inline RBCoefficients solve_rb_coefficients(const OCProblem& problem, const ReducedBasis& basis) {
  const Vector& rhs = assemble_rhs(problem);
  const int N = basis.size();
  if (N == 0) return {Vector(0), rhs.norm()};

  Matrix X(problem.n(), N);
  for (int i = 0; i < N; ++i) X.col(i) = apply_system_operator(problem, basis.vectors[i]);
  const Matrix G = X.transpose() * X;
  const Vector b = X.transpose() * rhs;

  Eigen::LDLT<Matrix> ldlt(G);
  Vector alpha;
  if (ldlt.info() == Eigen::Success) {
    alpha = ldlt.solve(b);
    alpha += ldlt.solve(b - G * alpha);  // one refinement step
  }
  if (ldlt.info() != Eigen::Success || !alpha.allFinite()) {
    Matrix Greg = G;
    Greg.diagonal().array() += 1e-12 * G.trace() / N;
    Eigen::LDLT<Matrix> fallback(Greg);
    if (fallback.info() != Eigen::Success)
      throw std::runtime_error("reduced Gram matrix is numerically singular despite regularization");
    alpha = fallback.solve(b);
    if (!alpha.allFinite())
      throw std::runtime_error("reduced Gram matrix is numerically singular despite regularization");
  }
  const double residual_norm = (rhs - X * alpha).norm();
  return {std::move(alpha), residual_norm};
}

}  // namespace detail

// Full reduced-basis solve: coefficients plus recovered adjoint/control/state
// trajectories (N operator applications + one trajectory recovery).  An empty
// basis yields the zero solution with free dynamics.
inline RBSolution solve_rb(const OCProblem& problem, const ReducedBasis& basis) {
  RBSolution solution;
  auto coeffs = detail::solve_rb_coefficients(problem, basis);
  solution.coefficients = std::move(coeffs.alpha);
  solution.residual_norm = coeffs.residual_norm;
  solution.final_adjoint =
      basis.size() > 0 ? basis.expand(solution.coefficients) : Vector::Zero(problem.n());
  const StateTrajectory adjoint = propagate_adjoint(problem, solution.final_adjoint);
  solution.control = control_from_adjoint(problem, adjoint);
  solution.state = propagate_forward(problem, problem.x0(), solution.control);
  solution.cost = evaluate_cost(problem, solution.control, solution.state.back());
  solution.operator_applications = basis.size() + 1;
  return solution;
}

}  // namespace lqhier

#endif

#ifndef LQHIER_ESTIMATOR_HPP
#define LQHIER_ESTIMATOR_HPP

#include <random>

#include "lqhier/fom.hpp"

namespace lqhier {

struct ErrorEstimate {
  double eta = 0.0;
  int gramian_applications = 1;
};

// Residual norm of the final-time-adjoint linear system at the candidate p:
//   eta(p) = || rhs - (I + M Lambda) p ||_2.
// The rhs is cached per problem instance, so the marginal cost is one adjoint
// solve, one control recovery, and one forward solve.
inline ErrorEstimate estimate_error(const OCProblem& problem, const Vector& p) {
  const Vector& rhs = assemble_rhs(problem);
  return {(rhs - apply_system_operator(problem, p)).norm(), 1};
}

namespace detail {

// Candidate evaluation for the model hierarchy: one Gramian sweep yields the
// residual norm together with the optimal-control samples and final state
// belonging to p, so a certified result needs no second pass.
struct CandidateEvaluation {
  double eta = 0.0;
  Matrix controls;      // m x (K+1)
  Vector final_state;   // x(T) under those controls
};

inline CandidateEvaluation evaluate_candidate(const OCProblem& problem, const Vector& p) {
  CandidateEvaluation ev;
  const Vector& rhs = assemble_rhs(problem);
  Vector gramian_p = apply_gramian_full(problem, p, &ev.controls, &ev.final_state);
  ev.final_state += flow_map(problem, problem.x0());  // x(T) = flow - Lambda p
  ev.eta = (rhs - p - problem.M().apply(gramian_p)).norm();
  return ev;
}

}  // namespace detail

// Power-iteration estimate of ||I + M Lambda||_2.  For non-identity M the
// symmetrized operator is used (two Gramian applications per step).  The
// start vector comes from a fixed internal seed, so the result is
// deterministic for a given problem and iteration count.
inline double operator_norm_estimate(const OCProblem& problem, int iterations) {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  std::mt19937 gen(987654321u);
  Vector v(problem.n());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = 0.5 + static_cast<double>(gen()) / 4294967296.0;  // deterministic in [0.5, 1.5)
  v.normalize();

  if (problem.M().is_zero()) return 1.0;  // operator reduces to the identity

  if (problem.M().is_identity()) {
    // Symmetric positive-definite path: Rayleigh quotient of I + Lambda.
    double lambda = 1.0;
    for (int it = 0; it < iterations; ++it) {
      Vector w = apply_system_operator(problem, v);
      lambda = v.dot(w);
      w.normalize();
      v = w;
    }
    return lambda;
  }

  // General path: largest eigenvalue of Op' Op via v + Lambda M v as Op'.
  double lambda2 = 1.0;
  for (int it = 0; it < iterations; ++it) {
    Vector t = apply_system_operator(problem, v);
    Vector w = t + apply_gramian(problem, problem.M().apply(t));
    lambda2 = v.dot(w);
    w.normalize();
    v = w;
  }
  return std::sqrt(std::max(lambda2, 0.0));
}

}  // namespace lqhier

#endif

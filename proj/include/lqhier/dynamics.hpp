#ifndef LQHIER_DYNAMICS_HPP
#define LQHIER_DYNAMICS_HPP

#include "lqhier/problem.hpp"

namespace lqhier {

// Crank-Nicolson solution of x' = Ax + Bu from x_init, controls sampled at
// the grid nodes and averaged per step:
//   (I - c A) x_{k+1} = (I + c A) x_k + c B (u_k + u_{k+1}),  c = dt/2.
inline StateTrajectory propagate_forward(const OCProblem& problem, const Vector& x_init,
                                         const ControlTrajectory& control) {
  const int K = problem.grid().steps;
  if (control.nodes() != K + 1)
    throw std::invalid_argument("control must have one sample per time node");
  const double c = 0.5 * problem.grid().dt();
  StateTrajectory traj;
  traj.samples.reserve(K + 1);
  traj.samples.push_back(x_init);
  Vector x = x_init, y;
  for (int k = 0; k < K; ++k) {
    problem.forward_stepper().apply_plus(x, y);
    y.noalias() += c * (problem.B() * (control.samples[k] + control.samples[k + 1]));
    problem.forward_stepper().solve_in_place(y);
    x = y;
    traj.samples.push_back(x);
  }
  return traj;
}

// Backward Crank-Nicolson solution of -phi' = A' phi with phi(T) = terminal;
// the discrete backward propagator is exactly the transpose of the forward
// homogeneous one.
inline StateTrajectory propagate_adjoint(const OCProblem& problem, const Vector& terminal) {
  const int K = problem.grid().steps;
  StateTrajectory traj;
  traj.samples.assign(K + 1, Vector());
  traj.samples[K] = terminal;
  Vector phi = terminal, y;
  for (int k = K - 1; k >= 0; --k) {
    problem.adjoint_stepper().apply_plus(phi, y);
    problem.adjoint_stepper().solve_in_place(y);
    phi = y;
    traj.samples[k] = phi;
  }
  return traj;
}

// u_k = -R^{-1} B' phi_k at every node.
inline ControlTrajectory control_from_adjoint(const OCProblem& problem,
                                              const StateTrajectory& adjoint) {
  ControlTrajectory control;
  control.samples.reserve(adjoint.nodes());
  for (const Vector& phi : adjoint.samples) control.samples.push_back(-problem.solve_R_Bt(phi));
  return control;
}

namespace detail {

// Backward adjoint pass from the terminal value, emitting only the optimal
// control samples u_k = -R^{-1} B' phi_k (columns of an m x (K+1) matrix).
// Keeps O(n + K m) memory instead of an n x (K+1) trajectory.
inline Matrix adjoint_pass_controls(const OCProblem& problem, const Vector& terminal) {
  const int K = problem.grid().steps;
  Matrix controls(problem.m(), K + 1);
  Vector phi = terminal, y;
  controls.col(K) = -problem.solve_R_Bt(phi);
  for (int k = K - 1; k >= 0; --k) {
    problem.adjoint_stepper().apply_plus(phi, y);
    problem.adjoint_stepper().solve_in_place(y);
    phi = y;
    controls.col(k) = -problem.solve_R_Bt(phi);
  }
  return controls;
}

// Forward pass from x_init under the given control columns; returns x(T) only.
inline Vector forward_pass_final(const OCProblem& problem, const Vector& x_init,
                                 const Matrix& controls) {
  const int K = problem.grid().steps;
  const double c = 0.5 * problem.grid().dt();
  Vector x = x_init, y;
  for (int k = 0; k < K; ++k) {
    problem.forward_stepper().apply_plus(x, y);
    y.noalias() += c * (problem.B() * (controls.col(k) + controls.col(k + 1)));
    problem.forward_stepper().solve_in_place(y);
    x.swap(y);
  }
  return x;
}

// Gramian application that also exposes its by-products: the control samples
// of the underlying adjoint solve and the controlled final state.  One
// backward and one forward sweep in total.
inline Vector apply_gramian_full(const OCProblem& problem, const Vector& p, Matrix* controls_out,
                                 Vector* final_state_out) {
  ++problem.gramian_count;
  Matrix controls = adjoint_pass_controls(problem, p);
  Vector xT = forward_pass_final(problem, Vector::Zero(problem.n()), controls);
  if (controls_out) *controls_out = std::move(controls);
  if (final_state_out) *final_state_out = xT;
  return -xT;
}

}  // namespace detail

// Weighted controllability Gramian applied matrix-free: Lambda p = -x(T)
// where phi solves the adjoint system from p, u = -R^{-1} B' phi, and x runs
// forward from zero under u.  No n x n matrix is ever materialized.
inline Vector apply_gramian(const OCProblem& problem, const Vector& p) {
  return detail::apply_gramian_full(problem, p, nullptr, nullptr);
}

// Final state of the uncontrolled dynamics (discrete e^{AT} x_init); cached
// on the problem instance for x_init = x0.
inline Vector flow_map(const OCProblem& problem, const Vector& x_init) {
  const bool is_x0 = x_init.size() == problem.x0().size() && x_init == problem.x0();
  if (is_x0 && problem.flow_cache) return *problem.flow_cache;
  const int K = problem.grid().steps;
  Vector x = x_init, y;
  for (int k = 0; k < K; ++k) {
    problem.forward_stepper().apply_plus(x, y);
    problem.forward_stepper().solve_in_place(y);
    x.swap(y);
  }
  if (is_x0) problem.flow_cache = x;
  return x;
}

// J(u) = 1/2 (x(T)-xT)' M (x(T)-xT) + 1/2 trapezoid(u' R u).
inline double evaluate_cost(const OCProblem& problem, const ControlTrajectory& control,
                            const Vector& final_state) {
  const int K = problem.grid().steps;
  if (control.nodes() != K + 1)
    throw std::invalid_argument("control must have one sample per time node");
  const Vector diff = final_state - problem.xT();
  double terminal = diff.dot(problem.M().apply(diff));
  double quad = 0.0;
  for (int k = 0; k <= K; ++k) {
    const Vector& u = control.samples[k];
    const double w = (k == 0 || k == K) ? 0.5 : 1.0;
    quad += w * u.dot(problem.R() * u);
  }
  return 0.5 * (terminal + quad * problem.grid().dt());
}

}  // namespace lqhier

#endif

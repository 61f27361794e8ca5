#include <catch2/catch_amalgamated.hpp>

#include "lqhier/dynamics.hpp"
#include "lqhier/validation.hpp"

using namespace lqhier;

namespace {

ControlTrajectory constant_control(int nodes, const Vector& value) {
  ControlTrajectory u;
  u.samples.assign(nodes, value);
  return u;
}

}  // namespace

TEST_CASE("one implicit step matches the hand value", "[dynamics]") {
  // x' = -x, dt = 1, u = 0: (1 - c a) x1 = (1 + c a) x0 with c = 1/2, so
  // x1 = (1/2)/(3/2) = x0/3.
  auto problem = build_scalar_problem(-1.0, 1.0, 1.0, 1.0, 1.0, 0.0, TimeGrid{1.0, 1});
  auto traj = propagate_forward(problem, problem.x0(), constant_control(2, Vector::Zero(1)));
  REQUIRE(traj.nodes() == 2);
  CHECK(traj.back()[0] == Catch::Approx(1.0 / 3.0).margin(1e-15));
}

TEST_CASE("uncontrolled flow approaches the matrix exponential", "[dynamics]") {
  auto problem = build_scalar_problem(-1.0, 1.0, 1.0, 1.0, 1.0, 0.0, TimeGrid{1.0, 400});
  const Vector flow = flow_map(problem, problem.x0());
  CHECK(std::abs(flow[0] - std::exp(-1.0)) < 1e-6);

  // The x0 result is cached on the problem instance and must be bit-identical.
  const Vector again = flow_map(problem, problem.x0());
  CHECK(again[0] == flow[0]);
}

TEST_CASE("the integrator Gramian is exact at any step count", "[dynamics]") {
  // a = 0, b = 1, r = 1, T = 1: the trapezoid rule integrates the constant
  // integrand exactly, so Lambda = 1 independently of K.
  for (int K : {1, 7, 64}) {
    auto problem = build_scalar_problem(0.0, 1.0, 1.0, 1.0, 1.0, 0.0, TimeGrid{1.0, K});
    Vector p(1);
    p << 1.0;
    const Vector lp = apply_gramian(problem, p);
    CHECK(lp[0] == Catch::Approx(1.0).margin(1e-13));
  }
}

TEST_CASE("adjoint propagation transposes the forward propagator", "[dynamics]") {
  Matrix A, B;
  random_stable_system(4, 2, 11u, A, B);
  auto problem = detail::dense_test_problem(A, B, 1.0, 0.8, 37, 19u);

  std::mt19937 gen(5u);
  std::normal_distribution<double> dist;
  for (int trial = 0; trial < 5; ++trial) {
    Vector x(4), p(4);
    for (int i = 0; i < 4; ++i) {
      x[i] = dist(gen);
      p[i] = dist(gen);
    }
    const double forward_side = flow_map(problem, x).dot(p);
    const double adjoint_side = x.dot(propagate_adjoint(problem, p).front());
    CHECK(forward_side == Catch::Approx(adjoint_side).margin(1e-12));
  }
}

TEST_CASE("control recovery applies the weighted adjoint map", "[dynamics]") {
  Matrix A, B;
  random_stable_system(3, 2, 29u, A, B);
  Matrix R(2, 2);
  R << 2.0, 0.5, 0.5, 1.0;
  SparseMatrix As = A.sparseView();
  As.makeCompressed();
  auto problem = OCProblem(As, B, WeightM::Identity(), R, Vector::Zero(3), Vector::Zero(3),
                           TimeGrid{0.5, 8});

  Vector terminal(3);
  terminal << 1.0, -2.0, 0.5;
  const StateTrajectory adjoint = propagate_adjoint(problem, terminal);
  const ControlTrajectory control = control_from_adjoint(problem, adjoint);
  REQUIRE(control.nodes() == adjoint.nodes());
  const Matrix Rinv = R.inverse();
  for (int k = 0; k < control.nodes(); ++k) {
    const Vector expected = -Rinv * B.transpose() * adjoint.samples[k];
    CHECK((control.samples[k] - expected).norm() < 1e-12);
  }
}

TEST_CASE("backward-only control emission matches the trajectory route", "[dynamics]") {
  Matrix A, B;
  random_stable_system(4, 2, 3u, A, B);
  auto problem = detail::dense_test_problem(A, B, 0.7, 0.6, 23, 31u);
  Vector terminal(4);
  terminal << 0.3, -1.0, 2.0, 0.1;

  const Matrix columns = detail::adjoint_pass_controls(problem, terminal);
  const ControlTrajectory via_traj =
      control_from_adjoint(problem, propagate_adjoint(problem, terminal));
  REQUIRE(columns.cols() == via_traj.nodes());
  for (int k = 0; k < via_traj.nodes(); ++k)
    CHECK((columns.col(k) - via_traj.samples[k]).norm() < 1e-13);
}

TEST_CASE("cost is terminal misfit plus the control energy trapezoid", "[dynamics]") {
  // b = 0 keeps the state at x0 (a = 0), so the terminal term is exact and a
  // constant control makes the trapezoid rule exact as well:
  // J = 1/2 m (x0 - xT)^2 + 1/2 r c^2 T.
  auto problem = build_scalar_problem(0.0, 0.0, 1.0, 2.0, 1.0, 0.0, TimeGrid{1.0, 10});
  Vector c(1);
  c << 3.0;
  const ControlTrajectory u = constant_control(11, c);
  const StateTrajectory traj = propagate_forward(problem, problem.x0(), u);
  CHECK(traj.back()[0] == Catch::Approx(1.0).margin(1e-14));
  const double cost = evaluate_cost(problem, u, traj.back());
  CHECK(cost == Catch::Approx(0.5 * 1.0 + 0.5 * 2.0 * 9.0).margin(1e-12));
}

TEST_CASE("gramian applications are counted on the problem instance", "[dynamics]") {
  auto problem = build_scalar_problem(0.0, 1.0, 1.0, 1.0, 1.0, 0.0, TimeGrid{1.0, 4});
  Vector p(1);
  p << 1.0;
  CHECK(problem.gramian_count == 0);
  apply_gramian(problem, p);
  apply_gramian(problem, p);
  CHECK(problem.gramian_count == 2);
  flow_map(problem, problem.x0());  // flow alone is not a Gramian application
  CHECK(problem.gramian_count == 2);
}

TEST_CASE("problem construction rejects inconsistent data", "[dynamics]") {
  SparseMatrix A(2, 2);
  A.setIdentity();
  const Vector z = Vector::Zero(2);
  const TimeGrid grid{1.0, 4};

  CHECK_THROWS_AS(OCProblem(A, Matrix::Zero(3, 1), WeightM::Identity(), Matrix::Identity(1, 1), z,
                            z, grid),
                  std::invalid_argument);

  Matrix bad_R(1, 1);
  bad_R << -1.0;  // not positive definite
  CHECK_THROWS_AS(OCProblem(A, Matrix::Zero(2, 1), WeightM::Identity(), bad_R, z, z, grid),
                  std::invalid_argument);

  Matrix asym(2, 2);
  asym << 1.0, 0.3, 0.0, 1.0;
  CHECK_THROWS_AS(OCProblem(A, Matrix::Zero(2, 2), WeightM::Identity(), asym, z, z, grid),
                  std::invalid_argument);

  CHECK_THROWS_AS(OCProblem(A, Matrix::Zero(2, 1), WeightM::Identity(), Matrix::Identity(1, 1), z,
                            z, TimeGrid{1.0, 0}),
                  std::invalid_argument);
}

TEST_CASE("control length is validated against the time grid", "[dynamics]") {
  auto problem = build_scalar_problem(0.0, 1.0, 1.0, 1.0, 1.0, 0.0, TimeGrid{1.0, 4});
  CHECK_THROWS_AS(propagate_forward(problem, problem.x0(), constant_control(3, Vector::Zero(1))),
                  std::invalid_argument);
  CHECK_THROWS_AS(evaluate_cost(problem, constant_control(3, Vector::Zero(1)), problem.x0()),
                  std::invalid_argument);
}

#ifndef LQHIER_PROBLEM_HPP
#define LQHIER_PROBLEM_HPP

#include <Eigen/SparseLU>
#include <cmath>
#include <memory>
#include <optional>
#include <utility>

#include "lqhier/types.hpp"

namespace lqhier {

namespace detail {

// One orientation of the Crank-Nicolson half-step operators: solves with
// (I - cA) and multiplies by (I + cA), where c = dt/2.  Tridiagonal A gets a
// Thomas factorization; anything else falls back to a sparse LU.
class ImplicitStepper {
 public:
  ImplicitStepper() = default;

  ImplicitStepper(const SparseMatrix& A, double c) : c_(c) {
    if (extract_tridiagonal(A)) {
      tri_ = true;
      if (!factor_thomas())
        throw std::runtime_error("time integration failure: implicit step matrix is singular");
      return;
    }
    A_ = A;
    SparseMatrix N(A.rows(), A.cols());
    N.setIdentity();
    N -= (c * A).pruned();
    lu_ = std::make_shared<Eigen::SparseLU<SparseMatrix>>();
    lu_->compute(N);
    if (lu_->info() != Eigen::Success)
      throw std::runtime_error("time integration failure: implicit step matrix is singular");
  }

  // b := (I - cA)^{-1} b
  void solve_in_place(Vector& b) const {
    if (tri_) {
      const auto n = b.size();
      for (Eigen::Index i = 1; i < n; ++i) b[i] -= w_[i] * b[i - 1];
      b[n - 1] /= dhat_[n - 1];
      for (Eigen::Index i = n - 2; i >= 0; --i) b[i] = (b[i] - nsup_[i] * b[i + 1]) / dhat_[i];
    } else {
      b = lu_->solve(b);
    }
  }

  // y := (I + cA) x
  void apply_plus(const Vector& x, Vector& y) const {
    if (tri_) {
      const auto n = x.size();
      y.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        double v = (1.0 + c_ * diag_[i]) * x[i];
        if (i > 0) v += c_ * sub_[i] * x[i - 1];
        if (i + 1 < n) v += c_ * sup_[i] * x[i + 1];
        y[i] = v;
      }
    } else {
      y = x + c_ * (A_ * x);
    }
  }

 private:
  bool extract_tridiagonal(const SparseMatrix& A) {
    const auto n = A.rows();
    sub_ = Vector::Zero(n);
    diag_ = Vector::Zero(n);
    sup_ = Vector::Zero(n);
    for (int k = 0; k < A.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
        const auto i = it.row(), j = it.col();
        if (i == j)
          diag_[i] = it.value();
        else if (i == j + 1)
          sub_[i] = it.value();
        else if (i + 1 == j)
          sup_[i] = it.value();
        else if (it.value() != 0.0)
          return false;
      }
    return true;
  }

  bool factor_thomas() {
    // LU of N = I - c*tridiag(sub, diag, sup) without pivoting.
    const auto n = diag_.size();
    w_ = Vector::Zero(n);
    dhat_ = Vector::Zero(n);
    nsup_ = Vector::Zero(n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) nsup_[i] = -c_ * sup_[i];
    dhat_[0] = 1.0 - c_ * diag_[0];
    for (Eigen::Index i = 1; i < n; ++i) {
      if (std::abs(dhat_[i - 1]) < 1e-300) return false;
      w_[i] = (-c_ * sub_[i]) / dhat_[i - 1];
      dhat_[i] = 1.0 - c_ * diag_[i] - w_[i] * nsup_[i - 1];
    }
    return std::abs(dhat_[n - 1]) >= 1e-300;
  }

  bool tri_ = false;
  double c_ = 0.0;
  Vector sub_, diag_, sup_;    // bands of A
  Vector w_, dhat_, nsup_;     // Thomas LU of (I - cA)
  SparseMatrix A_;             // general path
  std::shared_ptr<Eigen::SparseLU<SparseMatrix>> lu_;
};

}  // namespace detail

// Terminal-state weight M: symmetric positive-semidefinite, with fast paths
// for the identity and zero cases.
struct WeightM {
  enum class Kind { identity, zero, dense };

  Kind kind = Kind::identity;
  Matrix dense;

  static WeightM Identity() { return {Kind::identity, {}}; }
  static WeightM Zero() { return {Kind::zero, {}}; }
  static WeightM Dense(Matrix m) { return {Kind::dense, std::move(m)}; }

  bool is_identity() const { return kind == Kind::identity; }
  bool is_zero() const { return kind == Kind::zero; }

  Vector apply(const Vector& v) const {
    switch (kind) {
      case Kind::identity: return v;
      case Kind::zero: return Vector::Zero(v.size());
      case Kind::dense: return dense * v;
    }
    return v;
  }
};

// Parametrized linear-quadratic optimal control problem instance:
//   minimize 1/2 (x(T)-xT)' M (x(T)-xT) + 1/2 integral u' R u
//   subject to x' = A x + B u, x(0) = x0,
// discretized by Crank-Nicolson on the given time grid.  Implicit-step and
// R factorizations are computed once at construction and shared by copies.
class OCProblem {
 public:
  OCProblem(SparseMatrix A, Matrix B, WeightM M, Matrix R, Vector x0, Vector xT, TimeGrid grid)
      : A_(std::move(A)),
        B_(std::move(B)),
        M_(std::move(M)),
        R_(std::move(R)),
        x0_(std::move(x0)),
        xT_(std::move(xT)),
        grid_(grid) {
    if (A_.rows() != A_.cols()) throw std::invalid_argument("A must be square");
    const auto n = A_.rows();
    if (B_.rows() != n) throw std::invalid_argument("B row dimension mismatch");
    if (x0_.size() != n || xT_.size() != n) throw std::invalid_argument("state dimension mismatch");
    if (M_.kind == WeightM::Kind::dense) {
      if (M_.dense.rows() != n || M_.dense.cols() != n)
        throw std::invalid_argument("M dimension mismatch");
      if (!M_.dense.isApprox(M_.dense.transpose(), 1e-12))
        throw std::invalid_argument("M must be symmetric");
    }
    const auto m = B_.cols();
    if (R_.rows() != m || R_.cols() != m) throw std::invalid_argument("R dimension mismatch");
    if (!R_.isApprox(R_.transpose(), 1e-12)) throw std::invalid_argument("R must be symmetric");
    rllt_.compute(R_);
    if (rllt_.info() != Eigen::Success)
      throw std::invalid_argument("R must be positive definite");
    if (grid_.horizon <= 0.0 || grid_.steps < 1) throw std::invalid_argument("bad time grid");

    const double c = 0.5 * grid_.dt();
    forward_ = detail::ImplicitStepper(A_, c);
    adjoint_ = detail::ImplicitStepper(SparseMatrix(A_.transpose()), c);
  }

  Eigen::Index n() const { return A_.rows(); }
  Eigen::Index m() const { return B_.cols(); }
  const SparseMatrix& A() const { return A_; }
  const Matrix& B() const { return B_; }
  const WeightM& M() const { return M_; }
  const Matrix& R() const { return R_; }
  const Vector& x0() const { return x0_; }
  const Vector& xT() const { return xT_; }
  const TimeGrid& grid() const { return grid_; }

  const detail::ImplicitStepper& forward_stepper() const { return forward_; }
  const detail::ImplicitStepper& adjoint_stepper() const { return adjoint_; }

  // R^{-1} B' phi   (the optimal control is the negative of this)
  Vector solve_R_Bt(const Vector& phi) const { return rllt_.solve(B_.transpose() * phi); }

  // Per-instance caches for the uncontrolled final state and the linear
  // system right-hand side; filled lazily by flow_map / assemble_rhs.
  mutable std::optional<Vector> flow_cache;
  mutable std::optional<Vector> rhs_cache;

  // Number of Gramian applications performed through this instance; the cost
  // bookkeeping of the model hierarchy reads and accumulates it.
  mutable long gramian_count = 0;

 private:
  SparseMatrix A_;
  Matrix B_;
  WeightM M_;
  Matrix R_;
  Vector x0_;
  Vector xT_;
  TimeGrid grid_;
  Eigen::LLT<Matrix> rllt_;
  detail::ImplicitStepper forward_;
  detail::ImplicitStepper adjoint_;
};

// Scalar (n = m = 1) problem family used by the closed-form oracles and the
// CLI's scalar mode: x' = a x + b u.
inline OCProblem build_scalar_problem(double a, double b, double M, double R, double x0,
                                      double xT, TimeGrid grid) {
  SparseMatrix A(1, 1);
  if (a != 0.0) A.insert(0, 0) = a;
  A.makeCompressed();
  Matrix B(1, 1);
  B << b;
  WeightM w = M == 0.0 ? WeightM::Zero()
              : M == 1.0 ? WeightM::Identity()
                         : WeightM::Dense(Matrix::Constant(1, 1, M));
  Matrix r(1, 1);
  r << R;
  Vector v0(1), vT(1);
  v0 << x0;
  vT << xT;
  return OCProblem(std::move(A), std::move(B), std::move(w), std::move(r), std::move(v0),
                   std::move(vT), grid);
}

}  // namespace lqhier

#endif

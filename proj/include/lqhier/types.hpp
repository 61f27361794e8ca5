#ifndef LQHIER_TYPES_HPP
#define LQHIER_TYPES_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <stdexcept>
#include <vector>

namespace lqhier {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

// Problem parameter mu in R^p.
using Parameter = Eigen::VectorXd;

// Compact box bounds for the parameter set; used for membership checks and
// for rescaling parameters into the kernel's unit coordinates.
struct ParameterBox {
  Vector lo;
  Vector hi;

  bool contains(const Parameter& mu, double slack = 1e-12) const {
    if (mu.size() != lo.size()) return false;
    for (Eigen::Index i = 0; i < mu.size(); ++i)
      if (mu[i] < lo[i] - slack || mu[i] > hi[i] + slack) return false;
    return true;
  }

  // Componentwise map onto [0,1]^p; degenerate axes collapse to 0.  An unset
  // box (dimension mismatch) passes coordinates through unchanged.
  Vector rescale(const Parameter& mu) const {
    if (lo.size() != mu.size()) return mu;
    Vector s(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
      const double w = hi[i] - lo[i];
      s[i] = w > 0.0 ? (mu[i] - lo[i]) / w : 0.0;
    }
    return s;
  }
};

// Uniform time grid on [0, T] with K steps (K+1 nodes t_k = k*T/K).
struct TimeGrid {
  double horizon = 1.0;
  int steps = 1;

  double dt() const { return horizon / steps; }
};

// Control samples u_0, ..., u_K, one per time node.
struct ControlTrajectory {
  std::vector<Vector> samples;

  int nodes() const { return static_cast<int>(samples.size()); }
};

// State (or adjoint) samples x_0, ..., x_K, one per time node.
struct StateTrajectory {
  std::vector<Vector> samples;

  int nodes() const { return static_cast<int>(samples.size()); }
  const Vector& front() const { return samples.front(); }
  const Vector& back() const { return samples.back(); }
};

}  // namespace lqhier

#endif

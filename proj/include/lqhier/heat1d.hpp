#ifndef LQHIER_HEAT1D_HPP
#define LQHIER_HEAT1D_HPP

#include <numbers>
#include <random>

#include "lqhier/problem.hpp"

namespace lqhier {

// Boundary-controlled 1D heat equation on (0,1), Dirichlet values acting as
// the two controls, diffusivity mu_1 and target slope mu_2 as parameters:
// second-order finite differences on n interior points eliminate the boundary
// into A = (mu_1/h^2) tridiag(1,-2,1) and B with mu_1/h^2 in the first row of
// column 1 and the last row of column 2, h = 1/(n+1).  Initial temperature
// sin(pi y), target profile mu_2 y, terminal weight M = I, control weight
// R = r I_2.
struct HeatConfig {
  int grid_points = 200;
  int time_steps = 6000;
  double horizon = 0.1;
  double control_weight = 1e-2;
  ParameterBox box{(Vector(2) << 1.0, 0.5).finished(), (Vector(2) << 2.0, 1.5).finished()};
};

inline OCProblem build_heat_problem(const HeatConfig& config, const Parameter& mu) {
  if (mu.size() != 2 || !config.box.contains(mu))
    throw std::invalid_argument("parameter outside the admissible box");
  if (config.grid_points < 1 || config.time_steps < 1 || config.horizon <= 0.0 ||
      config.control_weight <= 0.0)
    throw std::invalid_argument("bad heat problem configuration");

  const int n = config.grid_points;
  const double h = 1.0 / (n + 1);
  const double scale = mu[0] / (h * h);

  SparseMatrix A(n, n);
  A.reserve(Eigen::VectorXi::Constant(n, 3));
  for (int i = 0; i < n; ++i) {
    if (i > 0) A.insert(i, i - 1) = scale;
    A.insert(i, i) = -2.0 * scale;
    if (i + 1 < n) A.insert(i, i + 1) = scale;
  }
  A.makeCompressed();

  Matrix B = Matrix::Zero(n, 2);
  B(0, 0) = scale;
  B(n - 1, 1) = scale;

  Vector x0(n), xT(n);
  for (int i = 0; i < n; ++i) {
    const double y = (i + 1) * h;
    x0[i] = std::sin(std::numbers::pi * y);
    xT[i] = mu[1] * y;
  }

  return OCProblem(std::move(A), std::move(B), WeightM::Identity(),
                   config.control_weight * Matrix::Identity(2, 2), std::move(x0), std::move(xT),
                   TimeGrid{config.horizon, config.time_steps});
}

// Tensor-product parameter grid over the box, endpoints included, visited in
// a seeded random order.  The shuffle draws raw mt19937 words (Fisher-Yates
// with g() mod i), so the order is identical across platforms.
inline std::vector<Parameter> parameter_grid(const ParameterBox& box,
                                             const std::vector<int>& counts,
                                             unsigned int seed) {
  const auto p = box.lo.size();
  if (static_cast<Eigen::Index>(counts.size()) != p)
    throw std::invalid_argument("one count per parameter axis required");
  for (int c : counts)
    if (c < 1) throw std::invalid_argument("axis counts must be positive");

  std::vector<std::vector<double>> axes(counts.size());
  for (size_t a = 0; a < counts.size(); ++a) {
    const int c = counts[a];
    axes[a].resize(c);
    const double step = c > 1 ? (box.hi[a] - box.lo[a]) / (c - 1) : 0.0;
    for (int k = 0; k < c; ++k)
      axes[a][k] = k == c - 1 ? box.hi[a] : box.lo[a] + k * step;
    if (c == 1) axes[a][0] = box.lo[a];
  }

  std::vector<Parameter> grid;
  grid.reserve([&] {
    size_t total = 1;
    for (int c : counts) total *= static_cast<size_t>(c);
    return total;
  }());
  std::vector<int> idx(counts.size(), 0);
  for (;;) {
    Parameter mu(p);
    for (Eigen::Index a = 0; a < p; ++a) mu[a] = axes[a][idx[a]];
    grid.push_back(std::move(mu));
    Eigen::Index a = p - 1;  // last axis fastest (row-major order)
    while (a >= 0 && ++idx[a] == counts[a]) idx[a--] = 0;
    if (a < 0) break;
  }

  std::mt19937 gen(seed);
  for (size_t i = grid.size() - 1; i > 0; --i)
    std::swap(grid[i], grid[gen() % (i + 1)]);
  return grid;
}

}  // namespace lqhier

#endif

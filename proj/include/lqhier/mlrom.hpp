#ifndef LQHIER_MLROM_HPP
#define LQHIER_MLROM_HPP

#include "lqhier/rbrom.hpp"

namespace lqhier {

// Kernel and greedy-training knobs for the coefficient surrogates.  The shape
// applies to parameters rescaled into [0,1]^p by `box`; an unset box leaves
// coordinates untouched.
struct KernelConfig {
  double shape = 1.0;
  int max_centers = 2000;
  double greedy_tolerance = 1e-10;
  double regularization = 0.0;
  ParameterBox box;
};

inline double gaussian_kernel(const Parameter& x, const Parameter& y, double shape) {
  return std::exp(-shape * (x - y).squaredNorm());
}

// Scattered scalar data (mu_j, value_j) for one basis coefficient.  Adding a
// sample at an already-present parameter replaces the old value, so the set
// never carries duplicates and never pads.
struct CoefficientTrainingSet {
  std::vector<Parameter> parameters;
  std::vector<double> values;

  int size() const { return static_cast<int>(parameters.size()); }

  void add_sample(const Parameter& mu, double value) {
    for (int j = 0; j < size(); ++j)
      if (parameters[j].size() == mu.size() && parameters[j] == mu) {
        values[j] = value;
        return;
      }
    parameters.push_back(mu);
    values.push_back(value);
  }
};

// Kernel expansion for one coefficient: value(mu) = sum_j w_j k(mu, c_j) in
// rescaled coordinates.  A surrogate trained on no data (or on data the
// greedy already fits with zero centers) predicts identically zero.
struct CoefficientSurrogate {
  std::vector<Parameter> centers;  // original (unscaled) coordinates
  Vector weights;
  double shape = 1.0;
  ParameterBox box;
  int trained_on = 0;      // training-set size this surrogate was fit to
  int skipped_points = 0;  // points barred from selection by the power floor

  bool is_zero() const { return centers.empty(); }

  double predict(const Parameter& mu) const {
    if (is_zero()) return 0.0;
    const Vector s = box.rescale(mu);
    double out = 0.0;
    for (size_t j = 0; j < centers.size(); ++j)
      out += weights[j] * gaussian_kernel(s, box.rescale(centers[j]), shape);
    return out;
  }
};

// f-greedy vectorial kernel orthogonal greedy algorithm, scalar targets:
// centers are picked by largest current residual (ties to the lowest index)
// among points whose power-function value stays above a small floor, the
// interpolant grows in the Newton basis, and the final kernel weights come
// from the triangular Newton-to-kernel change of basis.  With zero
// regularization the result interpolates its centers.
inline CoefficientSurrogate train_vkoga(const CoefficientTrainingSet& data,
                                        const KernelConfig& config) {
  CoefficientSurrogate surrogate;
  surrogate.shape = config.shape;
  surrogate.box = config.box;
  surrogate.trained_on = data.size();
  const int n = data.size();
  if (n == 0) return surrogate;

  std::vector<Parameter> scaled(n);
  for (int j = 0; j < n; ++j) scaled[j] = config.box.rescale(data.parameters[j]);

  Matrix K(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) K(i, j) = K(j, i);
    K(i, i) = 1.0 + config.regularization;
    for (int j = i + 1; j < n; ++j) K(i, j) = gaussian_kernel(scaled[i], scaled[j], config.shape);
  }

  // The power values of exhausted points are computed by repeated rank-one
  // downdates, so below ~1e-12 they are cancellation noise rather than small
  // positive numbers.  Points there must not be selectable: dividing the
  // Newton column by the square root of noise makes the kernel weights blow
  // up by orders of magnitude and ruins prediction away from the centers.
  constexpr double kPowerFloor = 1e-12;
  const int cap = std::min(n, std::max(config.max_centers, 0));
  Vector residual = Eigen::Map<const Vector>(data.values.data(), n);
  Vector power = K.diagonal();
  Matrix newton(n, cap);        // Newton basis columns evaluated at all points
  Vector newton_coeffs(cap);
  std::vector<int> selected;
  selected.reserve(cap);

  while (static_cast<int>(selected.size()) < cap) {
    int pick = -1;
    double best = config.greedy_tolerance;
    for (int j = 0; j < n; ++j)
      if (power[j] > kPowerFloor && std::abs(residual[j]) > best) {
        best = std::abs(residual[j]);
        pick = j;
      }
    if (pick < 0) break;  // converged, or nothing eligible remains

    const int k = static_cast<int>(selected.size());
    const double p = std::sqrt(power[pick]);
    Vector v = K.col(pick);
    if (k > 0) v.noalias() -= newton.leftCols(k) * newton.leftCols(k).row(pick).transpose();
    v /= p;
    const double c = residual[pick] / p;
    residual.noalias() -= c * v;
    power -= v.cwiseProduct(v);
    newton.col(k) = v;
    newton_coeffs[k] = c;
    selected.push_back(pick);
  }

  const int nc = static_cast<int>(selected.size());
  for (int j = 0; j < n; ++j)
    if (power[j] <= kPowerFloor) ++surrogate.skipped_points;
  // Selected points exhaust their own power; don't count them as skipped.
  surrogate.skipped_points = std::max(0, surrogate.skipped_points - nc);

  if (nc == 0) return surrogate;
  // Kernel weights: K_cc w = f_c with K_cc = L L', L(i,k) = N_k(x_{s_i}), and
  // f_c = L c in exact arithmetic, so L' w = c.
  Matrix L(nc, nc);
  for (int i = 0; i < nc; ++i)
    for (int k = 0; k < nc; ++k) L(i, k) = k <= i ? newton(selected[i], k) : 0.0;
  surrogate.weights =
      L.transpose().triangularView<Eigen::Upper>().solve(newton_coeffs.head(nc));
  surrogate.centers.resize(nc);
  for (int i = 0; i < nc; ++i) surrogate.centers[i] = data.parameters[selected[i]];
  return surrogate;
}

// Componentwise evaluation of a bank of coefficient surrogates.
inline Vector predict(const std::vector<CoefficientSurrogate>& surrogates, const Parameter& mu) {
  Vector out(static_cast<Eigen::Index>(surrogates.size()));
  for (size_t i = 0; i < surrogates.size(); ++i) out[i] = surrogates[i].predict(mu);
  return out;
}

// ML reduced solution: predicted coefficients expand to a final-time adjoint
// over the basis, followed by one trajectory recovery (no linear solve, no
// residual evaluation -- certification is the estimator's job).
inline RBSolution solve_ml(const OCProblem& problem,
                           const ReducedBasis& basis,
                           const std::vector<CoefficientSurrogate>& surrogates,
                           const Parameter& mu) {
  if (static_cast<int>(surrogates.size()) != basis.size())
    throw std::invalid_argument("one surrogate per basis vector required");
  RBSolution solution;
  solution.coefficients = predict(surrogates, mu);
  solution.final_adjoint =
      basis.size() > 0 ? basis.expand(solution.coefficients) : Vector::Zero(problem.n());
  const StateTrajectory adjoint = propagate_adjoint(problem, solution.final_adjoint);
  solution.control = control_from_adjoint(problem, adjoint);
  solution.state = propagate_forward(problem, problem.x0(), solution.control);
  solution.cost = evaluate_cost(problem, solution.control, solution.state.back());
  solution.operator_applications = 1;
  return solution;
}

// Surrogate bank of the hierarchy.  The surrogates are trained on
// orthonormal-frame coefficients beta = R alpha (with Phi = Q R from the
// basis), whose parameter dependence is as smooth as the adjoint manifold
// itself; raw-frame coefficients inherit the snapshot conditioning and are
// far harder to interpolate.  Predictions map back through the triangular
// frame.  An empty frame means the surrogates target raw coefficients.
struct MLModel {
  std::vector<CoefficientSurrogate> surrogates;
  Matrix frame;  // upper-triangular R captured at training time

  bool trained() const { return !surrogates.empty(); }

  Vector predict_coefficients(const Parameter& mu) const {
    Vector beta = predict(surrogates, mu);
    if (frame.size() == 0) return beta;
    return frame.triangularView<Eigen::Upper>().solve(beta);
  }
};

// Per-coefficient training sets in the orthonormal frame: coefficient i gets
// (mu_j, (R alpha_j)_i) for every stored sample.
inline std::vector<CoefficientTrainingSet> build_coefficient_sets(
    const std::vector<Parameter>& parameters, const std::vector<Vector>& alphas,
    const Matrix& frame) {
  const int N = static_cast<int>(frame.rows());
  std::vector<CoefficientTrainingSet> sets(N);
  for (size_t j = 0; j < parameters.size(); ++j) {
    const Vector beta = frame.triangularView<Eigen::Upper>() * alphas[j];
    for (int i = 0; i < N; ++i) sets[i].add_sample(parameters[j], beta[i]);
  }
  return sets;
}

}  // namespace lqhier

#endif

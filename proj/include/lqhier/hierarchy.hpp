#ifndef LQHIER_HIERARCHY_HPP
#define LQHIER_HIERARCHY_HPP

#include <chrono>
#include <functional>

#include "lqhier/mlrom.hpp"

namespace lqhier {

struct HierarchyConfig {
  double tolerance = 1e-4;     // per-query certification target on the adjoint
  int retrain_interval = 5;    // retrain after this many new samples
  double fom_tolerance = 0.0;  // 0 selects min(1e-10, tolerance/100)
  KernelConfig kernel;
  bool harvest_fom_coefficients = false;  // also sample after basis extensions

  double effective_fom_tolerance() const {
    return fom_tolerance > 0.0 ? fom_tolerance : std::min(1e-10, tolerance / 100.0);
  }
};

enum class ModelKind { ml, rb, fom };

inline const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::ml: return "ML";
    case ModelKind::rb: return "RB";
    case ModelKind::fom: return "FOM";
  }
  return "?";
}

// One row of the run log.  eta_ml is always present (the ML stage always
// estimates); eta_rb only when the ML candidate failed certification.  Wall
// times: t_ml_s covers prediction plus its error estimate, t_rb_s the reduced
// solve plus certification and control emission, t_fom_s the full-order solve
// and its recovery, t_train_s basis adaptation plus surrogate training.
struct QueryRecord {
  int index = 0;
  Parameter parameter;
  ModelKind model_used = ModelKind::fom;
  double eta_ml = 0.0;
  std::optional<double> eta_rb;
  int basis_size_after = 0;
  long gramian_applications = 0;
  double t_ml_s = 0.0;
  double t_rb_s = 0.0;
  double t_fom_s = 0.0;
  double t_train_s = 0.0;
};

// A certified coefficient sample (mu, alpha) in the raw basis frame, kept in
// step with the current basis size by the refresh pass on every extension.
struct TrainingSample {
  Parameter parameter;
  Vector alpha;
};

struct HierarchyState {
  ReducedBasis basis;
  MLModel model;
  std::vector<TrainingSample> samples;
  int pending_samples = 0;      // samples added since the last training
  long rejected_snapshots = 0;  // dependent or zero snapshots not appended
  std::vector<QueryRecord> records;
};

struct QueryResult {
  ControlTrajectory control;
  Vector final_adjoint;    // the adjoint candidate that was served
  double certified_error;  // estimator value backing the serve
  QueryRecord record;
};

using ProblemBuilder = std::function<OCProblem(const Parameter&)>;

namespace detail {

inline void add_or_replace_sample(std::vector<TrainingSample>& samples, const Parameter& mu,
                                  Vector alpha) {
  for (auto& s : samples)
    if (s.parameter.size() == mu.size() && s.parameter == mu) {
      s.alpha = std::move(alpha);
      return;
    }
  samples.push_back({mu, std::move(alpha)});
}

inline ControlTrajectory controls_from_columns(const Matrix& columns) {
  ControlTrajectory control;
  control.samples.reserve(columns.cols());
  for (Eigen::Index k = 0; k < columns.cols(); ++k) control.samples.push_back(columns.col(k));
  return control;
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

// Retrains all coefficient surrogates from the stored samples: targets are
// the orthonormal-frame values beta = R alpha, one scalar surrogate per basis
// coefficient, each greedily fit on exactly the data it has (no padding).
inline void retrain(HierarchyState& state, const HierarchyConfig& config) {
  const int N = state.basis.size();
  MLModel model;
  if (N > 0) {
    std::vector<Parameter> parameters;
    std::vector<Vector> alphas;
    parameters.reserve(state.samples.size());
    alphas.reserve(state.samples.size());
    for (const auto& s : state.samples) {
      parameters.push_back(s.parameter);
      alphas.push_back(s.alpha);
    }
    const auto sets = build_coefficient_sets(parameters, alphas, state.basis.R);
    model.surrogates.reserve(N);
    for (const auto& set : sets) model.surrogates.push_back(train_vkoga(set, config.kernel));
    model.frame = state.basis.R;
  }
  state.model = std::move(model);
  state.pending_samples = 0;
}

namespace detail {

// Recomputes every stored sample's coefficients against the current basis.
// Stale coefficients drift by more than the certification slack once the
// basis grows, so neither keeping nor discarding old samples is sound; a
// reduced solve per sample keeps the whole history usable at pure time cost.
inline long refresh_samples(HierarchyState& state, const ProblemBuilder& build) {
  long applications = 0;
  for (auto& sample : state.samples) {
    OCProblem problem = build(sample.parameter);
    sample.alpha = solve_rb_coefficients(problem, state.basis).alpha;
    applications += problem.gramian_count;
  }
  return applications;
}

}  // namespace detail

// Serves one parameter through the hierarchy:
//   1. the surrogate predicts coefficients, expanded and certified by the
//      error estimator (one Gramian application, control comes for free);
//   2. on failure the reduced solve runs, its own least-squares residual is
//      the estimate, a certified result is harvested as training data;
//   3. on failure again the full-order model solves to its tight tolerance,
//      the new final-time adjoint extends the basis (unless dependent), all
//      stored samples are refreshed against the grown basis, and the
//      surrogates retrain.
// Every query appends a QueryRecord; a full-order failure still records the
// partial row before rethrowing.
inline QueryResult query(HierarchyState& state, const ProblemBuilder& build, const Parameter& mu,
                         const HierarchyConfig& config) {
  QueryRecord rec;
  rec.index = static_cast<int>(state.records.size());
  rec.parameter = mu;

  OCProblem problem = build(mu);
  const int K = problem.grid().steps;
  long refresh_applications = 0;

  auto finish = [&](ControlTrajectory control, Vector phi, double eta) {
    rec.basis_size_after = state.basis.size();
    rec.gramian_applications = problem.gramian_count + refresh_applications;
    state.records.push_back(rec);
    return QueryResult{std::move(control), std::move(phi), eta, state.records.back()};
  };

  // --- ML stage: always estimates, serves iff certified ---
  detail::Stopwatch ml_clock;
  Vector phi_ml = Vector::Zero(problem.n());
  if (state.model.trained() && static_cast<int>(state.model.surrogates.size()) == state.basis.size())
    phi_ml = state.basis.expand(state.model.predict_coefficients(mu));

  detail::CandidateEvaluation ml_eval;
  if (phi_ml.isZero(0.0)) {
    // Zero candidate: the residual is ||rhs|| and the trajectory is free.
    ml_eval.eta = assemble_rhs(problem).norm();
    ml_eval.controls = Matrix::Zero(problem.m(), K + 1);
  } else {
    ml_eval = detail::evaluate_candidate(problem, phi_ml);
  }
  rec.eta_ml = ml_eval.eta;
  rec.t_ml_s = ml_clock.seconds();

  if (ml_eval.eta <= config.tolerance) {
    rec.model_used = ModelKind::ml;
    return finish(detail::controls_from_columns(ml_eval.controls), std::move(phi_ml), ml_eval.eta);
  }

  // --- RB stage: solve, certify by the least-squares residual, harvest ---
  detail::Stopwatch rb_clock;
  auto rb = detail::solve_rb_coefficients(problem, state.basis);
  rec.eta_rb = rb.residual_norm;

  if (rb.residual_norm <= config.tolerance) {
    Vector phi_rb =
        state.basis.size() > 0 ? state.basis.expand(rb.alpha) : Vector::Zero(problem.n());
    ControlTrajectory control =
        detail::controls_from_columns(detail::adjoint_pass_controls(problem, phi_rb));
    detail::add_or_replace_sample(state.samples, mu, std::move(rb.alpha));
    ++state.pending_samples;
    rec.t_rb_s = rb_clock.seconds();

    if (state.pending_samples >= config.retrain_interval) {
      detail::Stopwatch train_clock;
      retrain(state, config);
      rec.t_train_s = train_clock.seconds();
    }
    rec.model_used = ModelKind::rb;
    return finish(std::move(control), std::move(phi_rb), rb.residual_norm);
  }
  rec.t_rb_s = rb_clock.seconds();

  // --- FOM stage: solve tight, adapt, refresh, retrain ---
  rec.model_used = ModelKind::fom;
  detail::Stopwatch fom_clock;
  FOMSolution fom;
  try {
    fom = solve_fom(problem, config.effective_fom_tolerance());
  } catch (const FomFailure&) {
    rec.t_fom_s = fom_clock.seconds();
    rec.basis_size_after = state.basis.size();
    rec.gramian_applications = problem.gramian_count;
    state.records.push_back(rec);
    throw;
  }
  rec.t_fom_s = fom_clock.seconds();

  detail::Stopwatch train_clock;
  const ExtendOutcome outcome = extend_basis(state.basis, fom.final_adjoint.value, mu);
  if (outcome == ExtendOutcome::appended) {
    refresh_applications += detail::refresh_samples(state, build);
    if (config.harvest_fom_coefficients) {
      auto harvested = detail::solve_rb_coefficients(problem, state.basis);
      detail::add_or_replace_sample(state.samples, mu, std::move(harvested.alpha));
    }
    retrain(state, config);
  } else {
    // Dependent (or zero) snapshot: serve the solution, change nothing else.
    ++state.rejected_snapshots;
  }
  rec.t_train_s = train_clock.seconds();

  return finish(std::move(fom.control), std::move(fom.final_adjoint.value),
                fom.final_adjoint.residual_norm);
}

// Aggregate counts and wall times across a run.  Estimate counting follows
// the dispatch semantics: the ML stage estimates on every query, the RB stage
// estimates exactly when it solves (its residual is the estimate), the FOM
// never estimates.
struct ModelStats {
  long solves = 0;
  long estimates = 0;
  double total_time_s = 0.0;

  double mean_time_s() const { return solves > 0 ? total_time_s / solves : 0.0; }
};

struct SummaryStats {
  ModelStats ml, rb, fom;
  double train_total_s = 0.0;
  long total_gramian_applications = 0;
  long total_queries = 0;
  int final_basis_size = 0;
};

inline SummaryStats summarize(const std::vector<QueryRecord>& records) {
  SummaryStats stats;
  stats.total_queries = static_cast<long>(records.size());
  for (const auto& rec : records) {
    ++stats.ml.estimates;
    stats.ml.total_time_s += rec.t_ml_s;
    if (rec.model_used == ModelKind::ml) ++stats.ml.solves;
    if (rec.eta_rb) {
      ++stats.rb.estimates;
      ++stats.rb.solves;
      stats.rb.total_time_s += rec.t_rb_s;
    }
    if (rec.model_used == ModelKind::fom) {
      ++stats.fom.solves;
      stats.fom.total_time_s += rec.t_fom_s;
    }
    stats.train_total_s += rec.t_train_s;
    stats.total_gramian_applications += rec.gramian_applications;
    stats.final_basis_size = rec.basis_size_after;
  }
  return stats;
}

}  // namespace lqhier

#endif

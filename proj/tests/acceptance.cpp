// Acceptance gate for the adaptive hierarchy.  Each criterion prints exactly
// one PASS/FAIL line; the exit code is nonzero if any criterion failed.
//
// Default mode runs criteria 1-7: a desk-scale certified grid run with its
// usage profile, then the estimator, Gramian, closed-form, reduced-basis, and
// surrogate properties.  `--full-scale` instead runs criterion 8, the
// full-scale reproduction (expect a long runtime).  An optional positional
// argument names the run configuration to load (the shipped desk or full
// config); without it the equivalent built-in settings are used.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "lqhier/config.hpp"
#include "lqhier/validation.hpp"

using namespace lqhier;

namespace {

int failures = 0;

void report_line(int criterion, bool passed, const std::string& detail) {
  std::cout << (passed ? "PASS" : "FAIL") << " criterion " << criterion << ": " << detail
            << std::endl;
  if (!passed) ++failures;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Collapses a property list into one pass flag; failing properties land in
// the detail string, a passing list just reports its size.
bool collapse(const PropertyList& results, std::string& detail) {
  bool ok = true;
  for (const auto& r : results) {
    ok = ok && r.passed;
    if (!r.passed) {
      if (!detail.empty()) detail += "; ";
      detail += r.name + " (" + r.detail + ")";
    }
  }
  if (ok) detail = std::to_string(results.size()) + " properties hold";
  return ok;
}

double uniform(std::mt19937& gen, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(gen()) / 4294967296.0);
}

// Built-in equivalents of the shipped configs, used when no path is given.
RunConfig desk_settings() {
  RunConfig config;
  config.heat.grid_points = 50;
  config.heat.time_steps = 600;
  config.hierarchy.tolerance = 1e-4;
  config.hierarchy.retrain_interval = 1;
  config.hierarchy.harvest_fom_coefficients = true;
  config.hierarchy.kernel.box = config.heat.box;
  config.grid_counts = {20, 20};
  config.seed = 16;
  return config;
}

RunConfig full_settings() {
  RunConfig config = desk_settings();
  config.heat.grid_points = 200;
  config.heat.time_steps = 6000;
  config.grid_counts = {100, 100};
  return config;
}

// The criteria pin the scenario; a config that describes a different one
// would silently gate the wrong experiment, so refuse it loudly instead.
std::string scenario_mismatch(const RunConfig& config, int grid_points, int time_steps,
                              const std::vector<int>& counts) {
  if (config.family != "heat1d") return "family is '" + config.family + "', expected heat1d";
  if (config.heat.grid_points != grid_points || config.heat.time_steps != time_steps)
    return "discretization is " + std::to_string(config.heat.grid_points) + "/" +
           std::to_string(config.heat.time_steps) + ", expected " + std::to_string(grid_points) +
           "/" + std::to_string(time_steps);
  if (config.grid_counts != counts)
    return "parameter grid is not " + std::to_string(counts[0]) + "x" + std::to_string(counts[1]);
  if (config.hierarchy.tolerance != 1e-4) return "tolerance is not 1e-4";
  return "";
}

struct GridRunOutcome {
  std::vector<QueryRecord> records;
  SummaryStats stats;
  double run_seconds = 0.0;
  double max_replay_error = 0.0;  // over the sampled tight re-solves
  bool certified = false;
  std::string failure;  // nonempty if the run aborted
};

// Runs the full grid through the hierarchy, then re-solves a fixed random
// sample of queries with the full-order model at 1e-12 and compares the
// served final-time adjoints against those reference solutions.
GridRunOutcome run_and_certify(const RunConfig& config, int replay_samples) {
  GridRunOutcome outcome;
  const auto grid = parameter_grid(config.box(), config.grid_counts, config.seed);
  const ProblemBuilder build = config.builder();

  const auto start = std::chrono::steady_clock::now();
  HierarchyState state;
  std::vector<Vector> served;
  served.reserve(grid.size());
  try {
    for (const auto& mu : grid) {
      served.push_back(query(state, build, mu, config.hierarchy).final_adjoint);
      if (served.size() % 1000 == 0)
        std::cerr << "  ... " << served.size() << "/" << grid.size() << " queries, basis "
                  << state.basis.size() << ", " << elapsed_s(start) << " s\n";
    }
  } catch (const FomFailure& e) {
    outcome.failure = e.what();
    outcome.records = state.records;
    outcome.stats = summarize(outcome.records);
    outcome.run_seconds = elapsed_s(start);
    return outcome;
  }

  // Fixed sample of distinct query indices, platform-stable via raw words.
  std::set<size_t> picks;
  std::mt19937 gen(7u);
  while (picks.size() < static_cast<size_t>(replay_samples) && picks.size() < grid.size())
    picks.insert(gen() % grid.size());

  outcome.certified = true;
  for (size_t index : picks) {
    const auto problem = build(grid[index]);
    const auto reference = solve_fom(problem, 1e-12);
    const double error = (reference.final_adjoint.value - served[index]).norm();
    outcome.max_replay_error = std::max(outcome.max_replay_error, error);
    outcome.certified = outcome.certified && error <= config.hierarchy.tolerance + 1e-9;
  }

  outcome.records = state.records;
  outcome.stats = summarize(outcome.records);
  outcome.run_seconds = elapsed_s(start);
  return outcome;
}

// Criteria 1 and 2: the desk-scale run is certified and fast, and its usage
// profile shows the hierarchy working (few early FOM solves, ML in bulk).
void desk_run_criteria(const RunConfig& config) {
  const std::string mismatch = scenario_mismatch(config, 50, 600, {20, 20});
  if (!mismatch.empty()) {
    report_line(1, false, "config is not the desk-scale scenario: " + mismatch);
    report_line(2, false, "skipped: desk-scale run not performed");
    return;
  }

  const auto outcome = run_and_certify(config, 20);
  if (!outcome.failure.empty()) {
    report_line(1, false, "run aborted: " + outcome.failure);
    report_line(2, false, "skipped: run aborted");
    return;
  }

  const bool in_budget = outcome.run_seconds < 600.0;
  report_line(1, outcome.certified && in_budget,
              "20 re-solved queries within tolerance (max error " + fmt(outcome.max_replay_error) +
                  " vs " + fmt(config.hierarchy.tolerance) + "), run took " +
                  fmt(outcome.run_seconds) + " s");

  const auto& stats = outcome.stats;
  const long total = stats.total_queries;
  bool late_fom = false;
  for (size_t i = outcome.records.size() / 2; i < outcome.records.size(); ++i)
    late_fom = late_fom || outcome.records[i].model_used == ModelKind::fom;

  const bool few_fom = stats.fom.solves <= 10;
  const bool ml_bulk = stats.ml.solves * 5 >= total * 4;  // at least 80%
  const bool counts_ok = stats.rb.estimates == stats.rb.solves && stats.ml.estimates == total;
  report_line(2, few_fom && !late_fom && ml_bulk && counts_ok,
              "FOM/RB/ML solves " + std::to_string(stats.fom.solves) + "/" +
                  std::to_string(stats.rb.solves) + "/" + std::to_string(stats.ml.solves) +
                  " of " + std::to_string(total) + (late_fom ? ", FOM in second half" : "") +
                  ", ML estimates " + std::to_string(stats.ml.estimates));
}

// Criterion 3: the estimator sandwich over 50 random parameter/candidate
// pairs on the desk-scale heat problem (terminal weight is the identity).
void estimator_criterion(const HeatConfig& heat) {
  std::mt19937 gen(29u);
  bool lower_ok = true, upper_ok = true;
  double worst_lower = -std::numeric_limits<double>::infinity();
  double worst_upper = -std::numeric_limits<double>::infinity();
  const int pairs = 50;
  for (int trial = 0; trial < pairs; ++trial) {
    Parameter mu(2);
    mu << uniform(gen, heat.box.lo[0], heat.box.hi[0]),
        uniform(gen, heat.box.lo[1], heat.box.hi[1]);
    const auto problem = build_heat_problem(heat, mu);
    const auto reference = solve_fom(problem, 1e-12);
    const Vector& phi_star = reference.final_adjoint.value;
    const double bound = operator_norm_estimate(problem, 60);

    Vector p;
    if (trial % 3 == 2) {
      p = detail::random_direction(gen, problem.n());  // far-off candidate
    } else {
      const double magnitude = std::pow(10.0, -6.0 + 8.0 * trial / double(pairs - 1));
      Vector d = detail::random_direction(gen, problem.n());
      p = phi_star + magnitude * phi_star.norm() * d / d.norm();
    }
    const double eta = estimate_error(problem, p).eta;
    const double error = (phi_star - p).norm();
    lower_ok = lower_ok && error <= eta + 1e-9;
    upper_ok = upper_ok && eta <= bound * error * (1.0 + 1e-6);
    worst_lower = std::max(worst_lower, error - eta);
    worst_upper = std::max(worst_upper, eta - bound * error);
  }
  report_line(3, lower_ok && upper_ok,
              "50 pairs, max (error - eta) " + fmt(worst_lower) +
                  ", max (eta - bound*error) " + fmt(worst_upper));
}

void desk_criteria(const RunConfig& config) {
  desk_run_criteria(config);
  estimator_criterion(config.heat);

  {
    std::string detail;
    const bool ok = collapse(check_gramian_algebra(6, 6000, 200, 1e-6, 321u), detail);
    report_line(4, ok, detail);
  }
  {
    PropertyList results = check_scalar_closed_forms(6000);
    for (auto& r : check_time_stepping_order()) results.push_back(std::move(r));
    std::string detail;
    const bool ok = collapse(results, detail);
    report_line(5, ok, detail);
  }
  {
    HeatConfig heat = config.heat;
    const ProblemBuilder build = [heat](const Parameter& mu) {
      return build_heat_problem(heat, mu);
    };
    std::vector<Parameter> snapshots;
    for (double m1 : {1.0, 1.5, 2.0})
      for (double m2 : {0.5, 1.5}) {
        Parameter s(2);
        s << m1, m2;
        snapshots.push_back(s);
      }
    Parameter test(2);
    test << 1.7, 1.1;
    std::string detail;
    const bool ok = collapse(check_rb_properties(build, snapshots, test, 1000, 23u), detail);
    report_line(6, ok, detail);
  }
  {
    std::string detail;
    const bool ok = collapse(check_ml_properties(), detail);
    report_line(7, ok, detail);
  }
}

// Criterion 8: the full-scale experiment reproduces the expected usage
// profile, and served results re-certify against tight full-order solves.
void full_scale_criterion(const RunConfig& config) {
  const std::string mismatch = scenario_mismatch(config, 200, 6000, {100, 100});
  if (!mismatch.empty()) {
    report_line(8, false, "config is not the full-scale scenario: " + mismatch);
    return;
  }

  const auto outcome = run_and_certify(config, 20);
  if (!outcome.failure.empty()) {
    report_line(8, false, "run aborted: " + outcome.failure);
    return;
  }

  const auto& stats = outcome.stats;
  const bool fom_band = stats.fom.solves >= 2 && stats.fom.solves <= 12;
  const bool ml_bulk = stats.ml.solves * 10 >= stats.total_queries * 9;  // at least 90%
  report_line(8, outcome.certified && fom_band && ml_bulk,
              "FOM/RB/ML solves " + std::to_string(stats.fom.solves) + "/" +
                  std::to_string(stats.rb.solves) + "/" + std::to_string(stats.ml.solves) +
                  " of " + std::to_string(stats.total_queries) + ", max replay error " +
                  fmt(outcome.max_replay_error) + ", run took " + fmt(outcome.run_seconds) +
                  " s");
}

}  // namespace

int main(int argc, char** argv) {
  bool full_scale = false;
  std::vector<std::string> positional;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--full-scale")
      full_scale = true;
    else
      positional.push_back(arg);
  }

  try {
    if (full_scale) {
      const RunConfig config =
          positional.empty() ? full_settings() : load_run_config(positional.front());
      full_scale_criterion(config);
    } else {
      const RunConfig config =
          positional.empty() ? desk_settings() : load_run_config(positional.front());
      desk_criteria(config);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return failures == 0 ? 0 : 1;
}

// Experiment driver for the adaptive model hierarchy: config-driven runs,
// single-model solves, the validation suite, and report generation.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "lqhier/checkpoint.hpp"
#include "lqhier/config.hpp"
#include "lqhier/csvio.hpp"
#include "lqhier/report.hpp"
#include "lqhier/validation.hpp"

namespace fs = std::filesystem;
using namespace lqhier;

namespace {

Parameter parse_parameter(const std::string& text) {
  std::vector<double> values;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) {
    try {
      size_t used = 0;
      values.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw std::runtime_error("bad --mu component: '" + token + "'");
    }
  }
  if (values.empty()) throw std::runtime_error("--mu must list at least one component");
  Parameter mu(static_cast<Eigen::Index>(values.size()));
  for (size_t i = 0; i < values.size(); ++i) mu[i] = values[i];
  return mu;
}

void print_adjoint_line(const Vector& phi) {
  if (phi.size() == 1)
    std::cout << "final adjoint: " << format_double(phi[0]) << '\n';
  else
    std::cout << "final adjoint norm: " << format_double(phi.norm()) << '\n';
}

int cmd_run(const std::string& config_path) {
  const RunConfig config = load_run_config(config_path);
  fs::create_directories(config.output_dir);

  const auto grid = parameter_grid(config.box(), config.grid_counts, config.seed);
  const ProblemBuilder build = config.builder();
  HierarchyState state;
  std::cout << "running " << grid.size() << " queries (family " << config.family << ", tolerance "
            << format_double(config.hierarchy.tolerance) << ")\n";

  bool failed = false;
  std::string failure;
  for (const auto& mu : grid) {
    try {
      query(state, build, mu, config.hierarchy);
    } catch (const FomFailure& e) {
      failed = true;
      failure = e.what();
      break;
    }
  }

  const fs::path out_dir(config.output_dir);
  write_queries_csv((out_dir / "queries.csv").string(), state.records, config.box().lo.size());
  const auto stats = summarize(state.records);
  write_summary_json((out_dir / "summary.json").string(), stats, config.hierarchy.tolerance);
  if (!config.checkpoint.empty())
    save_checkpoint((out_dir / config.checkpoint).string(), state);

  std::cout << summary_table(stats);
  std::cout << "outputs in " << out_dir.string() << '\n';
  if (failed) {
    std::cerr << "run aborted: " << failure << '\n';
    return 1;
  }
  return 0;
}

int cmd_solve(const std::string& config_path, const std::string& mu_text,
              const std::string& model, const std::string& checkpoint_path) {
  const RunConfig config = load_run_config(config_path);
  const Parameter mu = parse_parameter(mu_text);
  const auto problem = config.builder()(mu);

  HierarchyState state;
  if (!checkpoint_path.empty()) state = load_checkpoint(checkpoint_path);

  fs::create_directories(config.output_dir);
  const fs::path control_path = fs::path(config.output_dir) / ("control_" + model + ".csv");

  double eta = 0.0, cost = 0.0;
  ControlTrajectory control;
  Vector phi;
  if (model == "fom") {
    const auto solution = solve_fom(problem, config.hierarchy.effective_fom_tolerance());
    eta = solution.final_adjoint.residual_norm;
    cost = solution.cost;
    control = solution.control;
    phi = solution.final_adjoint.value;
  } else if (model == "rb") {
    const auto solution = solve_rb(problem, state.basis);
    eta = *solution.residual_norm;
    cost = solution.cost;
    control = solution.control;
    phi = solution.final_adjoint;
  } else if (model == "ml") {
    std::vector<CoefficientSurrogate> raw_bank(state.basis.size());  // zero surrogates
    RBSolution solution;
    if (state.model.trained() &&
        static_cast<int>(state.model.surrogates.size()) == state.basis.size()) {
      // Frame-aware prediction, then the standard recovery path.
      solution.coefficients = state.model.predict_coefficients(mu);
      solution.final_adjoint = state.basis.size() > 0 ? state.basis.expand(solution.coefficients)
                                                      : Vector::Zero(problem.n());
      const StateTrajectory adjoint = propagate_adjoint(problem, solution.final_adjoint);
      solution.control = control_from_adjoint(problem, adjoint);
      solution.state = propagate_forward(problem, problem.x0(), solution.control);
      solution.cost = evaluate_cost(problem, solution.control, solution.state.back());
    } else {
      solution = solve_ml(problem, state.basis, raw_bank, mu);
    }
    eta = estimate_error(problem, solution.final_adjoint).eta;
    cost = solution.cost;
    control = solution.control;
    phi = solution.final_adjoint;
  } else {
    std::cerr << "unknown model '" << model << "' (expected fom, rb, or ml)\n";
    return 2;
  }

  print_adjoint_line(phi);
  std::cout << "eta: " << format_double(eta) << '\n';
  std::cout << "cost: " << format_double(cost) << '\n';
  std::cout << "basis size: " << state.basis.size() << '\n';
  write_control_csv(control_path.string(), control, problem.grid());
  std::cout << "control written to " << control_path.string() << '\n';
  return 0;
}

int cmd_validate(const std::string& scale) {
  if (scale != "quick" && scale != "full") {
    std::cerr << "unknown scale '" << scale << "' (expected quick or full)\n";
    return 2;
  }
  const auto results = run_validation_suite(scale == "full");
  bool all_passed = true;
  for (const auto& result : results) {
    std::cout << (result.passed ? "PASS" : "FAIL") << "  " << result.name;
    if (!result.detail.empty()) std::cout << "  (" << result.detail << ")";
    std::cout << '\n';
    all_passed = all_passed && result.passed;
  }
  std::cout << (all_passed ? "all properties passed\n" : "some properties FAILED\n");
  return all_passed ? 0 : 1;
}

int cmd_report(const std::string& run_dir) {
  const fs::path dir(run_dir);
  const auto records = read_queries_csv((dir / "queries.csv").string());
  const auto stats = summarize(records);
  const auto summary = read_summary_json((dir / "summary.json").string());

  const auto mismatches = cross_check_summary(stats, summary.stats);
  if (!mismatches.empty()) {
    std::cerr << "summary.json does not match queries.csv:\n";
    for (const auto& m : mismatches) std::cerr << "  " << m << '\n';
    return 1;
  }

  {
    std::ofstream out(dir / "timings.svg");
    if (!out) throw std::runtime_error("cannot write timings.svg");
    out << render_timings_svg(records);
  }
  {
    std::ofstream out(dir / "errors.svg");
    if (!out) throw std::runtime_error("cannot write errors.svg");
    out << render_errors_svg(records, summary.tolerance);
  }
  std::cout << summary_table(stats);
  std::cout << "plots written to " << (dir / "timings.svg").string() << " and "
            << (dir / "errors.svg").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"certified adaptive model hierarchy for parametrized LQ optimal control"};
  app.require_subcommand(1);

  std::string config_path, mu_text, model = "fom", checkpoint_path, scale = "quick", run_dir;

  auto* run = app.add_subcommand("run", "run the adaptive hierarchy over a parameter grid");
  run->add_option("config", config_path, "run configuration file")->required();

  auto* solve = app.add_subcommand("solve", "solve one parameter with a chosen model");
  solve->add_option("config", config_path, "run configuration file")->required();
  solve->add_option("--mu", mu_text, "parameter components, comma separated")->required();
  solve->add_option("--model", model, "fom, rb, or ml");
  solve->add_option("--checkpoint", checkpoint_path, "hierarchy checkpoint for rb/ml");

  auto* validate = app.add_subcommand("validate", "run the cross-module property suite");
  validate->add_option("--scale", scale, "quick or full");

  auto* report = app.add_subcommand("report", "render plots and the summary table for a run");
  report->add_option("run_dir", run_dir, "directory containing queries.csv and summary.json")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path);
    if (solve->parsed()) return cmd_solve(config_path, mu_text, model, checkpoint_path);
    if (validate->parsed()) return cmd_validate(scale);
    if (report->parsed()) return cmd_report(run_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

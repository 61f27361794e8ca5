// Minimal tour of the adaptive hierarchy on a small instance of the
// boundary-controlled heat problem: watch the dispatch escalate from FOM to
// RB to ML as the basis and the surrogates pick up the parameter domain.

#include <iostream>

#include "lqhier/heat1d.hpp"
#include "lqhier/hierarchy.hpp"
#include "lqhier/report.hpp"

using namespace lqhier;

int main() {
  HeatConfig heat;
  heat.grid_points = 30;
  heat.time_steps = 300;

  HierarchyConfig config;
  config.tolerance = 1e-4;
  config.retrain_interval = 1;
  config.harvest_fom_coefficients = true;
  config.kernel.box = heat.box;

  const ProblemBuilder build = [heat](const Parameter& mu) {
    return build_heat_problem(heat, mu);
  };
  const auto grid = parameter_grid(heat.box, {10, 10}, 42u);

  std::cout << "serving " << grid.size() << " parameters, tolerance "
            << format_double(config.tolerance) << "\n\n";

  HierarchyState state;
  for (const auto& mu : grid) {
    const auto result = query(state, build, mu, config);
    const auto& rec = result.record;
    if (rec.model_used != ModelKind::ml || rec.index % 25 == 0) {
      std::cout << "query " << rec.index << "  mu = (" << format_double(mu[0]) << ", "
                << format_double(mu[1]) << ")  served by " << to_string(rec.model_used)
                << "  eta_ml = " << format_double(rec.eta_ml);
      if (rec.eta_rb) std::cout << "  eta_rb = " << format_double(*rec.eta_rb);
      std::cout << "  basis " << rec.basis_size_after << '\n';
    }
  }

  std::cout << '\n' << summary_table(summarize(state.records));
  return 0;
}

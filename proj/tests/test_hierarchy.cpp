#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lqhier/checkpoint.hpp"
#include "lqhier/heat1d.hpp"
#include "lqhier/hierarchy.hpp"

using namespace lqhier;

namespace {

Parameter mu1(double a) {
  Parameter mu(1);
  mu << a;
  return mu;
}

Parameter mu2(double a, double b) {
  Parameter mu(2);
  mu << a, b;
  return mu;
}

// Two uncoupled integrator states with identity weights: Lambda = I exactly,
// rhs(mu) = 2 (e_1 + mu_0 e_2), phi*(mu) = e_1 + mu_0 e_2.  The adjoint
// manifold is a line through e_1, so the first two distinct mu values span it
// and every later snapshot is dependent.
ProblemBuilder plane_family() {
  return [](const Parameter& mu) {
    SparseMatrix A(2, 2);
    Matrix B = Matrix::Identity(2, 2);
    Vector x0 = Vector::Zero(2);
    Vector xT(2);
    xT << -2.0, -2.0 * mu[0];
    return OCProblem(std::move(A), std::move(B), WeightM::Identity(), Matrix::Identity(2, 2),
                     std::move(x0), std::move(xT), TimeGrid{1.0, 16});
  };
}

HeatConfig small_heat() {
  HeatConfig config;
  config.grid_points = 8;
  config.time_steps = 40;
  return config;
}

std::string file_contents(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

TEST_CASE("cold start escalates to the full model", "[hierarchy]") {
  HierarchyState state;
  HierarchyConfig config;
  config.tolerance = 1e-13;
  auto build = plane_family();

  const auto result = query(state, build, mu1(0.0), config);
  CHECK(result.record.model_used == ModelKind::fom);
  CHECK(result.record.eta_rb.has_value());  // the RB stage ran (and failed)
  CHECK(result.record.basis_size_after == 1);
  CHECK(state.basis.size() == 1);
  CHECK(state.model.trained());  // retrained right after the extension
  CHECK((result.final_adjoint - Vector::Unit(2, 0)).norm() < 1e-12);
}

TEST_CASE("dependent snapshots are rejected without adaptation", "[hierarchy]") {
  HierarchyState state;
  HierarchyConfig config;
  config.tolerance = 1e-13;
  auto build = plane_family();

  query(state, build, mu1(0.0), config);
  REQUIRE(state.basis.size() == 1);

  // phi*(1e-12) has an e_2 component of 1e-12: large enough to fail the RB
  // certificate at 1e-13, small enough to be a dependent snapshot.
  const auto result = query(state, build, mu1(1e-12), config);
  CHECK(result.record.model_used == ModelKind::fom);
  CHECK(state.basis.size() == 1);
  CHECK(state.rejected_snapshots == 1);
  CHECK(state.samples.empty());  // rejection harvests nothing

  // The served solution is still the tight full-order one.
  CHECK(result.certified_error <= config.effective_fom_tolerance());
}

TEST_CASE("reduced serves accumulate samples and retrain at the interval", "[hierarchy]") {
  HierarchyState state;
  HierarchyConfig config;
  config.tolerance = 1e-13;
  config.retrain_interval = 2;
  auto build = plane_family();

  query(state, build, mu1(0.0), config);  // FOM, basis 1
  query(state, build, mu1(1.0), config);  // FOM, basis 2: manifold covered
  REQUIRE(state.basis.size() == 2);
  REQUIRE(state.model.surrogates.size() == 2);
  CHECK(state.model.surrogates[0].trained_on == 0);  // no samples yet

  const auto first_rb = query(state, build, mu1(0.5), config);
  CHECK(first_rb.record.model_used == ModelKind::rb);
  CHECK(state.pending_samples == 1);
  CHECK(state.model.surrogates[0].trained_on == 0);  // below the interval

  const auto second_rb = query(state, build, mu1(0.25), config);
  CHECK(second_rb.record.model_used == ModelKind::rb);
  CHECK(state.pending_samples == 0);                 // interval reached
  CHECK(state.model.surrogates[0].trained_on == 2);  // retrained on both

  // A repeated parameter now sits on a surrogate center: ML serves it.
  const auto ml = query(state, build, mu1(0.5), config);
  CHECK(ml.record.model_used == ModelKind::ml);
  CHECK(ml.record.eta_ml <= config.tolerance);
  CHECK(!ml.record.eta_rb.has_value());
  CHECK(ml.record.gramian_applications == 1);  // certification only
}

TEST_CASE("a repeated parameter replaces its sample", "[hierarchy]") {
  HierarchyState state;
  HierarchyConfig config;
  config.tolerance = 1e-13;
  config.retrain_interval = 100;  // keep the model untrained on samples
  auto build = plane_family();

  query(state, build, mu1(0.0), config);
  query(state, build, mu1(1.0), config);
  query(state, build, mu1(0.5), config);
  query(state, build, mu1(0.5), config);
  CHECK(state.samples.size() == 1);
  CHECK(state.pending_samples == 2);  // both serves counted toward the interval
}

TEST_CASE("samples are refreshed against every grown basis", "[hierarchy]") {
  const HeatConfig heat = small_heat();
  auto build = [heat](const Parameter& mu) { return build_heat_problem(heat, mu); };

  HierarchyState state;
  HierarchyConfig config;
  config.tolerance = 1e-5;
  config.retrain_interval = 1;
  config.harvest_fom_coefficients = true;
  config.kernel.box = heat.box;

  int previous_basis = 0;
  for (auto& mu : {mu2(1.0, 0.5), mu2(2.0, 1.5), mu2(1.0, 1.5), mu2(2.0, 0.5), mu2(1.5, 1.0),
                   mu2(1.25, 0.75), mu2(1.75, 1.25)}) {
    query(state, build, mu, config);
    CHECK(state.basis.size() >= previous_basis);
    previous_basis = state.basis.size();
    // Refresh-on-extension keeps every stored coefficient vector in the
    // current basis frame; stale lengths would poison the next training.
    for (const auto& sample : state.samples)
      CHECK(sample.alpha.size() == state.basis.size());
    if (state.model.trained())
      CHECK(static_cast<int>(state.model.surrogates.size()) == state.basis.size());
  }
  CHECK(state.basis.size() >= 2);
  CHECK(!state.samples.empty());
}

TEST_CASE("every served result is certified against a tight re-solve", "[hierarchy]") {
  const HeatConfig heat = small_heat();
  auto build = [heat](const Parameter& mu) { return build_heat_problem(heat, mu); };

  HierarchyState state;
  HierarchyConfig config;
  config.tolerance = 1e-5;
  config.retrain_interval = 1;
  config.harvest_fom_coefficients = true;
  config.kernel.box = heat.box;

  const auto grid = parameter_grid(heat.box, {4, 3}, 7u);
  for (const auto& mu : grid) {
    const auto result = query(state, build, mu, config);
    CHECK(result.certified_error <= config.tolerance + 1e-12);
    const Vector truth = solve_fom(build(mu), 1e-12).final_adjoint.value;
    CHECK((result.final_adjoint - truth).norm() <= result.certified_error + 1e-9);

    // The served control must close the loop on its own final state.
    const StateTrajectory replay = propagate_forward(build(mu), build(mu).x0(), result.control);
    const Vector gap = replay.back() - (flow_map(build(mu), build(mu).x0()) -
                                        apply_gramian(build(mu), result.final_adjoint));
    CHECK(gap.norm() < 1e-10);
  }
}

TEST_CASE("record accounting composes into the summary", "[hierarchy]") {
  const HeatConfig heat = small_heat();
  auto build = [heat](const Parameter& mu) { return build_heat_problem(heat, mu); };

  HierarchyState state;
  HierarchyConfig config;
  config.tolerance = 1e-5;
  config.retrain_interval = 1;
  config.harvest_fom_coefficients = true;
  config.kernel.box = heat.box;

  const auto grid = parameter_grid(heat.box, {4, 4}, 3u);
  for (const auto& mu : grid) query(state, build, mu, config);

  const auto stats = summarize(state.records);
  CHECK(stats.total_queries == static_cast<long>(grid.size()));
  CHECK(stats.ml.estimates == stats.total_queries);  // the ML stage always estimates

  long ml_rows = 0, rb_rows = 0, fom_rows = 0, eta_rb_rows = 0, gramians = 0;
  for (const auto& rec : state.records) {
    if (rec.model_used == ModelKind::ml) ++ml_rows;
    if (rec.model_used == ModelKind::rb) ++rb_rows;
    if (rec.model_used == ModelKind::fom) ++fom_rows;
    if (rec.eta_rb) ++eta_rb_rows;
    gramians += rec.gramian_applications;
    if (rec.model_used == ModelKind::ml && rec.gramian_applications > 0)
      CHECK(rec.gramian_applications == 1);
    if (rec.model_used == ModelKind::rb) {
      // N for the reduced solve, plus one more when a nonzero ML candidate
      // was certified (and failed) first.
      CHECK(rec.gramian_applications >= rec.basis_size_after);
      CHECK(rec.gramian_applications <= rec.basis_size_after + 1);
    }
  }
  CHECK(stats.ml.solves == ml_rows);
  CHECK(stats.fom.solves == fom_rows);
  CHECK(stats.rb.solves == eta_rb_rows);  // the RB stage solves whenever it estimates
  CHECK(stats.rb.estimates == stats.rb.solves);
  CHECK(ml_rows + rb_rows + fom_rows == stats.total_queries);
  CHECK(stats.total_gramian_applications == gramians);
  CHECK(stats.final_basis_size == state.basis.size());
  CHECK(stats.fom.solves >= 1);  // the cold start at least
}

TEST_CASE("checkpoints round-trip bit-exactly and resume identically", "[hierarchy]") {
  const HeatConfig heat = small_heat();
  auto build = [heat](const Parameter& mu) { return build_heat_problem(heat, mu); };

  HierarchyState state;
  HierarchyConfig config;
  config.tolerance = 1e-5;
  config.retrain_interval = 1;
  config.harvest_fom_coefficients = true;
  config.kernel.box = heat.box;

  for (auto& mu : {mu2(1.0, 0.5), mu2(2.0, 1.5), mu2(1.5, 1.0), mu2(1.25, 1.25)})
    query(state, build, mu, config);
  REQUIRE(!state.samples.empty());
  REQUIRE(state.model.trained());

  const std::string path_a = "checkpoint_roundtrip_a.txt";
  const std::string path_b = "checkpoint_roundtrip_b.txt";
  save_checkpoint(path_a, state);
  HierarchyState loaded = load_checkpoint(path_a);
  save_checkpoint(path_b, loaded);
  CHECK(file_contents(path_a) == file_contents(path_b));

  CHECK(loaded.basis.size() == state.basis.size());
  CHECK(loaded.basis.Q == state.basis.Q);  // replayed extension is bitwise equal
  CHECK(loaded.basis.R == state.basis.R);
  CHECK(loaded.samples.size() == state.samples.size());
  CHECK(loaded.pending_samples == state.pending_samples);
  CHECK(loaded.model.frame == state.model.frame);

  // Resuming from the checkpoint reproduces the original dispatch exactly.
  const Parameter next = mu2(1.4, 0.6);
  const auto original = query(state, build, next, config);
  const auto resumed = query(loaded, build, next, config);
  CHECK(resumed.record.model_used == original.record.model_used);
  CHECK(resumed.record.eta_ml == original.record.eta_ml);
  CHECK(resumed.record.eta_rb.has_value() == original.record.eta_rb.has_value());
  if (resumed.record.eta_rb) CHECK(*resumed.record.eta_rb == *original.record.eta_rb);
  CHECK((resumed.final_adjoint - original.final_adjoint).norm() == 0.0);

  std::remove(path_a.c_str());
  std::remove(path_b.c_str());
}

TEST_CASE("full-order failure still records the query", "[hierarchy]") {
  const HeatConfig heat = small_heat();
  auto build = [heat](const Parameter& mu) { return build_heat_problem(heat, mu); };

  HierarchyState state;
  HierarchyConfig config;
  config.tolerance = 1e-4;
  config.fom_tolerance = 1e-30;  // unreachable on purpose

  CHECK_THROWS_AS(query(state, build, mu2(1.5, 1.0), config), FomFailure);
  REQUIRE(state.records.size() == 1);
  const auto& rec = state.records.front();
  CHECK(rec.model_used == ModelKind::fom);
  CHECK(rec.eta_ml > 0.0);
  CHECK(rec.eta_rb.has_value());
  CHECK(rec.basis_size_after == 0);  // failed before any extension
}

TEST_CASE("tolerance drives the dispatch split", "[hierarchy]") {
  // The same query sequence under a loose tolerance serves more queries from
  // the cheap end of the hierarchy than under a tight one.
  const HeatConfig heat = small_heat();
  auto build = [heat](const Parameter& mu) { return build_heat_problem(heat, mu); };
  const auto grid = parameter_grid(heat.box, {4, 4}, 11u);

  auto run = [&](double tolerance) {
    HierarchyState state;
    HierarchyConfig config;
    config.tolerance = tolerance;
    config.retrain_interval = 1;
    config.harvest_fom_coefficients = true;
    config.kernel.box = heat.box;
    for (const auto& mu : grid) query(state, build, mu, config);
    return summarize(state.records);
  };

  const auto loose = run(1e-3);
  const auto tight = run(1e-8);
  CHECK(loose.ml.solves >= tight.ml.solves);
  CHECK(loose.fom.solves <= tight.fom.solves);
  CHECK(loose.fom.solves >= 1);
}

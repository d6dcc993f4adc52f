#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracle_helpers.hpp"
#include "pmuopt/grid_model.hpp"
#include "pmuopt/observability.hpp"
#include "pmuopt/subproblem.hpp"

using namespace pmuopt;

namespace {

SubproblemSpec basic_spec(const Eigen::VectorXd& cost, double epsilon, int budget,
                          double mu = 0.0) {
  SubproblemSpec spec;
  spec.cost = cost;
  spec.epsilon = epsilon;
  spec.budget = budget;
  spec.mu = mu;
  // Linearize g at the uniform point so the trust region is interior.
  Eigen::VectorXd uniform =
      Eigen::VectorXd::Constant(cost.size(), static_cast<double>(budget) / cost.size());
  spec.g_lin = linearize_g(uniform, 1.5);
  spec.trust_threshold = 1e-6 * budget;
  return spec;
}

}  // namespace

TEST_CASE("symmetric costs give the uniform point") {
  const int n = 5, budget = 2;
  SubproblemSpec spec = basic_spec(Eigen::VectorXd::Ones(n), 0.5, budget, 0.3);
  Eigen::VectorXd start = Eigen::VectorXd::Constant(n, static_cast<double>(budget) / n);
  SubproblemResult result = solve_subproblem(spec, start);
  REQUIRE(result.converged);
  CHECK((result.x - start).cwiseAbs().maxCoeff() < 1e-7);
  CHECK(result.kkt_residual < 1e-7);
}

TEST_CASE("two-variable subproblem matches a dense scan") {
  // minimize 1/(x1+0.5) + 4/(x2+0.5) over x1+x2 = 1, 0 <= x <= 1.
  Eigen::VectorXd cost(2);
  cost << 1.0, 4.0;
  SubproblemSpec spec = basic_spec(cost, 0.5, 1);

  // Oracle: one-dimensional scan over x1 with golden-section refinement.
  auto objective = [&](double x1) { return 1.0 / (x1 + 0.5) + 4.0 / (1.5 - x1); };
  double best_x = 0.0, best_v = objective(0.0);
  for (int i = 0; i <= 1'000'000; ++i) {
    const double x1 = i * 1e-6;
    const double v = objective(x1);
    if (v < best_v) {
      best_v = v;
      best_x = x1;
    }
  }
  // The interior stationary point 1/(x1+.5)^2 = 4/(x2+.5)^2 solves to 1/6.
  CHECK(best_x == Catch::Approx(1.0 / 6.0).margin(1e-5));

  Eigen::VectorXd start(2);
  start << 0.5, 0.5;
  SubproblemResult result = solve_subproblem(spec, start);
  REQUIRE(result.converged);
  CHECK(result.x(0) == Catch::Approx(best_x).margin(1e-6));
  CHECK(result.x(1) == Catch::Approx(1.0 - best_x).margin(1e-6));
  CHECK(result.objective == Catch::Approx(best_v).margin(1e-8));
  CHECK(result.kkt_residual < 1e-7);
}

TEST_CASE("asymmetric costs push toward a box face when warranted") {
  // With a large cost ratio the stationary point leaves the box and the
  // solution pins to the boundary.
  Eigen::VectorXd cost(2);
  cost << 1.0, 100.0;
  SubproblemSpec spec = basic_spec(cost, 0.5, 1);
  auto objective = [&](double x1) { return 1.0 / (x1 + 0.5) + 100.0 / (1.5 - x1); };
  double best_x = 0.0, best_v = objective(0.0);
  for (int i = 0; i <= 1'000'000; ++i) {
    const double x1 = i * 1e-6;
    const double v = objective(x1);
    if (v < best_v) {
      best_v = v;
      best_x = x1;
    }
  }
  CHECK(best_x == Catch::Approx(0.0).margin(1e-6));
  Eigen::VectorXd start(2);
  start << 0.5, 0.5;
  SubproblemResult result = solve_subproblem(spec, start);
  REQUIRE(result.converged);
  CHECK(result.x(0) == Catch::Approx(best_x).margin(1e-5));
}

TEST_CASE("covering rows are honored") {
  // Path graph 1-2-3; complete observability with budget 1 forces the hub.
  GridModel model = parse_case(oracle::case_text(3, {{0, 1, 0.1}, {1, 2, 0.1}}));
  IncidencePair inc = incidence_matrices(model);
  auto constraint = ObservabilityConstraint::make(ConstraintKind::Complete, inc);

  Eigen::VectorXd cost = Eigen::VectorXd::Ones(3);
  SubproblemSpec spec = basic_spec(cost, 0.5, 1, 0.1);
  spec.constraint = &constraint;
  // Start must come from phase 1: the uniform point violates coverage.
  SubproblemResult result = solve_subproblem(spec, Eigen::VectorXd::Constant(3, 1.0 / 3));
  REQUIRE(result.converged);
  CHECK(check(result.x, constraint, 1e-7).satisfied);
  // Hub weight dominates: rows force x2 close to 1.
  CHECK(result.x(1) > 0.95);
}

TEST_CASE("infeasible budget raises infeasibility") {
  // Path of 5 buses: complete observability is impossible with one PMU,
  // even fractionally.
  GridModel model = parse_case(
      oracle::case_text(5, {{0, 1, 0.1}, {1, 2, 0.1}, {2, 3, 0.1}, {3, 4, 0.1}}));
  IncidencePair inc = incidence_matrices(model);
  auto constraint = ObservabilityConstraint::make(ConstraintKind::Complete, inc);
  SubproblemSpec spec = basic_spec(Eigen::VectorXd::Ones(5), 0.5, 1);
  spec.constraint = &constraint;
  CHECK_THROWS_AS(solve_subproblem(spec, Eigen::VectorXd::Constant(5, 0.2)),
                  InfeasibleError);
}

TEST_CASE("phase 1 and analytic center produce strictly feasible points") {
  GridModel model = parse_case(oracle::read_file(oracle::data_path("case30.m")));
  IncidencePair inc = incidence_matrices(model);
  auto constraint = ObservabilityConstraint::make(ConstraintKind::Complete, inc);
  const int n = 30, budget = 12;

  BarrierSpec barrier;
  barrier.lower = Eigen::VectorXd::Zero(n);
  barrier.upper = Eigen::VectorXd::Ones(n);
  barrier.equality = Eigen::VectorXd::Ones(n);
  barrier.equality_rhs = budget;
  for (int r = 0; r < constraint.matrix.rows(); ++r) {
    SparseRow row;
    for (int c = 0; c < n; ++c)
      if (constraint.matrix(r, c) > 0) {
        row.index.push_back(c);
        row.value.push_back(1.0);
      }
    row.rhs = 1.0;
    barrier.rows.push_back(row);
  }
  Eigen::VectorXd uniform = Eigen::VectorXd::Constant(n, static_cast<double>(budget) / n);
  Eigen::VectorXd interior = phase1_interior(barrier, uniform);
  CHECK(barrier_detail::strictly_feasible(barrier, interior, 1e-9));
  Eigen::VectorXd center = analytic_center(barrier, interior);
  CHECK(barrier_detail::strictly_feasible(barrier, center, 1e-6));
  CHECK(std::abs(center.sum() - budget) < 1e-8);
}

TEST_CASE("solver reports newton residual traces") {
  SubproblemSpec spec = basic_spec(Eigen::VectorXd::Ones(4), 0.5, 2, 1.0);
  SubproblemResult result = solve_subproblem(spec, Eigen::VectorXd::Constant(4, 0.5));
  CHECK(result.newton_steps > 0);
  CHECK(result.newton_residuals.size() == static_cast<std::size_t>(result.newton_steps));
}

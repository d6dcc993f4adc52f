#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracle_helpers.hpp"
#include "pmuopt/grid_model.hpp"
#include "pmuopt/observability.hpp"
#include "pmuopt/set_cover.hpp"

using namespace pmuopt;

namespace {

GridModel star_graph(int leaves) {
  std::vector<std::tuple<int, int, double>> edges;
  for (int v = 1; v <= leaves; ++v) edges.emplace_back(0, v, 0.1);
  return parse_case(oracle::case_text(leaves + 1, edges));
}

// Independent oracle for count_unobserved: direct adjacency scan.
int scan_unobserved(const GridModel& model, const Eigen::VectorXd& x) {
  int count = 0;
  for (int k = 0; k < model.n_buses; ++k) {
    bool reached = x(k) > 0.5;
    for (int m : model.adjacency[k]) reached = reached || x(m) > 0.5;
    if (!reached) ++count;
  }
  return count;
}

}  // namespace

TEST_CASE("full placement satisfies both constraint kinds") {
  GridModel model = parse_case(oracle::read_file(oracle::data_path("case30.m")));
  IncidencePair inc = incidence_matrices(model);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(model.n_buses);
  for (ConstraintKind kind : {ConstraintKind::Complete, ConstraintKind::DepthOne}) {
    auto constraint = ObservabilityConstraint::make(kind, inc);
    CHECK(check(ones, constraint).satisfied);
  }
}

TEST_CASE("star graph is fully observable from the hub") {
  GridModel model = star_graph(6);
  IncidencePair inc = incidence_matrices(model);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(7);
  x(0) = 1.0;
  auto complete = ObservabilityConstraint::make(ConstraintKind::Complete, inc);
  CHECK(check(x, complete).satisfied);

  auto result = min_pmu_blp(complete);
  CHECK(result.optimum == 1);
  CHECK(result.witness == std::vector<int>{0});
}

TEST_CASE("check reports violated rows and dimension mismatches") {
  GridModel model = parse_case(oracle::case_text(3, {{0, 1, 0.1}, {1, 2, 0.1}}));
  IncidencePair inc = incidence_matrices(model);
  auto complete = ObservabilityConstraint::make(ConstraintKind::Complete, inc);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  x(0) = 1.0;  // bus 2 unreached
  auto result = check(x, complete);
  CHECK_FALSE(result.satisfied);
  CHECK(result.violated_rows == std::vector<int>{2});
  CHECK_THROWS_AS(check(Eigen::VectorXd::Zero(5), complete), ContractError);
}

TEST_CASE("count_unobserved endpoints") {
  GridModel model = parse_case(oracle::read_file(oracle::data_path("case30.m")));
  IncidencePair inc = incidence_matrices(model);
  CHECK(count_unobserved(Eigen::VectorXd::Ones(30), inc.bus_to_bus) == 0);
  CHECK(count_unobserved(Eigen::VectorXd::Zero(30), inc.bus_to_bus) == 30);
}

TEST_CASE("count_unobserved agrees with an adjacency scan") {
  GridModel model = parse_case(oracle::read_file(oracle::data_path("case30.m")));
  IncidencePair inc = incidence_matrices(model);
  std::mt19937 gen(11);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int trial = 0; trial < 25; ++trial) {
    Eigen::VectorXd x(30);
    for (int k = 0; k < 30; ++k) x(k) = coin(gen);
    CHECK(count_unobserved(x, inc.bus_to_bus) == scan_unobserved(model, x));
  }
}

TEST_CASE("30-bus minimum PMU counts with certified zero gap") {
  GridModel model = parse_case(oracle::read_file(oracle::data_path("case30.m")));
  IncidencePair inc = incidence_matrices(model);
  auto complete = ObservabilityConstraint::make(ConstraintKind::Complete, inc);
  auto depth_one = ObservabilityConstraint::make(ConstraintKind::DepthOne, inc);

  auto co = min_pmu_blp(complete);
  CHECK(co.optimum == 10);
  CHECK(co.proven);
  CHECK(co.lower_bound == Catch::Approx(10.0));
  CHECK(check(Placement::from_support(co.witness, 30).x, complete).satisfied);

  auto dou = min_pmu_blp(depth_one);
  CHECK(dou.optimum == 4);
  CHECK(dou.proven);
  Eigen::VectorXd witness = Placement::from_support(dou.witness, 30).x;
  CHECK(check(witness, depth_one).satisfied);
  // Four PMUs cannot reach all thirty buses.
  CHECK_FALSE(check(witness, complete).satisfied);
  CHECK(count_unobserved(witness, inc.bus_to_bus) == scan_unobserved(model, witness));
}

TEST_CASE("exact solver matches brute force on random graphs") {
  std::mt19937 gen(2024);
  std::uniform_int_distribution<int> size(5, 18);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = size(gen);
    GridModel model = oracle::random_toy_model(n, 0.25, gen());
    IncidencePair inc = incidence_matrices(model);
    auto kind = trial % 2 == 0 ? ConstraintKind::Complete : ConstraintKind::DepthOne;
    auto constraint = ObservabilityConstraint::make(kind, inc);
    auto result = min_pmu_blp(constraint);
    REQUIRE(result.proven);
    CHECK(result.optimum == oracle::brute_force_min_cover(constraint.matrix));
    CHECK(check(Placement::from_support(result.witness, n).x, constraint).satisfied);
    CHECK(static_cast<int>(result.witness.size()) == result.optimum);
  }
}

TEST_CASE("greedy bound dominates the exact optimum") {
  std::mt19937 gen(99);
  std::uniform_int_distribution<int> size(8, 25);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = size(gen);
    GridModel model = oracle::random_toy_model(n, 0.2, gen());
    IncidencePair inc = incidence_matrices(model);
    auto constraint = ObservabilityConstraint::make(ConstraintKind::Complete, inc);

    // Greedy cover size, recomputed here as an oracle.
    Eigen::MatrixXi m = constraint.matrix;
    std::vector<char> covered(m.rows(), 0);
    int remaining = static_cast<int>(m.rows());
    int greedy_size = 0;
    while (remaining > 0) {
      int best = -1, best_gain = -1;
      for (int c = 0; c < m.cols(); ++c) {
        int gain = 0;
        for (int r = 0; r < m.rows(); ++r)
          if (!covered[r] && m(r, c) > 0) ++gain;
        if (gain > best_gain) {
          best_gain = gain;
          best = c;
        }
      }
      ++greedy_size;
      for (int r = 0; r < m.rows(); ++r)
        if (!covered[r] && m(r, best) > 0) {
          covered[r] = 1;
          --remaining;
        }
    }
    auto result = min_pmu_blp(constraint);
    REQUIRE(result.proven);
    CHECK(greedy_size >= result.optimum);
  }
}

TEST_CASE("uncoverable rows raise infeasibility") {
  ObservabilityConstraint constraint;
  constraint.kind = ConstraintKind::Complete;
  constraint.matrix = Eigen::MatrixXi::Zero(2, 3);
  constraint.matrix(0, 1) = 1;  // row 1 has no covering column
  CHECK_THROWS_AS(min_pmu_blp(constraint), InfeasibleError);
}

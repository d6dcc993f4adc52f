#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pmuopt/barrier.hpp"
#include "pmuopt/errors.hpp"
#include "pmuopt/observability.hpp"
#include "pmuopt/penalty.hpp"

namespace pmuopt {

// Inner convex subproblem of the penalized placement iterations:
//   minimize  sum_k c_k / (x_k + eps) + mu / g_lin(x)
//   subject   sum x = S, 0 <= x <= 1, cover rows, g_lin(x) >= trust_threshold.
// The objective Hessian is diagonal plus a rank-one term from the penalty,
// so Newton steps stay cheap at grid scale.

struct SubproblemSpec {
  Eigen::VectorXd cost;        // c_k, strictly positive
  double epsilon = 0.0;
  LinearizedG g_lin;
  double mu = 0.0;
  double trust_threshold = 0.0;
  const ObservabilityConstraint* constraint = nullptr;  // nullptr or None = no rows
  int budget = 0;
};

struct SubproblemResult {
  Eigen::VectorXd x;
  double objective = 0.0;      // value of the separable objective above
  double kkt_residual = 0.0;
  double gap = 0.0;
  int newton_steps = 0;
  bool converged = false;
  std::vector<double> newton_residuals;
};

namespace subproblem_detail {

inline BarrierSpec build_barrier_spec(const SubproblemSpec& spec) {
  const int n = static_cast<int>(spec.cost.size());
  BarrierSpec barrier;
  barrier.lower = Eigen::VectorXd::Zero(n);
  barrier.upper = Eigen::VectorXd::Ones(n);
  barrier.equality = Eigen::VectorXd::Ones(n);
  barrier.equality_rhs = static_cast<double>(spec.budget);
  if (spec.constraint != nullptr && spec.constraint->rows() > 0) {
    const auto& matrix = spec.constraint->matrix;
    for (int r = 0; r < matrix.rows(); ++r) {
      SparseRow row;
      for (int c = 0; c < matrix.cols(); ++c)
        if (matrix(r, c) > 0) {
          row.index.push_back(c);
          row.value.push_back(static_cast<double>(matrix(r, c)));
        }
      row.rhs = 1.0;
      barrier.rows.push_back(std::move(row));
    }
  }
  // Trust region on the linearized penalty denominator.
  SparseRow trust;
  for (int k = 0; k < n; ++k)
    if (spec.g_lin.slope(k) != 0.0) {
      trust.index.push_back(k);
      trust.value.push_back(spec.g_lin.slope(k));
    }
  trust.rhs = spec.trust_threshold - spec.g_lin.constant;
  barrier.rows.push_back(std::move(trust));
  return barrier;
}

}  // namespace subproblem_detail

inline double subproblem_objective(const SubproblemSpec& spec, const Eigen::VectorXd& x) {
  double acc = 0.0;
  for (int k = 0; k < x.size(); ++k) acc += spec.cost(k) / (x(k) + spec.epsilon);
  if (spec.mu != 0.0) acc += spec.mu / spec.g_lin.value(x);
  return acc;
}

inline SubproblemResult solve_subproblem(const SubproblemSpec& spec,
                                         const Eigen::VectorXd& start,
                                         const BarrierOptions& options = {}) {
  const int n = static_cast<int>(spec.cost.size());
  if (spec.cost.minCoeff() < 0.0)
    throw ContractError("subproblem costs must be nonnegative");
  BarrierSpec barrier = subproblem_detail::build_barrier_spec(spec);

  auto objective = [&spec, n](const Eigen::VectorXd& z, Eigen::VectorXd* grad,
                              Eigen::MatrixXd* hess) -> double {
    double value = 0.0;
    for (int k = 0; k < n; ++k) {
      const double shifted = z(k) + spec.epsilon;
      value += spec.cost(k) / shifted;
      if (grad) (*grad)(k) += -spec.cost(k) / (shifted * shifted);
      if (hess) (*hess)(k, k) += 2.0 * spec.cost(k) / (shifted * shifted * shifted);
    }
    if (spec.mu != 0.0) {
      const double g = spec.g_lin.value(z);
      value += spec.mu / g;
      if (grad) grad->noalias() += (-spec.mu / (g * g)) * spec.g_lin.slope;
      if (hess)
        hess->noalias() +=
            (2.0 * spec.mu / (g * g * g)) * spec.g_lin.slope * spec.g_lin.slope.transpose();
    }
    return value;
  };

  Eigen::VectorXd x0 = start;
  if (!barrier_detail::strictly_feasible(barrier, x0))
    x0 = phase1_interior(barrier, Eigen::VectorXd::Constant(n, barrier.equality_rhs / n));

  BarrierResult inner = barrier_minimize(barrier, objective, x0, options);
  SubproblemResult result;
  result.x = std::move(inner.x);
  result.objective = subproblem_objective(spec, result.x);
  result.kkt_residual = inner.stationarity;
  result.gap = inner.gap;
  result.newton_steps = inner.newton_steps;
  result.converged = inner.converged;
  result.newton_residuals = std::move(inner.newton_residuals);
  return result;
}

}  // namespace pmuopt

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "pmuopt/errors.hpp"

namespace pmuopt {

// Small dense log-barrier solver for problems of the form
//   minimize f(z)  subject to  lb <= z <= ub,  a_i' z >= rhs_i,  e' z = c.
// Newton steps solve the equality-constrained KKT system directly; the
// problems here have a few hundred variables at most.

struct SparseRow {
  std::vector<int> index;
  std::vector<double> value;
  double rhs = 0.0;

  double dot(const Eigen::VectorXd& z) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < index.size(); ++i) acc += value[i] * z(index[i]);
    return acc;
  }
};

struct BarrierSpec {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::vector<SparseRow> rows;
  Eigen::VectorXd equality;
  double equality_rhs = 0.0;

  int size() const { return static_cast<int>(lower.size()); }
  int n_inequalities() const {
    return 2 * size() + static_cast<int>(rows.size());
  }
};

struct BarrierOptions {
  double t_initial = 1.0;
  double t_growth = 20.0;
  double gap_tol = 1e-10;          // target m / t
  double newton_tol = 1e-9;        // Newton decrement^2 / 2
  int max_newton_per_stage = 60;
  int max_stages = 80;
};

struct BarrierResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  double stationarity = 0.0;       // KKT stationarity residual, inf norm
  double gap = 0.0;                // m / t at exit
  int newton_steps = 0;
  bool converged = false;
  std::vector<double> newton_residuals;  // per-step decrement trace
};

namespace barrier_detail {

inline bool strictly_feasible(const BarrierSpec& spec, const Eigen::VectorXd& z, double margin = 0.0) {
  for (int k = 0; k < spec.size(); ++k)
    if (z(k) - spec.lower(k) <= margin || spec.upper(k) - z(k) <= margin) return false;
  for (const auto& row : spec.rows)
    if (row.dot(z) - row.rhs <= margin) return false;
  return true;
}

inline double barrier_value(const BarrierSpec& spec, const Eigen::VectorXd& z) {
  double acc = 0.0;
  for (int k = 0; k < spec.size(); ++k)
    acc -= std::log(z(k) - spec.lower(k)) + std::log(spec.upper(k) - z(k));
  for (const auto& row : spec.rows) acc -= std::log(row.dot(z) - row.rhs);
  return acc;
}

}  // namespace barrier_detail

// Objective: callable double(const VectorXd& z, VectorXd* grad, MatrixXd* hess);
// gradient/Hessian are accumulated into the outputs when non-null.
template <typename Objective>
BarrierResult barrier_minimize(const BarrierSpec& spec, Objective&& objective,
                               Eigen::VectorXd start, const BarrierOptions& options = {}) {
  using namespace barrier_detail;
  const int n = spec.size();
  const int m = spec.n_inequalities();
  if (start.size() != n) throw ContractError("barrier start has wrong dimension");
  if (!strictly_feasible(spec, start))
    throw ContractError("barrier start is not strictly feasible");

  BarrierResult result;
  Eigen::VectorXd z = std::move(start);
  double t = options.t_initial;

  Eigen::VectorXd grad(n);
  Eigen::MatrixXd hess(n, n);
  Eigen::MatrixXd kkt(n + 1, n + 1);
  Eigen::VectorXd rhs(n + 1);

  for (int stage = 0; stage < options.max_stages; ++stage) {
    for (int step = 0; step < options.max_newton_per_stage; ++step) {
      grad.setZero();
      hess.setZero();
      double f_val = objective(z, &grad, &hess);
      grad *= t;
      hess *= t;
      (void)f_val;
      // Box terms.
      for (int k = 0; k < n; ++k) {
        const double s_lo = z(k) - spec.lower(k);
        const double s_hi = spec.upper(k) - z(k);
        grad(k) += -1.0 / s_lo + 1.0 / s_hi;
        hess(k, k) += 1.0 / (s_lo * s_lo) + 1.0 / (s_hi * s_hi);
      }
      // General rows.
      for (const auto& row : spec.rows) {
        const double s = row.dot(z) - row.rhs;
        const double g = -1.0 / s;
        const double h = 1.0 / (s * s);
        for (std::size_t i = 0; i < row.index.size(); ++i) {
          grad(row.index[i]) += g * row.value[i];
          for (std::size_t j = 0; j < row.index.size(); ++j)
            hess(row.index[i], row.index[j]) += h * row.value[i] * row.value[j];
        }
      }

      kkt.setZero();
      kkt.topLeftCorner(n, n) = hess;
      kkt.block(0, n, n, 1) = spec.equality;
      kkt.block(n, 0, 1, n) = spec.equality.transpose();
      rhs.head(n) = -grad;
      rhs(n) = 0.0;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(kkt);
      if (ldlt.info() != Eigen::Success)
        throw NumericalError("barrier KKT factorization failed");
      Eigen::VectorXd sol = ldlt.solve(rhs);
      Eigen::VectorXd direction = sol.head(n);

      const double decrement_sq = -grad.dot(direction);
      ++result.newton_steps;
      result.newton_residuals.push_back(std::max(decrement_sq, 0.0));
      if (decrement_sq / 2.0 <= options.newton_tol) break;

      // Largest step keeping strict feasibility.
      double alpha_max = 1.0;
      for (int k = 0; k < n; ++k) {
        if (direction(k) < 0.0)
          alpha_max = std::min(alpha_max, (spec.lower(k) - z(k)) / direction(k));
        else if (direction(k) > 0.0)
          alpha_max = std::min(alpha_max, (spec.upper(k) - z(k)) / direction(k));
      }
      for (const auto& row : spec.rows) {
        double d = 0.0;
        for (std::size_t i = 0; i < row.index.size(); ++i) d += row.value[i] * direction(row.index[i]);
        if (d < 0.0) alpha_max = std::min(alpha_max, -(row.dot(z) - row.rhs) / d);
      }
      double alpha = std::min(1.0, 0.99 * alpha_max);

      const double merit0 = t * objective(z, nullptr, nullptr) + barrier_value(spec, z);
      const double directional = grad.dot(direction);
      bool accepted = false;
      for (int backtrack = 0; backtrack < 60; ++backtrack) {
        Eigen::VectorXd candidate = z + alpha * direction;
        if (strictly_feasible(spec, candidate)) {
          const double merit = t * objective(candidate, nullptr, nullptr) +
                               barrier_value(spec, candidate);
          if (merit <= merit0 + 1e-4 * alpha * directional) {
            z = std::move(candidate);
            accepted = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (!accepted) break;  // stalled; decrement check decides convergence
    }
    if (static_cast<double>(m) / t <= options.gap_tol) {
      result.converged = true;
      break;
    }
    t *= options.t_growth;
  }

  // Stationarity residual with the barrier multipliers lambda_i = 1/(t s_i).
  Eigen::VectorXd grad_f = Eigen::VectorXd::Zero(n);
  result.objective = objective(z, &grad_f, nullptr);
  Eigen::VectorXd residual = grad_f;
  for (int k = 0; k < n; ++k) {
    residual(k) -= 1.0 / (t * (z(k) - spec.lower(k)));
    residual(k) += 1.0 / (t * (spec.upper(k) - z(k)));
  }
  for (const auto& row : spec.rows) {
    const double lambda = 1.0 / (t * (row.dot(z) - row.rhs));
    for (std::size_t i = 0; i < row.index.size(); ++i)
      residual(row.index[i]) -= lambda * row.value[i];
  }
  // Multiplier for the equality from least squares against its column.
  const double nu = -residual.dot(spec.equality) / spec.equality.squaredNorm();
  residual += nu * spec.equality;
  result.stationarity = residual.cwiseAbs().maxCoeff();
  result.gap = static_cast<double>(m) / t;
  result.x = std::move(z);
  return result;
}

// Strictly feasible point of {box, rows, equality} via a slack variable:
// minimize s with rows relaxed to a_i' z + s >= rhs_i. Throws if the
// feasible region has empty interior.
inline Eigen::VectorXd phase1_interior(const BarrierSpec& spec, const Eigen::VectorXd& start_eq) {
  using namespace barrier_detail;
  if (strictly_feasible(spec, start_eq, 1e-9)) return start_eq;
  const int n = spec.size();

  BarrierSpec extended;
  extended.lower.resize(n + 1);
  extended.upper.resize(n + 1);
  extended.lower.head(n) = spec.lower;
  extended.upper.head(n) = spec.upper;
  double worst = 0.0;
  for (const auto& row : spec.rows) worst = std::max(worst, row.rhs - row.dot(start_eq));
  extended.lower(n) = -2.0;
  extended.upper(n) = worst + 2.0;
  for (const auto& row : spec.rows) {
    SparseRow relaxed = row;
    relaxed.index.push_back(n);
    relaxed.value.push_back(1.0);
    extended.rows.push_back(std::move(relaxed));
  }
  extended.equality.resize(n + 1);
  extended.equality.head(n) = spec.equality;
  extended.equality(n) = 0.0;
  extended.equality_rhs = spec.equality_rhs;

  Eigen::VectorXd z0(n + 1);
  z0.head(n) = start_eq;
  z0(n) = worst + 1.0;

  auto slack_objective = [n](const Eigen::VectorXd& z, Eigen::VectorXd* grad,
                             Eigen::MatrixXd* hess) -> double {
    if (grad) (*grad)(n) += 1.0;
    (void)hess;
    return z(n);
  };
  BarrierOptions options;
  options.gap_tol = 1e-8;
  BarrierResult result = barrier_minimize(extended, slack_objective, z0, options);
  if (result.x(n) >= -1e-9)
    throw InfeasibleError("constraint polytope has empty interior");
  Eigen::VectorXd interior = result.x.head(n);
  if (!strictly_feasible(spec, interior))
    throw InfeasibleError("phase-1 point is not strictly feasible");
  return interior;
}

// Analytic center of the constraint set (zero objective, single stage).
inline Eigen::VectorXd analytic_center(const BarrierSpec& spec, const Eigen::VectorXd& strict_start) {
  auto zero_objective = [](const Eigen::VectorXd&, Eigen::VectorXd*, Eigen::MatrixXd*) -> double {
    return 0.0;
  };
  BarrierOptions options;
  options.max_stages = 1;
  options.newton_tol = 1e-12;
  BarrierResult result = barrier_minimize(spec, zero_objective, strict_start, options);
  return result.x;
}

}  // namespace pmuopt

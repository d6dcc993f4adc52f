#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pmuopt/errors.hpp"
#include "pmuopt/grid_model.hpp"

namespace pmuopt {

enum class ConstraintKind { Complete, DepthOne, None };

inline std::string to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::Complete: return "complete";
    case ConstraintKind::DepthOne: return "depth_one";
    case ConstraintKind::None: return "none";
  }
  return "?";
}

// Covering constraint "matrix * x >= 1": bus-to-bus incidence A for
// complete observability, BA for depth-of-one unobservability.
struct ObservabilityConstraint {
  ConstraintKind kind = ConstraintKind::None;
  Eigen::MatrixXi matrix;  // 0 rows for None

  int rows() const { return static_cast<int>(matrix.rows()); }

  static ObservabilityConstraint make(ConstraintKind kind, const IncidencePair& inc) {
    ObservabilityConstraint c;
    c.kind = kind;
    switch (kind) {
      case ConstraintKind::Complete:
        c.matrix = inc.bus_to_bus;
        break;
      case ConstraintKind::DepthOne:
        c.matrix = inc.branch_to_bus * inc.bus_to_bus;
        break;
      case ConstraintKind::None:
        c.matrix.resize(0, inc.bus_to_bus.cols());
        break;
    }
    return c;
  }
};

struct CheckResult {
  bool satisfied = true;
  std::vector<int> violated_rows;
};

inline CheckResult check(const Eigen::VectorXd& x, const ObservabilityConstraint& constraint,
                         double tol = 1e-9) {
  if (constraint.rows() > 0 && constraint.matrix.cols() != x.size())
    throw ContractError("constraint/placement dimension mismatch");
  CheckResult result;
  if (constraint.rows() == 0) return result;
  Eigen::VectorXd lhs = constraint.matrix.cast<double>() * x;
  for (int r = 0; r < lhs.size(); ++r)
    if (lhs(r) < 1.0 - tol) result.violated_rows.push_back(r);
  result.satisfied = result.violated_rows.empty();
  return result;
}

// Number of buses neither metered nor adjacent to a metered bus.
inline int count_unobserved(const Eigen::VectorXd& x_binary, const Eigen::MatrixXi& bus_to_bus) {
  if (bus_to_bus.cols() != x_binary.size())
    throw ContractError("incidence/placement dimension mismatch");
  Eigen::VectorXi xi(x_binary.size());
  for (int k = 0; k < x_binary.size(); ++k) xi(k) = x_binary(k) > 0.5 ? 1 : 0;
  Eigen::VectorXi reach = bus_to_bus * xi;
  int unobserved = 0;
  for (int k = 0; k < reach.size(); ++k)
    if (reach(k) == 0) ++unobserved;
  return unobserved;
}

}  // namespace pmuopt

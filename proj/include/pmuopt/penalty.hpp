#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "pmuopt/errors.hpp"

namespace pmuopt {

// Concentration penalty machinery. On the budget polytope
// {x in [0,1]^N : sum x = S} the function g(x) = sum x_k^L (L > 1) attains
// its maximum S exactly at binary points, so
//   g_tilde(x) = 1/g(x) - 1/S
// is nonnegative there and vanishes iff x is binary.

inline double g_value(const Eigen::VectorXd& x, double exponent) {
  double sum = 0.0;
  for (int k = 0; k < x.size(); ++k) sum += std::pow(std::max(x(k), 0.0), exponent);
  return sum;
}

inline double g_tilde(const Eigen::VectorXd& x, double exponent, int budget) {
  return 1.0 / g_value(x, exponent) - 1.0 / static_cast<double>(budget);
}

// Affine minorant of g at an expansion point: g_lin(x) <= g(x) everywhere,
// with equality at the expansion point.
struct LinearizedG {
  double constant = 0.0;
  Eigen::VectorXd slope;

  double value(const Eigen::VectorXd& x) const { return constant + slope.dot(x); }
};

inline LinearizedG linearize_g(const Eigen::VectorXd& expansion, double exponent) {
  if (exponent <= 1.0) throw ContractError("penalty exponent must exceed 1");
  LinearizedG lin;
  lin.slope.resize(expansion.size());
  double sum_pow = 0.0;
  for (int k = 0; k < expansion.size(); ++k) {
    const double xk = std::max(expansion(k), 0.0);
    sum_pow += std::pow(xk, exponent);
    lin.slope(k) = xk == 0.0 ? 0.0 : exponent * std::pow(xk, exponent - 1.0);
  }
  lin.constant = -(exponent - 1.0) * sum_pow;
  return lin;
}

// Snapshot of the penalty state at one iterate.
struct PenaltyState {
  double exponent = 1.5;
  double mu = 1.0;
  double g = 0.0;
  double g_tilde = 0.0;
  LinearizedG linearized;

  static PenaltyState at(const Eigen::VectorXd& x, double exponent, double mu, int budget) {
    PenaltyState state;
    state.exponent = exponent;
    state.mu = mu;
    state.g = g_value(x, exponent);
    state.g_tilde = 1.0 / state.g - 1.0 / static_cast<double>(budget);
    state.linearized = linearize_g(x, exponent);
    return state;
  }
};

}  // namespace pmuopt

#pragma once

#include <Eigen/Dense>

#include "pmuopt/errors.hpp"
#include "pmuopt/estimation.hpp"

namespace pmuopt {

// Separable surrogate bounds for the estimation objectives, obtained by
// shifting the placement variables by epsilon and linearizing the
// trace/log-det of the inverse information matrix. The MSE surrogate is an
// upper bound that touches f_e at the expansion point; the MI surrogate is
// a touching lower bound of f_mi. Both have strictly positive per-bus
// coefficients, which makes the inner subproblems separable.

enum class SurrogateKind { MseUpper, MiLower };

struct SurrogateCoeffs {
  SurrogateKind kind = SurrogateKind::MseUpper;
  double constant = 0.0;          // a0 (MSE) or alpha0 (MI)
  Eigen::VectorXd per_bus;        // a_k or alpha_k, all > 0
  double epsilon = 0.0;
  Eigen::VectorXd expansion_point;

  // Value of the surrogate bound at x.
  double value(const Eigen::VectorXd& x) const {
    double acc = 0.0;
    for (int k = 0; k < x.size(); ++k) acc += per_bus(k) / (x(k) + epsilon);
    return kind == SurrogateKind::MseUpper ? constant + acc : constant - acc;
  }
};

// Largest epsilon with  prior.info - epsilon * sum_k G_k  still positive
// definite is 1/lambda_max of the pencil (sum G_k, prior.info); half of
// that is returned and verified by Cholesky.
inline double epsilon_select(const StatePrior& prior, const MeasurementModel& meas) {
  if (meas.precision_sum.cwiseAbs().maxCoeff() == 0.0) return 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(prior.info);
  if (llt.info() != Eigen::Success)
    throw NumericalError("prior information matrix is not positive definite");
  Eigen::MatrixXd l_inv_g =
      llt.matrixL().solve(meas.precision_sum);  // L^-1 G
  Eigen::MatrixXd congruent =
      llt.matrixL().solve(l_inv_g.transpose());  // L^-1 G L^-T
  congruent = 0.5 * (congruent + congruent.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(congruent);
  const double lambda_max = eigs.eigenvalues().maxCoeff();
  if (lambda_max <= 1e-14) return 1.0;
  double epsilon = 0.5 / lambda_max;
  // Guard against roundoff right at the boundary.
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::MatrixXd shifted = prior.info - epsilon * meas.precision_sum;
    if (Eigen::LLT<Eigen::MatrixXd>(shifted).info() == Eigen::Success) return epsilon;
    epsilon *= 0.5;
  }
  throw NumericalError("could not certify the epsilon shift");
}

inline Eigen::MatrixXd epsilon_shifted_matrix(const StatePrior& prior,
                                              const MeasurementModel& meas,
                                              double epsilon) {
  return prior.info - epsilon * meas.precision_sum;
}

// Touching upper bound of f_e at the expansion point:
//   s(x) = a0 + sum_k a_k / (x_k + eps) >= f_e(x) on [0,1]^N.
inline SurrogateCoeffs mse_surrogate(const Eigen::VectorXd& expansion,
                                     double epsilon,
                                     const StatePrior& prior,
                                     const MeasurementModel& meas) {
  SurrogateCoeffs coeffs;
  coeffs.kind = SurrogateKind::MseUpper;
  coeffs.epsilon = epsilon;
  coeffs.expansion_point = expansion;

  Eigen::MatrixXd cov = error_covariance(prior, meas, expansion);
  Eigen::MatrixXd shifted = epsilon_shifted_matrix(prior, meas, epsilon);
  if (Eigen::LLT<Eigen::MatrixXd>(shifted).info() != Eigen::Success)
    throw NumericalError("epsilon shift is not positive definite");
  coeffs.constant = (cov * cov * shifted).trace();
  coeffs.per_bus.resize(expansion.size());
  for (int k = 0; k < expansion.size(); ++k) {
    const double shift = expansion(k) + epsilon;
    coeffs.per_bus(k) = shift * shift * (cov * meas.whitened[k]).squaredNorm();
  }
  return coeffs;
}

// Touching lower bound of f_mi at the expansion point:
//   m(x) = alpha0 - sum_k alpha_k / (x_k + eps) <= f_mi(x) on [0,1]^N.
inline SurrogateCoeffs mi_surrogate(const Eigen::VectorXd& expansion,
                                    double epsilon,
                                    const StatePrior& prior,
                                    const MeasurementModel& meas) {
  SurrogateCoeffs coeffs;
  coeffs.kind = SurrogateKind::MiLower;
  coeffs.epsilon = epsilon;
  coeffs.expansion_point = expansion;

  Eigen::MatrixXd cov = error_covariance(prior, meas, expansion);
  coeffs.per_bus.resize(expansion.size());
  double cross = 0.0;
  for (int k = 0; k < expansion.size(); ++k) {
    const double shift = expansion(k) + epsilon;
    const double trace_k = (meas.whitened[k].transpose() * cov * meas.whitened[k]).trace();
    coeffs.per_bus(k) = shift * shift * trace_k;
    cross += shift * trace_k;
  }
  coeffs.constant = f_mi(prior, meas, expansion) + cross;
  return coeffs;
}

}  // namespace pmuopt

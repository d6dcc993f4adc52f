#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "pmuopt/errors.hpp"
#include "pmuopt/grid_model.hpp"
#include "pmuopt/rng.hpp"

namespace pmuopt {

// Gaussian prior on the phasor-angle state induced by injection statistics:
// theta ~ N(B^-1 u_p, B^-1 Sigma_P B^-T).
struct StatePrior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;       // R_theta
  Eigen::MatrixXd info;             // B^T Sigma_P^-1 B = R_theta^-1
  Eigen::VectorXd injection_mean;   // u_p, per unit
  Eigen::VectorXd injection_var;    // diag(Sigma_P)
};

struct InjectionStats {
  Eigen::VectorXd mean;      // u_p, per unit
  Eigen::VectorXd variance;  // diag(Sigma_P)
};

// Injection statistics from the case profile: variance is 10% of the mean
// injection. Load buses have negative net injection, so the variance uses
// the magnitude with a small floor to stay positive.
inline InjectionStats default_injection_stats(const GridModel& model, double scale) {
  InjectionStats stats;
  stats.mean = model.injection_mean(scale);
  stats.variance.resize(stats.mean.size());
  for (int k = 0; k < stats.mean.size(); ++k)
    stats.variance(k) = stats.mean(k) > 0.0 ? 0.1 * stats.mean(k)
                                            : 0.1 * std::abs(stats.mean(k)) + 1e-4;
  return stats;
}

inline StatePrior state_prior(const GridModel& model,
                              const Eigen::VectorXd& injection_mean,
                              const Eigen::VectorXd& injection_var) {
  const int n = model.n_buses;
  if (injection_mean.size() != n || injection_var.size() != n)
    throw ContractError("injection vectors must have one entry per bus");
  if (injection_var.minCoeff() <= 0.0)
    throw ValidationError("injection variances must be positive");

  StatePrior prior;
  prior.injection_mean = injection_mean;
  prior.injection_var = injection_var;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(model.susceptance);
  const double rcond_proxy = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(rcond_proxy > 0.0) || !std::isfinite(rcond_proxy))
    throw NumericalError("susceptance matrix is numerically singular");
  prior.mean = lu.solve(injection_mean);

  Eigen::MatrixXd b_scaled = injection_var.cwiseInverse().asDiagonal() * model.susceptance;
  prior.info = model.susceptance.transpose() * b_scaled;
  prior.info = 0.5 * (prior.info + prior.info.transpose()).eval();

  Eigen::LLT<Eigen::MatrixXd> llt(prior.info);
  if (llt.info() != Eigen::Success)
    throw NumericalError("prior information matrix is not positive definite");
  prior.covariance = llt.solve(Eigen::MatrixXd::Identity(n, n));
  prior.covariance = 0.5 * (prior.covariance + prior.covariance.transpose()).eval();
  return prior;
}

// Per-bus PMU measurement model. A PMU at bus k reads the bus angle plus
// one angle difference per incident branch:
//   H_k rows: e_k, then e_k - e_m for m in N(k) ascending.
//   R_wk = diag(r, rho, ..., rho), with r and rho interpreted as variances.
struct MeasurementModel {
  double voltage_noise = 0.0;      // r
  double branch_noise = 0.0;       // rho
  std::vector<Eigen::MatrixXd> regression;      // H_k, M_k x N
  std::vector<Eigen::VectorXd> noise_diag;      // diag(R_wk)
  std::vector<Eigen::MatrixXd> precision;       // G_k = H_k^T R_wk^-1 H_k
  std::vector<Eigen::MatrixXd> whitened;        // U_k = H_k^T R_wk^-1/2, so G_k = U_k U_k^T
  Eigen::MatrixXd precision_sum;                // sum_k G_k

  int n_buses() const { return static_cast<int>(regression.size()); }
  int rows(int bus) const { return static_cast<int>(regression[bus].rows()); }
};

inline MeasurementModel measurement_model(const GridModel& model,
                                          double voltage_noise,
                                          double branch_noise) {
  if (voltage_noise <= 0.0 || branch_noise <= 0.0)
    throw ValidationError("noise variances must be positive");
  const int n = model.n_buses;
  MeasurementModel meas;
  meas.voltage_noise = voltage_noise;
  meas.branch_noise = branch_noise;
  meas.regression.reserve(n);
  meas.precision_sum = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const auto& nbrs = model.adjacency[k];
    const int m_k = static_cast<int>(nbrs.size()) + 1;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m_k, n);
    Eigen::VectorXd noise(m_k);
    h(0, k) = 1.0;
    noise(0) = voltage_noise;
    for (int i = 0; i < m_k - 1; ++i) {
      h(i + 1, k) = 1.0;
      h(i + 1, nbrs[i]) = -1.0;
      noise(i + 1) = branch_noise;
    }
    Eigen::MatrixXd u = h.transpose() * noise.cwiseSqrt().cwiseInverse().asDiagonal();
    meas.precision.push_back(u * u.transpose());
    meas.precision_sum += meas.precision.back();
    meas.whitened.push_back(std::move(u));
    meas.regression.push_back(std::move(h));
    meas.noise_diag.push_back(std::move(noise));
  }
  return meas;
}

// PMU selection vector over buses; fractional values arise inside the
// continuous solvers, final outputs are binary.
struct Placement {
  Eigen::VectorXd x;
  int budget = 0;

  static Placement zeros(int n) { return Placement{Eigen::VectorXd::Zero(n), 0}; }

  static Placement from_support(const std::vector<int>& support, int n) {
    Placement p{Eigen::VectorXd::Zero(n), static_cast<int>(support.size())};
    for (int k : support) p.x(k) = 1.0;
    return p;
  }

  bool is_binary(double tol = 1e-9) const {
    for (int k = 0; k < x.size(); ++k)
      if (std::min(x(k), 1.0 - x(k)) > tol) return false;
    return true;
  }

  std::vector<int> support() const {
    std::vector<int> s;
    for (int k = 0; k < x.size(); ++k)
      if (x(k) > 0.5) s.push_back(k);
    return s;
  }

  void validate() const {
    if (x.minCoeff() < -1e-9 || x.maxCoeff() > 1.0 + 1e-9)
      throw ContractError("placement entries must lie in [0,1]");
    if (std::abs(x.sum() - budget) > 1e-9 * std::max(1.0, static_cast<double>(budget)))
      throw ContractError("placement does not sum to its budget");
  }
};

// Information matrix of the posterior: prior info + sum_k x_k G_k.
inline Eigen::MatrixXd information_matrix(const StatePrior& prior,
                                          const MeasurementModel& meas,
                                          const Eigen::VectorXd& x) {
  if (x.size() != prior.info.rows())
    throw ContractError("placement dimension mismatch");
  Eigen::MatrixXd info = prior.info;
  for (int k = 0; k < x.size(); ++k)
    if (x(k) != 0.0) info.noalias() += x(k) * meas.precision[k];
  return info;
}

// Posterior error covariance R_e(x); accepts fractional x.
inline Eigen::MatrixXd error_covariance(const StatePrior& prior,
                                        const MeasurementModel& meas,
                                        const Eigen::VectorXd& x) {
  Eigen::MatrixXd info = information_matrix(prior, meas, x);
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success)
    throw NumericalError("information matrix is not positive definite");
  Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
  return 0.5 * (cov + cov.transpose());
}

// MSE objective: trace of the error covariance.
inline double f_e(const StatePrior& prior, const MeasurementModel& meas,
                  const Eigen::VectorXd& x) {
  Eigen::MatrixXd info = information_matrix(prior, meas, x);
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success)
    throw NumericalError("information matrix is not positive definite");
  return llt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols())).trace();
}

// MI objective: log det of the information matrix, via Cholesky.
inline double f_mi(const StatePrior& prior, const MeasurementModel& meas,
                   const Eigen::VectorXd& x) {
  Eigen::MatrixXd info = information_matrix(prior, meas, x);
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success)
    throw NumericalError("information matrix is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

// d f_e / d x_k = -Trace(R_e^2 G_k); d f_mi / d x_k = Trace(R_e G_k).
inline Eigen::VectorXd f_e_gradient(const StatePrior& prior,
                                    const MeasurementModel& meas,
                                    const Eigen::VectorXd& x) {
  Eigen::MatrixXd cov = error_covariance(prior, meas, x);
  Eigen::VectorXd grad(x.size());
  for (int k = 0; k < x.size(); ++k)
    grad(k) = -(cov * meas.whitened[k]).squaredNorm();
  return grad;
}

inline Eigen::VectorXd f_mi_gradient(const StatePrior& prior,
                                     const MeasurementModel& meas,
                                     const Eigen::VectorXd& x) {
  Eigen::MatrixXd cov = error_covariance(prior, meas, x);
  Eigen::VectorXd grad(x.size());
  for (int k = 0; k < x.size(); ++k)
    grad(k) = (meas.whitened[k].transpose() * cov * meas.whitened[k]).trace();
  return grad;
}

namespace detail {

struct StackedModel {
  Eigen::MatrixXd h;        // rows of all selected buses, ascending bus order
  Eigen::VectorXd noise;    // matching noise variances
  std::vector<int> buses;
};

inline StackedModel stack_selected(const MeasurementModel& meas,
                                   const Placement& placement) {
  StackedModel stacked;
  int rows = 0;
  for (int k = 0; k < meas.n_buses(); ++k)
    if (placement.x(k) > 0.5) {
      stacked.buses.push_back(k);
      rows += meas.rows(k);
    }
  const int n = meas.n_buses() ? static_cast<int>(meas.regression[0].cols()) : 0;
  stacked.h.resize(rows, n);
  stacked.noise.resize(rows);
  int at = 0;
  for (int k : stacked.buses) {
    stacked.h.middleRows(at, meas.rows(k)) = meas.regression[k];
    stacked.noise.segment(at, meas.rows(k)) = meas.noise_diag[k];
    at += meas.rows(k);
  }
  return stacked;
}

}  // namespace detail

// Conditional-mean estimate from stacked measurements z (ascending bus
// order, branch rows in ascending neighbor order within each bus).
inline Eigen::VectorXd mmse_estimate(const StatePrior& prior,
                                     const MeasurementModel& meas,
                                     const Placement& placement,
                                     const Eigen::VectorXd& z) {
  if (!placement.is_binary())
    throw ContractError("mmse_estimate requires a binary placement");
  detail::StackedModel stacked = detail::stack_selected(meas, placement);
  if (z.size() != stacked.h.rows())
    throw ContractError("measurement vector has wrong dimension: expected " +
                        std::to_string(stacked.h.rows()) + ", got " +
                        std::to_string(z.size()));
  if (stacked.h.rows() == 0) return prior.mean;
  Eigen::MatrixXd cross = stacked.h * prior.covariance;             // H R_theta
  Eigen::MatrixXd gram = cross * stacked.h.transpose();             // H R_theta H^T
  gram.diagonal() += stacked.noise;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    throw NumericalError("measurement covariance is not positive definite");
  return prior.mean + cross.transpose() * llt.solve(z - stacked.h * prior.mean);
}

struct MonteCarloResult {
  double empirical_mse = 0.0;
  double std_error = 0.0;
  int n_samples = 0;
};

// Draws (theta, w) jointly, runs the estimator and reports the sample mean
// of |theta - theta_hat|^2 with its standard error. Sampling is
// counter-seeded per draw, so the result is independent of evaluation
// order.
inline MonteCarloResult monte_carlo_mse(const StatePrior& prior,
                                        const MeasurementModel& meas,
                                        const Placement& placement,
                                        int n_samples,
                                        std::uint64_t seed) {
  if (n_samples < 100)
    throw ContractError("monte_carlo_mse requires at least 100 samples");
  if (!placement.is_binary())
    throw ContractError("monte_carlo_mse requires a binary placement");
  const int n = static_cast<int>(prior.mean.size());
  detail::StackedModel stacked = detail::stack_selected(meas, placement);
  const int m = static_cast<int>(stacked.h.rows());

  Eigen::LLT<Eigen::MatrixXd> cov_llt(prior.covariance);
  if (cov_llt.info() != Eigen::Success)
    throw NumericalError("prior covariance is not positive definite");
  Eigen::MatrixXd cov_factor = cov_llt.matrixL();

  // Precompute the gain: K = R_theta H^T (H R_theta H^T + R_w)^-1.
  Eigen::MatrixXd gain;
  if (m > 0) {
    Eigen::MatrixXd cross = stacked.h * prior.covariance;
    Eigen::MatrixXd gram = cross * stacked.h.transpose();
    gram.diagonal() += stacked.noise;
    gain = cross.transpose() * gram.llt().solve(Eigen::MatrixXd::Identity(m, m));
  }
  Eigen::VectorXd noise_std = m > 0 ? stacked.noise.cwiseSqrt().eval() : Eigen::VectorXd();

  double sum = 0.0, sum_sq = 0.0;
  Eigen::VectorXd draw(n), theta(n), w(m), innovation(m), err(n);
  for (int s = 0; s < n_samples; ++s) {
    CounterRng rng(seed, static_cast<std::uint64_t>(s));
    for (int i = 0; i < n; ++i) draw(i) = rng.normal();
    theta = prior.mean + cov_factor * draw;
    if (m > 0) {
      for (int i = 0; i < m; ++i) w(i) = noise_std(i) * rng.normal();
      innovation = stacked.h * (theta - prior.mean) + w;
      err = theta - prior.mean - gain * innovation;
    } else {
      err = theta - prior.mean;
    }
    const double sq = err.squaredNorm();
    sum += sq;
    sum_sq += sq * sq;
  }
  MonteCarloResult result;
  result.n_samples = n_samples;
  result.empirical_mse = sum / n_samples;
  const double var = std::max(0.0, sum_sq / n_samples - result.empirical_mse * result.empirical_mse);
  result.std_error = std::sqrt(var / n_samples);
  return result;
}

}  // namespace pmuopt

#pragma once

#include <Eigen/Dense>

#include "morphoscope/gaussian.hpp"

namespace morphoscope {

// Gaussian--inverse-Wishart parameter bundle. The same type plays the prior
// and the posterior role, so fields are named role-neutrally.
struct GiwParams {
  Vec mu;
  double kappa = 0.0;
  Mat lambda;
  double nu = 0.0;

  int dim() const { return static_cast<int>(mu.size()); }
};

struct SufficientStats {
  long long count = 0;
  Vec mean_hat;  // all-zero sentinel when count == 0
  Mat scatter;   // sum of (h - mean)(h - mean)^T, all-zero when count == 0

  static SufficientStats from_data(const Eigen::Ref<const Mat>& rows);
  static SufficientStats empty(int d);
};

// Data-driven prior: mu = empirical mean, lambda = diagonal of the population
// (1/N) covariance with a small floor, nu = d + nu_offset, kappa = k0.
GiwParams default_hyperparams(const Eigen::Ref<const Mat>& value_data,
                              double k0 = 0.01, double nu_offset = 2.0);
GiwParams default_hyperparams_from_stats(const SufficientStats& stats,
                                         double k0 = 0.01, double nu_offset = 2.0);

// Degenerate hyperparameters under which the MAP estimate reduces to the MLE
// (kappa=0, lambda=0, nu=-(d+2)). Test/diagnostic use only.
GiwParams mle_hyperparams(int d);

GiwParams posterior_update(const GiwParams& prior, const SufficientStats& stats);

// Posterior mode: mean = mu, cov = lambda / (nu + d + 2).
GaussianParams map_estimate(const GiwParams& post);

// Natural-log inverse-Wishart density of sigma with scale matrix lambda and
// nu degrees of freedom, normalizer included.
double iw_log_density(const Mat& sigma, const Mat& lambda, double nu);

// log of the multivariate gamma function Gamma_d(a).
double multivariate_lgamma(int d, double a);

}  // namespace morphoscope

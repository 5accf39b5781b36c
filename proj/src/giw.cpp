#include "morphoscope/giw.hpp"

#include <cmath>
#include <string>

namespace morphoscope {

namespace {

constexpr double kLnPi = 1.1447298858494002;
constexpr double kLn2 = 0.6931471805599453;

// Floor for the diagonal prior scale: zero-variance embedding dimensions must
// not produce a degenerate prior.
constexpr double kRelativeVarFloor = 1e-6;
constexpr double kAbsoluteVarFloor = 1e-12;

double pd_log_det(const Mat& m, const char* what) {
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) {
    throw InvalidInput(std::string(what) + " is not positive definite");
  }
  return 2.0 * Mat(llt.matrixL()).diagonal().array().log().sum();
}

}  // namespace

SufficientStats SufficientStats::empty(int d) {
  SufficientStats s;
  s.count = 0;
  s.mean_hat = Vec::Zero(d);
  s.scatter = Mat::Zero(d, d);
  return s;
}

SufficientStats SufficientStats::from_data(const Eigen::Ref<const Mat>& rows) {
  const Eigen::Index n = rows.rows();
  const Eigen::Index d = rows.cols();
  if (n == 0) return empty(static_cast<int>(d));
  SufficientStats s;
  s.count = n;
  s.mean_hat = rows.colwise().mean();
  Mat centered = rows.rowwise() - s.mean_hat.transpose();
  s.scatter = centered.transpose() * centered;
  return s;
}

GiwParams default_hyperparams_from_stats(const SufficientStats& stats, double k0,
                                         double nu_offset) {
  if (stats.count < 2) {
    throw InsufficientData("default_hyperparams: need at least 2 rows, got " +
                           std::to_string(stats.count));
  }
  if (k0 <= 0.0) throw InvalidInput("default_hyperparams: k0 must be positive");
  const int d = static_cast<int>(stats.mean_hat.size());
  Vec variances = stats.scatter.diagonal() / static_cast<double>(stats.count);
  const double mean_var = variances.mean();
  if (mean_var <= 0.0) {
    variances.setConstant(kAbsoluteVarFloor);
  } else {
    variances = variances.cwiseMax(kRelativeVarFloor * mean_var);
  }
  GiwParams p;
  p.mu = stats.mean_hat;
  p.kappa = k0;
  p.lambda = variances.asDiagonal();
  p.nu = static_cast<double>(d) + nu_offset;
  return p;
}

GiwParams default_hyperparams(const Eigen::Ref<const Mat>& value_data, double k0,
                              double nu_offset) {
  if (value_data.rows() < 2) {
    throw InsufficientData("default_hyperparams: need at least 2 rows, got " +
                           std::to_string(value_data.rows()));
  }
  return default_hyperparams_from_stats(SufficientStats::from_data(value_data), k0,
                                        nu_offset);
}

GiwParams mle_hyperparams(int d) {
  GiwParams p;
  p.mu = Vec::Zero(d);
  p.kappa = 0.0;
  p.lambda = Mat::Zero(d, d);
  p.nu = -(static_cast<double>(d) + 2.0);
  return p;
}

GiwParams posterior_update(const GiwParams& prior, const SufficientStats& stats) {
  const int d = prior.dim();
  if (stats.mean_hat.size() != d || stats.scatter.rows() != d ||
      stats.scatter.cols() != d || prior.lambda.rows() != d || prior.lambda.cols() != d) {
    throw InvalidInput("posterior_update: dimension mismatch");
  }
  const double n = static_cast<double>(stats.count);
  GiwParams post;
  post.kappa = prior.kappa + n;
  post.nu = prior.nu + n;
  if (post.kappa > 0.0) {
    post.mu = (prior.kappa * prior.mu + n * stats.mean_hat) / post.kappa;
  } else {
    post.mu = prior.mu;
  }
  post.lambda = prior.lambda + stats.scatter;
  if (stats.count > 0 && prior.kappa > 0.0) {
    const Vec diff = stats.mean_hat - prior.mu;
    post.lambda += (n * prior.kappa / (n + prior.kappa)) * (diff * diff.transpose());
  }
  return post;
}

GaussianParams map_estimate(const GiwParams& post) {
  const int d = post.dim();
  const double denom = post.nu + static_cast<double>(d) + 2.0;
  if (denom <= 0.0) {
    throw InvalidInput("map_estimate: nu + d + 2 must be positive, got " +
                       std::to_string(denom));
  }
  return GaussianParams::make(post.mu, post.lambda / denom);
}

double multivariate_lgamma(int d, double a) {
  double out = 0.25 * static_cast<double>(d) * static_cast<double>(d - 1) * kLnPi;
  for (int j = 1; j <= d; ++j) {
    out += std::lgamma(a + 0.5 * static_cast<double>(1 - j));
  }
  return out;
}

double iw_log_density(const Mat& sigma, const Mat& lambda, double nu) {
  const Eigen::Index d = sigma.rows();
  if (sigma.cols() != d || lambda.rows() != d || lambda.cols() != d || d == 0) {
    throw InvalidInput("iw_log_density: matrices must be square and same size");
  }
  if (nu <= static_cast<double>(d) - 1.0) {
    throw InvalidInput("iw_log_density: nu must exceed d - 1");
  }
  const double log_det_lambda = pd_log_det(lambda, "lambda");
  Eigen::LLT<Mat> llt_sigma(sigma);
  if (llt_sigma.info() != Eigen::Success) {
    throw InvalidInput("sigma is not positive definite");
  }
  const double log_det_sigma =
      2.0 * Mat(llt_sigma.matrixL()).diagonal().array().log().sum();
  const double trace_term = llt_sigma.solve(lambda).trace();

  const double dd = static_cast<double>(d);
  const double log_norm = 0.5 * nu * log_det_lambda - 0.5 * nu * dd * kLn2 -
                          multivariate_lgamma(static_cast<int>(d), 0.5 * nu);
  return log_norm - 0.5 * (nu + dd + 1.0) * log_det_sigma - 0.5 * trace_term;
}

}  // namespace morphoscope

#include "morphoscope/gaussian.hpp"

#include <cmath>
#include <string>

namespace morphoscope {

namespace {

// Jitter policy for nearly singular covariances: add eps * trace(cov)/d to
// the diagonal, eps escalating tenfold from 1e-10 to 1e-4. Past that the
// matrix is treated as genuinely non-PD.
constexpr double kJitterStart = 1e-10;
constexpr double kJitterMax = 1e-4;

double jitter_unit(const Mat& cov) {
  return cov.trace() / static_cast<double>(cov.rows());
}

double log_det_from_lower(const Mat& lower) {
  return 2.0 * lower.diagonal().array().log().sum();
}

}  // namespace

GaussianParams GaussianParams::make(Vec mean, Mat cov) {
  const Eigen::Index d = mean.size();
  if (d == 0 || cov.rows() != d || cov.cols() != d) {
    throw InvalidInput("GaussianParams: mean has length " + std::to_string(d) +
                       " but covariance is " + std::to_string(cov.rows()) + "x" +
                       std::to_string(cov.cols()));
  }
  const double scale = cov.cwiseAbs().maxCoeff();
  const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9 * scale) {
    throw InvalidInput("GaussianParams: covariance not symmetric (max asymmetry " +
                       std::to_string(asym) + ")");
  }
  cov = (0.5 * (cov + cov.transpose())).eval();

  const double unit = jitter_unit(cov);
  double eps = 0.0;
  while (true) {
    Mat candidate = cov;
    if (eps > 0.0) candidate.diagonal().array() += eps * unit;
    if (Eigen::LLT<Mat>(candidate).info() == Eigen::Success) {
      GaussianParams p;
      p.mean = std::move(mean);
      p.cov = std::move(candidate);
      p.dim = static_cast<int>(d);
      return p;
    }
    if (eps == 0.0) {
      eps = kJitterStart;
    } else if (eps < kJitterMax) {
      eps *= 10.0;
    } else {
      throw NotPositiveDefinite(
          "GaussianParams: covariance not positive definite after jitter up to eps=1e-4");
    }
  }
}

void validate_subset(const DimList& subset, int dim) {
  std::vector<char> seen(static_cast<std::size_t>(dim), 0);
  for (int idx : subset) {
    if (idx < 0 || idx >= dim) {
      throw InvalidInput("dimension index " + std::to_string(idx) +
                         " out of range [0, " + std::to_string(dim) + ")");
    }
    if (seen[static_cast<std::size_t>(idx)]) {
      throw InvalidInput("duplicate dimension index " + std::to_string(idx));
    }
    seen[static_cast<std::size_t>(idx)] = 1;
  }
}

Vec subvector(const Vec& v, const DimList& idx) {
  Vec out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[idx[i]];
  return out;
}

Mat submatrix(const Mat& m, const DimList& rows, const DimList& cols) {
  Mat out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(rows[i], cols[j]);
  return out;
}

double log_pdf(const Eigen::Ref<const Vec>& x, const GaussianParams& params,
               const CholFactor& factor) {
  const int k = factor.size();
  if (x.size() != k) {
    throw InvalidInput("log_pdf: x has length " + std::to_string(x.size()) +
                       ", factor covers " + std::to_string(k) + " dims");
  }
  Vec r(k);
  for (int i = 0; i < k; ++i) {
    const int d = factor.dims[static_cast<std::size_t>(i)];
    if (d < 0 || d >= params.dim) {
      throw InvalidInput("log_pdf: factor dim " + std::to_string(d) +
                         " out of range for " + std::to_string(params.dim) + "-dim params");
    }
    r[i] = x[i] - params.mean[d];
  }
  factor.lower.topLeftCorner(k, k).triangularView<Eigen::Lower>().solveInPlace(r);
  return -0.5 * (k * kLn2Pi + factor.log_det + r.squaredNorm());
}

GaussianParams marginalize(const GaussianParams& params, const DimList& subset) {
  validate_subset(subset, params.dim);
  GaussianParams out;
  out.mean = subvector(params.mean, subset);
  out.cov = submatrix(params.cov, subset, subset);
  out.dim = static_cast<int>(subset.size());
  return out;
}

CholFactor chol_factor(const GaussianParams& params, const DimList& subset) {
  validate_subset(subset, params.dim);
  const Eigen::Index k = static_cast<Eigen::Index>(subset.size());
  CholFactor f;
  f.dims = subset;
  if (k == 0) {
    f.lower = Mat(0, 0);
    f.log_det = 0.0;
    return f;
  }
  Mat sub = submatrix(params.cov, subset, subset);
  const double unit = jitter_unit(params.cov);
  double eps = 0.0;
  while (true) {
    Mat candidate = sub;
    if (eps > 0.0) candidate.diagonal().array() += eps * unit;
    Eigen::LLT<Mat> llt(candidate);
    if (llt.info() == Eigen::Success) {
      f.lower = llt.matrixL();
      f.log_det = log_det_from_lower(f.lower);
      return f;
    }
    if (eps == 0.0) {
      eps = kJitterStart;
    } else if (eps < kJitterMax) {
      eps *= 10.0;
    } else {
      throw NotPositiveDefinite("chol_factor: submatrix not positive definite after jitter");
    }
  }
}

CholFactor chol_extend(const CholFactor& factor, const GaussianParams& params,
                       int new_dim) {
  if (new_dim < 0 || new_dim >= params.dim) {
    throw InvalidInput("chol_extend: dimension " + std::to_string(new_dim) + " out of range");
  }
  for (int d : factor.dims) {
    if (d == new_dim) {
      throw InvalidInput("chol_extend: dimension " + std::to_string(new_dim) +
                         " already in factor");
    }
  }
  const int k = factor.size();
  Vec cross(k);
  for (int i = 0; i < k; ++i) cross[i] = params.cov(factor.dims[static_cast<std::size_t>(i)], new_dim);
  Vec w = cross;
  if (k > 0) {
    factor.lower.topLeftCorner(k, k).triangularView<Eigen::Lower>().solveInPlace(w);
  }
  const double diag = params.cov(new_dim, new_dim);
  const double wsq = w.squaredNorm();
  double rem = diag - wsq;
  if (rem <= 0.0) {
    const double unit = jitter_unit(params.cov);
    for (double eps = kJitterStart; eps <= kJitterMax * 1.0000001; eps *= 10.0) {
      rem = diag + eps * unit - wsq;
      if (rem > 0.0) break;
    }
    if (rem <= 0.0) {
      throw NotPositiveDefinite("chol_extend: pivot not positive for dimension " +
                                std::to_string(new_dim));
    }
  }

  CholFactor out;
  out.dims = factor.dims;
  out.dims.push_back(new_dim);
  out.lower = Mat::Zero(k + 1, k + 1);
  out.lower.topLeftCorner(k, k) = factor.lower;
  out.lower.row(k).head(k) = w.transpose();
  out.lower(k, k) = std::sqrt(rem);
  out.log_det = factor.log_det + std::log(rem);
  return out;
}

}  // namespace morphoscope

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "morphoscope/errors.hpp"

namespace morphoscope {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using DimList = std::vector<int>;

inline constexpr double kLn2Pi = 1.8378770664093453;

// Mean + covariance of one dense multivariate Gaussian. Immutable after
// construction; build through make() so the covariance is symmetrized and
// guaranteed factorizable (see jitter policy in gaussian.cpp).
struct GaussianParams {
  Vec mean;
  Mat cov;
  int dim = 0;

  static GaussianParams make(Vec mean, Mat cov);
};

// Lower-triangular Cholesky factor of a covariance submatrix, together with
// the original dimension indices it covers (in selection order) and the
// cached log-determinant of that submatrix.
struct CholFactor {
  Mat lower;
  double log_det = 0.0;
  DimList dims;

  int size() const { return static_cast<int>(dims.size()); }
};

// Natural-log density of x under params restricted to factor.dims.
// x must already be restricted to those dims, in the same order.
double log_pdf(const Eigen::Ref<const Vec>& x, const GaussianParams& params,
               const CholFactor& factor);

// Gaussian marginal over `subset` (order preserved): sub-vector of the mean,
// principal submatrix of the covariance.
GaussianParams marginalize(const GaussianParams& params, const DimList& subset);

// Fresh factorization of the covariance submatrix at `subset`.
CholFactor chol_factor(const GaussianParams& params, const DimList& subset);

// Bordered update: factor for dims ++ [new_dim] from the existing factor via
// one triangular solve and one scalar pivot.
CholFactor chol_extend(const CholFactor& factor, const GaussianParams& params,
                       int new_dim);

// Entry-picking helpers shared across modules.
Vec subvector(const Vec& v, const DimList& idx);
Mat submatrix(const Mat& m, const DimList& rows, const DimList& cols);

// Throws InvalidInput on duplicate or out-of-range indices.
void validate_subset(const DimList& subset, int dim);

}  // namespace morphoscope

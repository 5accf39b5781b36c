#pragma once

#include <string>
#include <vector>

#include "morphoscope/gaussian.hpp"
#include "morphoscope/giw.hpp"

namespace morphoscope {

struct AttributeSchema {
  std::string attribute;
  std::vector<std::string> values;  // order is significant (argmax tie-break)

  int index_of(const std::string& value) const;
};

enum class PriorScope { value, pooled };

struct HyperPolicy {
  double k0 = 0.01;
  double nu_offset = 2.0;  // nu = d + nu_offset
  PriorScope scope = PriorScope::value;
  bool mle = false;  // degenerate hyperparameters; test/diagnostic use only
};

struct ModelProvenance {
  std::string dataset_id;
  std::string tool_version;
  std::string fit_timestamp;
  HyperPolicy policy;
};

// One Gaussian per attribute value plus a categorical prior. Fit once at the
// full dimensionality; probes for dimension subsets come from marginalizing
// the stored parameters, never from refitting.
struct ProbeModel {
  AttributeSchema schema;
  std::vector<GaussianParams> gaussians;  // aligned with schema.values
  std::vector<double> class_prior;        // positive, sums to 1
  int dim = 0;
  ModelProvenance provenance;

  int n_values() const { return static_cast<int>(schema.values.size()); }
};

// Fits the per-value Gaussians (MAP under the default prior, or MLE under
// policy.mle) and the categorical prior from training counts.
// X holds one full-d row per token; y holds value indices into the schema.
ProbeModel fit(const AttributeSchema& schema, const Eigen::Ref<const Mat>& X,
               const std::vector<int>& y, const HyperPolicy& policy = {});

// Probe for one dimension subset: caches a Cholesky factor of every value's
// marginal covariance so per-row evaluation costs one triangular solve per
// value. Immutable after construction.
class SubsetEvaluator {
 public:
  SubsetEvaluator(const ProbeModel& model, DimList subset);

  // O(k^2) bordered update instead of a fresh factorization.
  SubsetEvaluator extend(int new_dim) const;

  const DimList& subset() const { return subset_; }
  const ProbeModel& model() const { return *model_; }

  // ln p(v) + ln N(h_sub | marginal_v) for every value; h_sub restricted to
  // the subset, in subset order.
  Vec log_joint(const Eigen::Ref<const Vec>& h_sub) const;

  // Posterior over values given the restricted embedding; sums to 1.
  Vec posterior(const Eigen::Ref<const Vec>& h_sub) const;

  // Sum over rows of ln p(v_n | h_n restricted to the subset). X holds full-d
  // rows; restriction happens internally. Summation is in input order.
  double log_likelihood(const Eigen::Ref<const Mat>& X, const std::vector<int>& y) const;

  Mat restrict_rows(const Eigen::Ref<const Mat>& X) const;

 private:
  SubsetEvaluator() = default;

  const ProbeModel* model_ = nullptr;
  DimList subset_;
  std::vector<CholFactor> factors_;  // one per value
  std::vector<double> log_prior_;
};

// Total parameter count of the probe: n_values Gaussians plus the categorical.
long long param_count(int d, int n_values);
// Parameters of a single d-dimensional Gaussian: d(d+1)/2 covariance + d mean.
long long gaussian_param_count(int d);

}  // namespace morphoscope

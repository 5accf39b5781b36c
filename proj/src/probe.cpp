#include "morphoscope/probe.hpp"

#include <cmath>
#include <set>
#include <string>

namespace morphoscope {

int AttributeSchema::index_of(const std::string& value) const {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == value) return static_cast<int>(i);
  }
  return -1;
}

ProbeModel fit(const AttributeSchema& schema, const Eigen::Ref<const Mat>& X,
               const std::vector<int>& y, const HyperPolicy& policy) {
  const int n_values = static_cast<int>(schema.values.size());
  if (n_values < 2) {
    throw InvalidInput("fit: attribute '" + schema.attribute +
                       "' needs at least 2 values, has " + std::to_string(n_values));
  }
  {
    std::set<std::string> unique(schema.values.begin(), schema.values.end());
    if (static_cast<int>(unique.size()) != n_values) {
      throw InvalidInput("fit: schema for '" + schema.attribute + "' has duplicate values");
    }
  }
  const Eigen::Index n = X.rows();
  if (static_cast<Eigen::Index>(y.size()) != n || n == 0) {
    throw InvalidInput("fit: X has " + std::to_string(n) + " rows but y has " +
                       std::to_string(y.size()) + " labels");
  }
  const int d = static_cast<int>(X.cols());

  std::vector<long long> counts(static_cast<std::size_t>(n_values), 0);
  for (int label : y) {
    if (label < 0 || label >= n_values) {
      throw InvalidInput("fit: label index " + std::to_string(label) + " out of range");
    }
    ++counts[static_cast<std::size_t>(label)];
  }
  for (int v = 0; v < n_values; ++v) {
    if (counts[static_cast<std::size_t>(v)] < 2) {
      throw InsufficientData("fit: value '" + schema.values[static_cast<std::size_t>(v)] +
                             "' has " + std::to_string(counts[static_cast<std::size_t>(v)]) +
                             " training rows; need at least 2");
    }
  }

  // Gather per-value rows once.
  std::vector<Mat> rows_v(static_cast<std::size_t>(n_values));
  for (int v = 0; v < n_values; ++v) {
    rows_v[static_cast<std::size_t>(v)] = Mat(counts[static_cast<std::size_t>(v)], d);
  }
  {
    std::vector<Eigen::Index> fill(static_cast<std::size_t>(n_values), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int v = y[static_cast<std::size_t>(i)];
      rows_v[static_cast<std::size_t>(v)].row(fill[static_cast<std::size_t>(v)]++) = X.row(i);
    }
  }

  GiwParams pooled_prior;
  if (!policy.mle && policy.scope == PriorScope::pooled) {
    pooled_prior = default_hyperparams(X, policy.k0, policy.nu_offset);
  }

  ProbeModel model;
  model.schema = schema;
  model.dim = d;
  model.gaussians.reserve(static_cast<std::size_t>(n_values));
  model.class_prior.resize(static_cast<std::size_t>(n_values));
  model.provenance.policy = policy;
  for (int v = 0; v < n_values; ++v) {
    const SufficientStats stats = SufficientStats::from_data(rows_v[static_cast<std::size_t>(v)]);
    GiwParams prior;
    if (policy.mle) {
      prior = mle_hyperparams(d);
    } else if (policy.scope == PriorScope::pooled) {
      prior = pooled_prior;
    } else {
      prior = default_hyperparams_from_stats(stats, policy.k0, policy.nu_offset);
    }
    model.gaussians.push_back(map_estimate(posterior_update(prior, stats)));
    model.class_prior[static_cast<std::size_t>(v)] =
        static_cast<double>(counts[static_cast<std::size_t>(v)]) / static_cast<double>(n);
  }
  return model;
}

SubsetEvaluator::SubsetEvaluator(const ProbeModel& model, DimList subset)
    : model_(&model), subset_(std::move(subset)) {
  validate_subset(subset_, model.dim);
  factors_.reserve(model.gaussians.size());
  log_prior_.reserve(model.gaussians.size());
  for (std::size_t v = 0; v < model.gaussians.size(); ++v) {
    factors_.push_back(chol_factor(model.gaussians[v], subset_));
    log_prior_.push_back(std::log(model.class_prior[v]));
  }
}

SubsetEvaluator SubsetEvaluator::extend(int new_dim) const {
  SubsetEvaluator out;
  out.model_ = model_;
  out.subset_ = subset_;
  out.subset_.push_back(new_dim);
  out.log_prior_ = log_prior_;
  out.factors_.reserve(factors_.size());
  for (std::size_t v = 0; v < factors_.size(); ++v) {
    out.factors_.push_back(chol_extend(factors_[v], model_->gaussians[v], new_dim));
  }
  return out;
}

Vec SubsetEvaluator::log_joint(const Eigen::Ref<const Vec>& h_sub) const {
  const int n_values = static_cast<int>(factors_.size());
  Vec out(n_values);
  for (int v = 0; v < n_values; ++v) {
    out[v] = log_prior_[static_cast<std::size_t>(v)] +
             log_pdf(h_sub, model_->gaussians[static_cast<std::size_t>(v)],
                     factors_[static_cast<std::size_t>(v)]);
  }
  return out;
}

Vec SubsetEvaluator::posterior(const Eigen::Ref<const Vec>& h_sub) const {
  Vec lj = log_joint(h_sub);
  const double m = lj.maxCoeff();
  Vec p = (lj.array() - m).exp();
  p /= p.sum();
  return p;
}

Mat SubsetEvaluator::restrict_rows(const Eigen::Ref<const Mat>& X) const {
  if (X.cols() != model_->dim) {
    throw InvalidInput("rows have " + std::to_string(X.cols()) + " columns, model has dim " +
                       std::to_string(model_->dim));
  }
  Mat sub(X.rows(), static_cast<Eigen::Index>(subset_.size()));
  for (std::size_t t = 0; t < subset_.size(); ++t) {
    sub.col(static_cast<Eigen::Index>(t)) = X.col(subset_[t]);
  }
  return sub;
}

double SubsetEvaluator::log_likelihood(const Eigen::Ref<const Mat>& X,
                                       const std::vector<int>& y) const {
  const Eigen::Index n = X.rows();
  if (static_cast<Eigen::Index>(y.size()) != n || n == 0) {
    throw InvalidInput("log_likelihood: need matching, nonempty rows and labels");
  }
  const int n_values = static_cast<int>(factors_.size());
  const Mat sub = restrict_rows(X);
  double total = 0.0;
  Vec lj(n_values);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int gold = y[static_cast<std::size_t>(i)];
    if (gold < 0 || gold >= n_values) {
      throw InvalidInput("log_likelihood: unknown label index " + std::to_string(gold));
    }
    lj = log_joint(sub.row(i).transpose());
    const double m = lj.maxCoeff();
    const double lse = m + std::log((lj.array() - m).exp().sum());
    total += lj[gold] - lse;
  }
  return total;
}

long long gaussian_param_count(int d) {
  const long long dd = d;
  return dd * (dd + 1) / 2 + dd;
}

long long param_count(int d, int n_values) {
  if (d < 1 || n_values < 2) {
    throw InvalidInput("param_count: need d >= 1 and n_values >= 2");
  }
  return static_cast<long long>(n_values) * gaussian_param_count(d) +
         (static_cast<long long>(n_values) - 1);
}

}  // namespace morphoscope

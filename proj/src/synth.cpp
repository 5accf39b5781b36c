#include "morphoscope/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include <json.hpp>

namespace morphoscope {

namespace {

using nlohmann::json;

Vec parse_vec(const json& j, int d, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != d) {
    throw InvalidSpec(what + " must be an array of length " + std::to_string(d));
  }
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

Mat parse_mat(const json& j, int d, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != d) {
    throw InvalidSpec(what + " must be a " + std::to_string(d) + "x" + std::to_string(d) +
                      " nested array");
  }
  Mat m(d, d);
  for (int i = 0; i < d; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<int>(row.size()) != d) {
      throw InvalidSpec(what + " row " + std::to_string(i) + " has wrong length");
    }
    for (int k = 0; k < d; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

}  // namespace

SynthSpec SynthSpec::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidSpec(std::string("spec is not valid JSON: ") + e.what());
  }
  SynthSpec spec;
  try {
    spec.d = j.at("d").get<int>();
    spec.attribute = j.value("attribute", std::string("Class"));
    spec.seed = j.at("seed").get<std::uint64_t>();
    const auto& splits = j.at("n_per_split");
    spec.n_per_split = {splits.at("train").get<long long>(),
                        splits.at("validation").get<long long>(),
                        splits.at("test").get<long long>()};
    for (const auto& jv : j.at("values")) {
      SynthValueSpec v;
      v.name = jv.at("name").get<std::string>();
      v.weight = jv.at("weight").get<double>();
      v.mean = parse_vec(jv.at("mean"), spec.d, "mean of '" + v.name + "'");
      v.cov = parse_mat(jv.at("cov"), spec.d, "cov of '" + v.name + "'");
      spec.values.push_back(std::move(v));
    }
    if (j.contains("informative_dims")) {
      for (const auto& idx : j.at("informative_dims")) {
        spec.informative_dims.push_back(idx.get<int>());
      }
    }
  } catch (const json::exception& e) {
    throw InvalidSpec(std::string("bad spec field: ") + e.what());
  }
  spec.validate();
  return spec;
}

SynthSpec SynthSpec::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open spec file '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string SynthSpec::to_json_text() const {
  json j;
  j["d"] = d;
  j["attribute"] = attribute;
  j["seed"] = seed;
  j["n_per_split"] = {{"train", n_per_split[0]},
                      {"validation", n_per_split[1]},
                      {"test", n_per_split[2]}};
  j["informative_dims"] = informative_dims;
  j["values"] = json::array();
  for (const auto& v : values) {
    json jv;
    jv["name"] = v.name;
    jv["weight"] = v.weight;
    jv["mean"] = std::vector<double>(v.mean.data(), v.mean.data() + v.mean.size());
    std::vector<std::vector<double>> cov_rows;
    for (int i = 0; i < d; ++i) {
      cov_rows.emplace_back(v.cov.row(i).data(), v.cov.row(i).data() + d);
    }
    jv["cov"] = cov_rows;
    j["values"].push_back(std::move(jv));
  }
  return j.dump(2);
}

void SynthSpec::validate() const {
  if (d < 1) throw InvalidSpec("d must be >= 1");
  if (values.empty()) throw InvalidSpec("spec needs at least one value");
  double weight_sum = 0.0;
  for (const auto& v : values) {
    if (v.name.empty()) throw InvalidSpec("value names must be nonempty");
    if (v.weight <= 0.0) throw InvalidSpec("weight of '" + v.name + "' must be positive");
    weight_sum += v.weight;
    if (v.mean.size() != d || v.cov.rows() != d || v.cov.cols() != d) {
      throw InvalidSpec("parameters of '" + v.name + "' have wrong dimensions");
    }
    const double asym = (v.cov - v.cov.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-9 * std::max(v.cov.cwiseAbs().maxCoeff(), 1e-300)) {
      throw InvalidSpec("covariance of '" + v.name + "' is not symmetric");
    }
    if (Eigen::LLT<Mat>(v.cov).info() != Eigen::Success) {
      throw InvalidSpec("covariance of '" + v.name + "' is not positive definite");
    }
  }
  if (std::abs(weight_sum - 1.0) > 1e-9) {
    throw InvalidSpec("weights sum to " + std::to_string(weight_sum) + ", expected 1");
  }
  std::vector<char> informative(static_cast<std::size_t>(d), 0);
  for (int idx : informative_dims) {
    if (idx < 0 || idx >= d) throw InvalidSpec("informative dim " + std::to_string(idx) + " out of range");
    informative[static_cast<std::size_t>(idx)] = 1;
  }
  for (int i = 0; i < d; ++i) {
    if (informative[static_cast<std::size_t>(i)]) continue;
    for (std::size_t v = 1; v < values.size(); ++v) {
      const bool same_mean = values[v].mean[i] == values[0].mean[i];
      const bool same_var = values[v].cov(i, i) == values[0].cov(i, i);
      if (!same_mean || !same_var) {
        throw InvalidSpec("dim " + std::to_string(i) +
                          " differs across values but is not declared informative");
      }
    }
  }
}

EmbeddingDataset generate(const SynthSpec& spec) {
  spec.validate();
  const int d = spec.d;
  const int n_values = static_cast<int>(spec.values.size());

  std::vector<Mat> chol(static_cast<std::size_t>(n_values));
  std::vector<double> cumulative(static_cast<std::size_t>(n_values));
  double acc = 0.0;
  for (int v = 0; v < n_values; ++v) {
    Eigen::LLT<Mat> llt(spec.values[static_cast<std::size_t>(v)].cov);
    chol[static_cast<std::size_t>(v)] = llt.matrixL();
    acc += spec.values[static_cast<std::size_t>(v)].weight;
    cumulative[static_cast<std::size_t>(v)] = acc;
  }
  cumulative.back() = 1.0;  // guard against rounding in the final bucket

  long long total = 0;
  for (long long n : spec.n_per_split) total += n;

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::MatrixXf embeddings(total, d);
  std::vector<LabeledToken> tokens;
  tokens.reserve(static_cast<std::size_t>(total));
  long long row = 0;
  Vec z(d);
  for (int s = 0; s < kNumSplits; ++s) {
    for (long long i = 0; i < spec.n_per_split[static_cast<std::size_t>(s)]; ++i, ++row) {
      const double u = unif(rng);
      int v = 0;
      while (v + 1 < n_values && u > cumulative[static_cast<std::size_t>(v)]) ++v;
      for (int k = 0; k < d; ++k) z[k] = normal(rng);
      const Vec x = spec.values[static_cast<std::size_t>(v)].mean +
                    chol[static_cast<std::size_t>(v)] * z;
      embeddings.row(row) = x.cast<float>();

      LabeledToken token;
      token.row_index = row;
      token.split = static_cast<Split>(s);
      token.word_form = "w" + std::to_string(row);
      token.tag.emplace_back(spec.attribute, spec.values[static_cast<std::size_t>(v)].name);
      tokens.push_back(std::move(token));
    }
  }
  return make_dataset(std::move(embeddings), std::move(tokens));
}

namespace {

constexpr double kSqrt2Pi = 2.5066282746310002;

struct Mixture1d {
  const std::vector<double>& means;
  const std::vector<double>& sds;
  const std::vector<double>& weights;

  // p(h) * H(V | h) in bits
  double integrand(double h) const {
    const std::size_t n = means.size();
    double total = 0.0;
    double max_log = -std::numeric_limits<double>::infinity();
    std::vector<double> log_joint(n);
    for (std::size_t v = 0; v < n; ++v) {
      const double zscore = (h - means[v]) / sds[v];
      log_joint[v] = std::log(weights[v]) - std::log(sds[v] * kSqrt2Pi) - 0.5 * zscore * zscore;
      max_log = std::max(max_log, log_joint[v]);
    }
    for (std::size_t v = 0; v < n; ++v) total += std::exp(log_joint[v] - max_log);
    const double log_ph = max_log + std::log(total);
    const double ph = std::exp(log_ph);
    if (ph <= 0.0) return 0.0;
    double ent = 0.0;  // bits
    for (std::size_t v = 0; v < n; ++v) {
      const double p = std::exp(log_joint[v] - log_ph);
      if (p > 0.0) ent -= p * std::log2(p);
    }
    return ph * ent;
  }
};

double adaptive_simpson(const Mixture1d& f, double a, double b, double fa, double fm,
                        double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f.integrand(lm);
  const double frm = f.integrand(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double true_mi_1d(const std::vector<double>& means, const std::vector<double>& variances,
                  const std::vector<double>& weights) {
  const std::size_t n = means.size();
  if (n == 0 || variances.size() != n || weights.size() != n) {
    throw InvalidInput("true_mi_1d: means/variances/weights must be same nonempty length");
  }
  std::vector<double> sds(n);
  double label_entropy = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < n; ++v) {
    if (variances[v] <= 0.0) throw InvalidInput("true_mi_1d: variances must be positive");
    if (weights[v] <= 0.0) throw InvalidInput("true_mi_1d: weights must be positive");
    sds[v] = std::sqrt(variances[v]);
    label_entropy -= weights[v] * std::log2(weights[v]);
    lo = std::min(lo, means[v] - 12.0 * sds[v]);
    hi = std::max(hi, means[v] + 12.0 * sds[v]);
  }
  const Mixture1d f{means, sds, weights};
  const double fa = f.integrand(lo);
  const double fb = f.integrand(hi);
  const double m = 0.5 * (lo + hi);
  const double fm = f.integrand(m);
  const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
  const double cond = adaptive_simpson(f, lo, hi, fa, fm, fb, whole, 1e-6, 40);
  return label_entropy - cond;
}

namespace {

// Naive subset log-likelihood: explicit submatrix inverse and determinant.
double naive_subset_loglik(const ProbeModel& model, const Eigen::Ref<const Mat>& X,
                           const std::vector<int>& y, const DimList& subset) {
  const int k = static_cast<int>(subset.size());
  const int n_values = model.n_values();
  std::vector<Mat> inv(static_cast<std::size_t>(n_values));
  std::vector<double> log_norm(static_cast<std::size_t>(n_values));
  std::vector<Vec> mean(static_cast<std::size_t>(n_values));
  for (int v = 0; v < n_values; ++v) {
    const auto& g = model.gaussians[static_cast<std::size_t>(v)];
    Mat sub(k, k);
    Vec mu(k);
    for (int i = 0; i < k; ++i) {
      mu[i] = g.mean[subset[static_cast<std::size_t>(i)]];
      for (int j = 0; j < k; ++j) {
        sub(i, j) = g.cov(subset[static_cast<std::size_t>(i)], subset[static_cast<std::size_t>(j)]);
      }
    }
    inv[static_cast<std::size_t>(v)] = sub.inverse();
    log_norm[static_cast<std::size_t>(v)] =
        std::log(model.class_prior[static_cast<std::size_t>(v)]) -
        0.5 * (k * kLn2Pi + std::log(sub.determinant()));
    mean[static_cast<std::size_t>(v)] = mu;
  }

  double total = 0.0;
  Vec lp(n_values);
  Vec h(k);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (int t = 0; t < k; ++t) h[t] = X(i, subset[static_cast<std::size_t>(t)]);
    for (int v = 0; v < n_values; ++v) {
      const Vec diff = h - mean[static_cast<std::size_t>(v)];
      lp[v] = log_norm[static_cast<std::size_t>(v)] -
              0.5 * diff.dot(inv[static_cast<std::size_t>(v)] * diff);
    }
    const double mx = lp.maxCoeff();
    const double lse = mx + std::log((lp.array() - mx).exp().sum());
    total += lp[y[static_cast<std::size_t>(i)]] - lse;
  }
  return total;
}

bool next_combination(DimList& c, int d) {
  const int k = static_cast<int>(c.size());
  for (int i = k - 1; i >= 0; --i) {
    if (c[static_cast<std::size_t>(i)] < d - k + i) {
      ++c[static_cast<std::size_t>(i)];
      for (int t = i + 1; t < k; ++t)
        c[static_cast<std::size_t>(t)] = c[static_cast<std::size_t>(t - 1)] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

BruteForceResult brute_force_best_subset(const ProbeModel& model,
                                         const Eigen::Ref<const Mat>& X,
                                         const std::vector<int>& y, int k) {
  const int d = model.dim;
  if (k < 1 || k > d) throw InvalidInput("brute_force_best_subset: k must be in [1, d]");
  const double count = subset_count(d, k);
  if (count > 2e6) {
    throw TooLarge("brute_force_best_subset: " + std::to_string(count) +
                   " subsets exceed the 2e6 guard");
  }

  DimList current(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) current[static_cast<std::size_t>(i)] = i;
  std::vector<double> scores;
  double best_val = -std::numeric_limits<double>::infinity();
  do {
    const double score = naive_subset_loglik(model, X, y, current);
    scores.push_back(score);
    best_val = std::max(best_val, score);
  } while (next_combination(current, d));

  for (int i = 0; i < k; ++i) current[static_cast<std::size_t>(i)] = i;
  std::size_t idx = 0;
  BruteForceResult result;
  do {
    if (scores[idx] >= best_val - 1e-9) {
      result.subset = current;
      result.value = scores[idx];
      return result;
    }
    ++idx;
  } while (next_combination(current, d));
  throw Error("brute_force_best_subset: unreachable");
}

BruteForceResult brute_force_best_subset(const EmbeddingDataset& dataset,
                                         const std::string& attribute, int k,
                                         const HyperPolicy& policy) {
  const FilterResult filter = filter_attribute_values(dataset, attribute);
  if (filter.attribute_excluded) {
    throw InsufficientData("attribute '" + attribute + "' has fewer than 2 usable values");
  }
  const AttributeView train = make_view(dataset, filter.schema, Split::train);
  const AttributeView val = make_view(dataset, filter.schema, Split::validation);
  const ProbeModel model = fit(filter.schema, train.X, train.y, policy);
  return brute_force_best_subset(model, val.X, val.y, k);
}

}  // namespace morphoscope

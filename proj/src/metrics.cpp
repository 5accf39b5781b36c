#include "morphoscope/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace morphoscope {

namespace {
constexpr double kLn2 = 0.6931471805599453;

std::vector<double> label_frequencies(const std::vector<int>& labels, int n_values) {
  if (labels.empty()) throw InvalidInput("metrics: empty label list");
  std::vector<double> freq(static_cast<std::size_t>(n_values), 0.0);
  for (int label : labels) {
    if (label < 0 || label >= n_values) {
      throw InvalidInput("metrics: label index " + std::to_string(label) + " out of range");
    }
    freq[static_cast<std::size_t>(label)] += 1.0;
  }
  for (double& f : freq) f /= static_cast<double>(labels.size());
  return freq;
}

}  // namespace

double accuracy(const SubsetEvaluator& eval, const Eigen::Ref<const Mat>& X,
                const std::vector<int>& y) {
  const Eigen::Index n = X.rows();
  if (static_cast<Eigen::Index>(y.size()) != n || n == 0) {
    throw InvalidInput("accuracy: need matching, nonempty rows and labels");
  }
  const Mat sub = eval.restrict_rows(X);
  long long correct = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec lj = eval.log_joint(sub.row(i).transpose());
    int best = 0;
    for (int v = 1; v < lj.size(); ++v) {
      if (lj[v] > lj[best]) best = v;  // strict: ties keep schema order
    }
    if (best == y[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

double entropy_plugin(const std::vector<int>& labels, int n_values) {
  const std::vector<double> freq = label_frequencies(labels, n_values);
  double h = 0.0;
  for (double f : freq) {
    if (f > 0.0) h -= f * std::log2(f);
  }
  return h;
}

double majority_baseline(const std::vector<int>& labels, int n_values) {
  const std::vector<double> freq = label_frequencies(labels, n_values);
  double best = 0.0;
  for (double f : freq) best = std::max(best, f);
  return best;
}

double conditional_entropy_upper(const SubsetEvaluator& eval,
                                 const Eigen::Ref<const Mat>& X,
                                 const std::vector<int>& y) {
  // -1/N sum log2 p(gold | h) == -loglik / (N ln 2)
  const double ll = eval.log_likelihood(X, y);
  return -ll / (static_cast<double>(X.rows()) * kLn2);
}

double mi_estimate(const SubsetEvaluator& eval, const Eigen::Ref<const Mat>& X,
                   const std::vector<int>& y) {
  const double h = entropy_plugin(y, eval.model().n_values());
  if (h == 0.0) {
    throw DegenerateSplit("mi_estimate: evaluation split has a single value");
  }
  return h - conditional_entropy_upper(eval, X, y);
}

MetricCurve MetricCurve::from_steps(const std::vector<double>& accuracy_per_prefix,
                                    const std::vector<double>& mi_per_prefix,
                                    double entropy_bits) {
  if (accuracy_per_prefix.size() != mi_per_prefix.size()) {
    throw InvalidInput("MetricCurve: accuracy and mi vectors differ in length");
  }
  MetricCurve curve;
  curve.entropy_bits = entropy_bits;
  curve.accuracy = accuracy_per_prefix;
  curve.mi_bits = mi_per_prefix;
  curve.lba.resize(accuracy_per_prefix.size());
  curve.lbmi_bits.resize(mi_per_prefix.size());
  curve.lbnmi.resize(mi_per_prefix.size());
  double best_acc = -std::numeric_limits<double>::infinity();
  double best_mi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < accuracy_per_prefix.size(); ++i) {
    best_acc = std::max(best_acc, accuracy_per_prefix[i]);
    best_mi = std::max(best_mi, mi_per_prefix[i]);
    curve.lba[i] = best_acc;
    curve.lbmi_bits[i] = best_mi;
    curve.lbnmi[i] = entropy_bits > 0.0 ? best_mi / entropy_bits
                                        : std::numeric_limits<double>::quiet_NaN();
  }
  return curve;
}

}  // namespace morphoscope

#pragma once

#include <vector>

#include "morphoscope/probe.hpp"

namespace morphoscope {

// Fraction of rows whose posterior argmax matches the gold value. Argmax ties
// go to the earlier value in schema order.
double accuracy(const SubsetEvaluator& eval, const Eigen::Ref<const Mat>& X,
                const std::vector<int>& y);

// Plug-in entropy of the label distribution, in bits. 0 log 0 := 0.
double entropy_plugin(const std::vector<int>& labels, int n_values);

// Average negative log2 posterior probability of the gold value, in bits.
// Upper-bounds the true conditional entropy H(V|H).
double conditional_entropy_upper(const SubsetEvaluator& eval,
                                 const Eigen::Ref<const Mat>& X,
                                 const std::vector<int>& y);

// entropy_plugin - conditional_entropy_upper, both from the same split.
// May be negative; reported unclamped. Throws DegenerateSplit when the split
// has a single value (entropy 0).
double mi_estimate(const SubsetEvaluator& eval, const Eigen::Ref<const Mat>& X,
                   const std::vector<int>& y);

// Fraction of the most frequent label (constant-prediction baseline).
double majority_baseline(const std::vector<int>& labels, int n_values);

// Per-prefix metric columns for a selection trace. lba/lbmi are running
// maxima of accuracy/mi over prefix length; lbnmi divides lbmi by the label
// entropy of the evaluation split.
struct MetricCurve {
  std::vector<double> accuracy;
  std::vector<double> lba;
  std::vector<double> mi_bits;
  std::vector<double> lbmi_bits;
  std::vector<double> lbnmi;
  double entropy_bits = 0.0;

  static MetricCurve from_steps(const std::vector<double>& accuracy_per_prefix,
                                const std::vector<double>& mi_per_prefix,
                                double entropy_bits);
};

}  // namespace morphoscope

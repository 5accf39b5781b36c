#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "morphoscope/dataset.hpp"
#include "morphoscope/selection.hpp"

namespace morphoscope {

struct SynthValueSpec {
  std::string name;
  double weight = 0.0;
  Vec mean;
  Mat cov;
};

// Generation recipe for a labeled Gaussian-mixture dataset with declared
// informative dimensions. All non-informative dimensions must have identical
// per-class marginal parameters.
struct SynthSpec {
  int d = 0;
  std::string attribute = "Class";
  std::vector<SynthValueSpec> values;
  std::array<long long, kNumSplits> n_per_split{0, 0, 0};
  std::uint64_t seed = 0;
  DimList informative_dims;

  static SynthSpec from_json_text(const std::string& text);
  static SynthSpec from_json_file(const std::string& path);
  std::string to_json_text() const;

  void validate() const;  // throws InvalidSpec
};

// Samples labels from the weights and rows from the per-value Gaussians.
// Deterministic for a fixed seed within one build (std::mt19937_64 +
// std::normal_distribution). Word forms are "w<row>" so type counts equal
// token counts.
EmbeddingDataset generate(const SynthSpec& spec);

// True mutual information of a 1-D Gaussian mixture label<->value channel,
// in bits, by adaptive quadrature (absolute error <= 1e-4 bits).
double true_mi_1d(const std::vector<double>& means, const std::vector<double>& variances,
                  const std::vector<double>& weights);

struct BruteForceResult {
  DimList subset;
  double value = 0.0;
};

// Independent cross-check for exhaustive_select: naive per-subset evaluation
// through explicit inverses and determinants, no Cholesky machinery.
BruteForceResult brute_force_best_subset(const ProbeModel& model,
                                         const Eigen::Ref<const Mat>& X,
                                         const std::vector<int>& y, int k);

// Dataset-level wrapper: filter, fit on train, search on validation.
BruteForceResult brute_force_best_subset(const EmbeddingDataset& dataset,
                                         const std::string& attribute, int k,
                                         const HyperPolicy& policy = {});

}  // namespace morphoscope

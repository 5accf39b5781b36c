#pragma once

#include <string>
#include <vector>

#include "morphoscope/metrics.hpp"
#include "morphoscope/probe.hpp"

namespace morphoscope {

enum class Criterion { log_likelihood, accuracy };

const char* criterion_name(Criterion c);
Criterion parse_criterion(const std::string& name);  // "loglik" | "accuracy"

struct SelectionStep {
  int chosen_dim = -1;
  double criterion_value = 0.0;  // best over all candidates at this step
  double loglik_nats = 0.0;      // held-out log-likelihood of the prefix
  double accuracy = 0.0;
  double mi_bits = 0.0;
};

struct SelectionTrace {
  Criterion criterion = Criterion::log_likelihood;
  std::vector<SelectionStep> steps;
  int max_k = 0;
  std::string attribute;
  std::string dataset_id;

  DimList chosen_dims() const;
};

struct PrefixMetrics {
  double loglik = 0.0;
  double accuracy = 0.0;
  double mi_bits = 0.0;
};

// Incremental scorer behind greedy selection and per-prefix evaluation.
// Keeps, per attribute value, the Cholesky factor of the current prefix and
// the whitened residuals of every row, so scoring a candidate dimension costs
// one O(k^2) bordered update plus O(N k) per value instead of a refit.
class GreedySelector {
 public:
  GreedySelector(const ProbeModel& model, const Eigen::Ref<const Mat>& X,
                 const std::vector<int>& y, Criterion criterion, int workers,
                 int capacity_hint = 64);

  // Extends the prefix by `dim` without scanning candidates.
  void commit(int dim);
  void seed_prefix(const DimList& dims);

  // Scores every unchosen dimension, commits the best (ties: lowest index
  // within 1e-9), and returns its step record.
  SelectionStep step();

  PrefixMetrics prefix_metrics() const;
  const DimList& chosen() const { return chosen_; }
  double entropy_bits() const { return entropy_bits_; }
  int dim() const;

 private:
  struct ValueState {
    CholFactor factor;
    Mat z;     // rows x capacity; leftCols(k) hold whitened residuals
    Vec q;     // per-row squared norm of the residual
    double log_prior = 0.0;
  };
  struct Extension {
    Vec w;
    double pivot = 0.0;
    bool ok = false;
  };

  Extension extend_value(const ValueState& vs, const GaussianParams& g, int dim) const;
  double score_candidate(int dim, Mat& lp_scratch) const;
  void ensure_capacity(int k);

  const ProbeModel* model_;
  Mat X_;  // rows cast to double, one per labeled token
  std::vector<int> y_;
  std::vector<ValueState> values_;
  DimList chosen_;
  std::vector<char> is_chosen_;
  Criterion criterion_;
  int workers_;
  double entropy_bits_;
};

struct GreedyOptions {
  int max_k = 50;
  Criterion criterion = Criterion::log_likelihood;
  int workers = 0;  // 0 = hardware concurrency
};

// Forward selection on held-out data. Runs for min(max_k, d) steps and keeps
// selecting even when the criterion decreases.
SelectionTrace greedy_select(const ProbeModel& model, const Eigen::Ref<const Mat>& X,
                             const std::vector<int>& y, const GreedyOptions& opts = {});

struct ExhaustiveResult {
  DimList subset;
  double value = 0.0;
  long long n_subsets = 0;
};

// Enumerates all size-k subsets in lexicographic order; guarded at 2e6
// subsets (TooLarge beyond). Ties go to the lexicographically first subset
// within 1e-9 of the maximum.
ExhaustiveResult exhaustive_select(const ProbeModel& model,
                                   const Eigen::Ref<const Mat>& X,
                                   const std::vector<int>& y, int k,
                                   Criterion criterion = Criterion::log_likelihood);

// Recomputes each prefix's criterion value with fresh factorizations.
std::vector<double> recheck_trace(const ProbeModel& model, const Eigen::Ref<const Mat>& X,
                                  const std::vector<int>& y, const SelectionTrace& trace);

// Number of size-k subsets of d dimensions, saturating at the guard limit.
double subset_count(int d, int k);

}  // namespace morphoscope

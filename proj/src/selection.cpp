#include "morphoscope/selection.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "morphoscope/log.hpp"

namespace morphoscope {

namespace {
constexpr double kLn2 = 0.6931471805599453;
constexpr double kTieTolerance = 1e-9;
constexpr double kSubsetGuard = 2e6;
constexpr double kInf = std::numeric_limits<double>::infinity();

int effective_workers(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
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

double evaluate_subset(const ProbeModel& model, const Eigen::Ref<const Mat>& X,
                       const std::vector<int>& y, const DimList& subset,
                       Criterion criterion) {
  SubsetEvaluator eval(model, subset);
  return criterion == Criterion::log_likelihood ? eval.log_likelihood(X, y)
                                                : accuracy(eval, X, y);
}

}  // namespace

const char* criterion_name(Criterion c) {
  return c == Criterion::log_likelihood ? "loglik" : "accuracy";
}

Criterion parse_criterion(const std::string& name) {
  if (name == "loglik") return Criterion::log_likelihood;
  if (name == "accuracy") return Criterion::accuracy;
  throw InvalidInput("unknown criterion '" + name + "' (expected loglik or accuracy)");
}

DimList SelectionTrace::chosen_dims() const {
  DimList dims;
  dims.reserve(steps.size());
  for (const auto& s : steps) dims.push_back(s.chosen_dim);
  return dims;
}

GreedySelector::GreedySelector(const ProbeModel& model, const Eigen::Ref<const Mat>& X,
                               const std::vector<int>& y, Criterion criterion,
                               int workers, int capacity_hint)
    : model_(&model),
      X_(X),
      y_(y),
      criterion_(criterion),
      workers_(effective_workers(workers)) {
  if (X_.rows() == 0 || static_cast<std::size_t>(X_.rows()) != y_.size()) {
    throw InvalidInput("selection: need a nonempty split with matching labels");
  }
  if (X_.cols() != model.dim) {
    throw InvalidInput("selection: data has " + std::to_string(X_.cols()) +
                       " dims, model has " + std::to_string(model.dim));
  }
  const int n_values = model.n_values();
  for (int label : y_) {
    if (label < 0 || label >= n_values) {
      throw InvalidInput("selection: label index " + std::to_string(label) + " out of range");
    }
  }
  entropy_bits_ = entropy_plugin(y_, n_values);
  is_chosen_.assign(static_cast<std::size_t>(model.dim), 0);

  const int cap = std::min(std::max(capacity_hint, 1), model.dim);
  values_.resize(static_cast<std::size_t>(n_values));
  for (int v = 0; v < n_values; ++v) {
    auto& vs = values_[static_cast<std::size_t>(v)];
    vs.factor = CholFactor{Mat(0, 0), 0.0, {}};
    vs.z = Mat(X_.rows(), cap);
    vs.q = Vec::Zero(X_.rows());
    vs.log_prior = std::log(model.class_prior[static_cast<std::size_t>(v)]);
  }
}

int GreedySelector::dim() const { return model_->dim; }

void GreedySelector::ensure_capacity(int k) {
  for (auto& vs : values_) {
    if (vs.z.cols() < k) {
      const Eigen::Index grown = std::min<Eigen::Index>(model_->dim, vs.z.cols() * 2 + 1);
      vs.z.conservativeResize(Eigen::NoChange, std::max<Eigen::Index>(grown, k));
    }
  }
}

GreedySelector::Extension GreedySelector::extend_value(const ValueState& vs,
                                                       const GaussianParams& g,
                                                       int dim) const {
  const int k = vs.factor.size();
  Extension ext;
  ext.w = Vec(k);
  for (int i = 0; i < k; ++i)
    ext.w[i] = g.cov(vs.factor.dims[static_cast<std::size_t>(i)], dim);
  if (k > 0) {
    vs.factor.lower.topLeftCorner(k, k)
        .triangularView<Eigen::Lower>()
        .solveInPlace(ext.w);
  }
  const double diag = g.cov(dim, dim);
  const double wsq = ext.w.squaredNorm();
  double rem = diag - wsq;
  if (rem <= 0.0) {
    // Same escalation as chol_extend; candidates that stay non-PD are skipped.
    const double unit = g.cov.trace() / static_cast<double>(g.dim);
    for (double eps = 1e-10; eps <= 1e-4 * 1.0000001; eps *= 10.0) {
      rem = diag + eps * unit - wsq;
      if (rem > 0.0) break;
    }
  }
  if (rem <= 0.0) return ext;  // ok stays false
  ext.pivot = std::sqrt(rem);
  ext.ok = true;
  return ext;
}

double GreedySelector::score_candidate(int dim, Mat& lp) const {
  const int k = static_cast<int>(chosen_.size());
  const int n_values = static_cast<int>(values_.size());
  const Eigen::Index n = X_.rows();

  for (int v = 0; v < n_values; ++v) {
    const auto& vs = values_[static_cast<std::size_t>(v)];
    const auto& g = model_->gaussians[static_cast<std::size_t>(v)];
    const Extension ext = extend_value(vs, g, dim);
    if (!ext.ok) return -kInf;
    const double log_det = vs.factor.log_det + 2.0 * std::log(ext.pivot);
    const double cst = vs.log_prior - 0.5 * ((k + 1) * kLn2Pi + log_det);
    // New whitened coordinate for every row, then its joint log-density.
    Vec zeta = X_.col(dim);
    zeta.array() -= g.mean[dim];
    if (k > 0) zeta.noalias() -= vs.z.leftCols(k) * ext.w;
    zeta /= ext.pivot;
    lp.col(v) = cst - 0.5 * (vs.q.array() + zeta.array().square());
  }

  if (criterion_ == Criterion::log_likelihood) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto row = lp.row(i);
      const double m = row.maxCoeff();
      const double lse = m + std::log((row.array() - m).exp().sum());
      total += lp(i, y_[static_cast<std::size_t>(i)]) - lse;
    }
    return total;
  }
  long long correct = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    for (int v = 1; v < n_values; ++v) {
      if (lp(i, v) > lp(i, best)) best = v;
    }
    if (best == y_[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

void GreedySelector::commit(int dim) {
  if (dim < 0 || dim >= model_->dim || is_chosen_[static_cast<std::size_t>(dim)]) {
    throw InvalidInput("commit: invalid or already chosen dimension " + std::to_string(dim));
  }
  const int k = static_cast<int>(chosen_.size());
  ensure_capacity(k + 1);
  for (std::size_t v = 0; v < values_.size(); ++v) {
    auto& vs = values_[v];
    const auto& g = model_->gaussians[v];
    CholFactor extended = chol_extend(vs.factor, g, dim);
    const double pivot = extended.lower(k, k);
    Vec zeta = X_.col(dim);
    zeta.array() -= g.mean[dim];
    if (k > 0) zeta.noalias() -= vs.z.leftCols(k) * extended.lower.row(k).head(k).transpose();
    zeta /= pivot;
    vs.z.col(k) = zeta;
    vs.q.array() += zeta.array().square();
    vs.factor = std::move(extended);
  }
  chosen_.push_back(dim);
  is_chosen_[static_cast<std::size_t>(dim)] = 1;
}

void GreedySelector::seed_prefix(const DimList& dims) {
  for (int d : dims) commit(d);
}

PrefixMetrics GreedySelector::prefix_metrics() const {
  const int k = static_cast<int>(chosen_.size());
  const int n_values = static_cast<int>(values_.size());
  const Eigen::Index n = X_.rows();
  Mat lp(n, n_values);
  for (int v = 0; v < n_values; ++v) {
    const auto& vs = values_[static_cast<std::size_t>(v)];
    const double cst = vs.log_prior - 0.5 * (k * kLn2Pi + vs.factor.log_det);
    lp.col(v) = cst - 0.5 * vs.q.array();
  }
  PrefixMetrics out;
  long long correct = 0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = lp.row(i);
    const double m = row.maxCoeff();
    const double lse = m + std::log((row.array() - m).exp().sum());
    total += lp(i, y_[static_cast<std::size_t>(i)]) - lse;
    int best = 0;
    for (int v = 1; v < n_values; ++v) {
      if (lp(i, v) > lp(i, best)) best = v;
    }
    if (best == y_[static_cast<std::size_t>(i)]) ++correct;
  }
  out.loglik = total;
  out.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  const double cond_bits = -total / (static_cast<double>(n) * kLn2);
  out.mi_bits = entropy_bits_ - cond_bits;
  return out;
}

SelectionStep GreedySelector::step() {
  DimList candidates;
  candidates.reserve(static_cast<std::size_t>(model_->dim) - chosen_.size());
  for (int d = 0; d < model_->dim; ++d) {
    if (!is_chosen_[static_cast<std::size_t>(d)]) candidates.push_back(d);
  }
  if (candidates.empty()) throw InvalidInput("step: no candidate dimensions left");

  std::vector<double> scores(candidates.size(), -kInf);
  const int threads = std::min<int>(workers_, static_cast<int>(candidates.size()));
  if (threads <= 1) {
    Mat lp(X_.rows(), values_.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      scores[c] = score_candidate(candidates[c], lp);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&]() {
        Mat lp(X_.rows(), values_.size());
        while (true) {
          const std::size_t c = next.fetch_add(1);
          if (c >= candidates.size()) break;
          scores[c] = score_candidate(candidates[c], lp);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  // Deterministic reduction: global max, then the lowest dimension index
  // among candidates within the tie tolerance.
  double best_val = -kInf;
  for (double s : scores) best_val = std::max(best_val, s);
  if (best_val == -kInf) {
    throw NotPositiveDefinite("step: no candidate admits a positive pivot");
  }
  int best_dim = -1;
  double best_score = -kInf;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (scores[c] >= best_val - kTieTolerance) {
      best_dim = candidates[c];
      best_score = scores[c];
      break;  // candidates are in increasing dimension order
    }
  }

  commit(best_dim);
  const PrefixMetrics pm = prefix_metrics();
  SelectionStep step;
  step.chosen_dim = best_dim;
  step.criterion_value = best_score;
  step.loglik_nats = pm.loglik;
  step.accuracy = pm.accuracy;
  step.mi_bits = pm.mi_bits;
  return step;
}

SelectionTrace greedy_select(const ProbeModel& model, const Eigen::Ref<const Mat>& X,
                             const std::vector<int>& y, const GreedyOptions& opts) {
  if (opts.max_k < 1) throw InvalidInput("greedy_select: max_k must be >= 1");
  int k_eff = opts.max_k;
  if (k_eff > model.dim) {
    log_warn("greedy_select: max_k " + std::to_string(opts.max_k) + " clamped to d = " +
             std::to_string(model.dim));
    k_eff = model.dim;
  }
  GreedySelector selector(model, X, y, opts.criterion, opts.workers, k_eff);
  SelectionTrace trace;
  trace.criterion = opts.criterion;
  trace.max_k = k_eff;
  trace.attribute = model.schema.attribute;
  trace.steps.reserve(static_cast<std::size_t>(k_eff));
  for (int t = 0; t < k_eff; ++t) trace.steps.push_back(selector.step());
  return trace;
}

double subset_count(int d, int k) {
  double count = 1.0;
  for (int i = 0; i < k; ++i) {
    count *= static_cast<double>(d - i) / static_cast<double>(i + 1);
    if (count > 1e18) return count;  // saturate; far past any guard
  }
  return count;
}

ExhaustiveResult exhaustive_select(const ProbeModel& model,
                                   const Eigen::Ref<const Mat>& X,
                                   const std::vector<int>& y, int k,
                                   Criterion criterion) {
  const int d = model.dim;
  if (k < 1 || k > d) {
    throw InvalidInput("exhaustive_select: k must be in [1, d]");
  }
  const double count = subset_count(d, k);
  if (count > kSubsetGuard) {
    throw TooLarge("exhaustive_select: " + std::to_string(count) +
                   " subsets exceed the 2e6 guard");
  }

  DimList current(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) current[static_cast<std::size_t>(i)] = i;
  std::vector<double> scores;
  scores.reserve(static_cast<std::size_t>(count));
  double best_val = -kInf;
  do {
    const double score = evaluate_subset(model, X, y, current, criterion);
    scores.push_back(score);
    best_val = std::max(best_val, score);
  } while (next_combination(current, d));

  // Second enumeration pass (no scoring) to find the lexicographically first
  // subset within the tie tolerance of the maximum.
  for (int i = 0; i < k; ++i) current[static_cast<std::size_t>(i)] = i;
  std::size_t idx = 0;
  ExhaustiveResult result;
  result.n_subsets = static_cast<long long>(scores.size());
  do {
    if (scores[idx] >= best_val - kTieTolerance) {
      result.subset = current;
      result.value = scores[idx];
      return result;
    }
    ++idx;
  } while (next_combination(current, d));
  throw Error("exhaustive_select: unreachable");  // LCOV_EXCL_LINE
}

std::vector<double> recheck_trace(const ProbeModel& model, const Eigen::Ref<const Mat>& X,
                                  const std::vector<int>& y, const SelectionTrace& trace) {
  std::vector<double> values;
  values.reserve(trace.steps.size());
  DimList prefix;
  for (const auto& step : trace.steps) {
    prefix.push_back(step.chosen_dim);
    values.push_back(evaluate_subset(model, X, y, prefix, trace.criterion));
  }
  return values;
}

}  // namespace morphoscope

#include "morphoscope/commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "morphoscope/log.hpp"
#include "morphoscope/model_io.hpp"
#include "morphoscope/scatter.hpp"
#include "morphoscope/synth.hpp"
#include "morphoscope/util.hpp"

namespace morphoscope {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return std::string(buf);
}

EmbeddingDataset load_from_config(const RunConfig& config) {
  if (config.matrix_path.empty() || config.labels_path.empty()) {
    throw InvalidInput("--dataset and --labels are required");
  }
  return load_dataset(config.matrix_path, config.labels_path);
}

Split split_or(const RunConfig& config, Split fallback) {
  if (config.split.empty()) return fallback;
  const auto parsed = parse_split(config.split);
  if (!parsed) throw InvalidInput("unknown split '" + config.split + "'");
  return *parsed;
}

json dataset_provenance(const RunConfig& config, const EmbeddingDataset& dataset) {
  json j;
  j["tool_version"] = kToolVersion;
  j["dataset_id"] = dataset.dataset_id;
  if (!config.matrix_path.empty()) j["matrix_file_hash"] = fnv1a_file_hex(config.matrix_path);
  if (!config.labels_path.empty()) j["labels_file_hash"] = fnv1a_file_hex(config.labels_path);
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

ProbeModel load_model_checked(const RunConfig& config, const EmbeddingDataset& dataset) {
  if (config.model_path.empty()) throw InvalidInput("--model is required");
  ProbeModel model = load_model(config.model_path);
  if (model.dim != dataset.d) {
    throw InvalidInput("model dim " + std::to_string(model.dim) + " does not match dataset d " +
                       std::to_string(dataset.d));
  }
  return model;
}

// Per-prefix metrics for a fixed dimension chain, via incremental commits.
struct EvalRun {
  std::vector<int> dims;
  std::vector<PrefixMetrics> metrics;
  MetricCurve curve;
  double majority = 0.0;
};

EvalRun evaluate_chain(const ProbeModel& model, const AttributeView& view,
                       const DimList& dims, int workers) {
  if (view.y.empty()) throw InvalidInput("evaluation split is empty");
  EvalRun run;
  GreedySelector scorer(model, view.X, view.y, Criterion::log_likelihood, workers,
                        static_cast<int>(dims.size()));
  if (scorer.entropy_bits() == 0.0) {
    throw DegenerateSplit("evaluation split has a single value");
  }
  std::vector<double> acc, mi;
  for (int dim : dims) {
    scorer.commit(dim);
    const PrefixMetrics pm = scorer.prefix_metrics();
    run.dims.push_back(dim);
    run.metrics.push_back(pm);
    acc.push_back(pm.accuracy);
    mi.push_back(pm.mi_bits);
  }
  run.curve = MetricCurve::from_steps(acc, mi, scorer.entropy_bits());
  run.majority = majority_baseline(view.y, model.n_values());
  return run;
}

json metrics_json(const EvalRun& run) {
  json rows = json::array();
  for (std::size_t i = 0; i < run.dims.size(); ++i) {
    rows.push_back({{"step", i + 1},
                    {"dim", run.dims[i]},
                    {"loglik_nats", run.metrics[i].loglik},
                    {"accuracy", run.metrics[i].accuracy},
                    {"lba", run.curve.lba[i]},
                    {"mi_bits", run.metrics[i].mi_bits},
                    {"lbmi_bits", run.curve.lbmi_bits[i]},
                    {"lbnmi", run.curve.lbnmi[i]}});
  }
  json j;
  j["entropy_bits"] = run.curve.entropy_bits;
  j["majority_baseline"] = run.majority;
  j["steps"] = rows;
  return j;
}

}  // namespace

HyperPolicy RunConfig::policy() const {
  HyperPolicy p;
  p.k0 = k0;
  p.nu_offset = nu_offset;
  if (prior_scope == "value") {
    p.scope = PriorScope::value;
  } else if (prior_scope == "pooled") {
    p.scope = PriorScope::pooled;
  } else {
    throw InvalidInput("unknown prior scope '" + prior_scope + "' (expected value or pooled)");
  }
  return p;
}

int cmd_fit(const RunConfig& config) {
  if (config.attribute.empty()) throw InvalidInput("--attribute is required");
  const EmbeddingDataset dataset = load_from_config(config);
  const FilterResult filter = filter_attribute_values(dataset, config.attribute);
  for (const auto& [value, reason] : filter.dropped) {
    log_info("dropped value '" + value + "': " + reason);
  }
  if (filter.attribute_excluded) {
    throw InsufficientData("attribute '" + config.attribute +
                           "' has fewer than 2 values surviving the word-type filter");
  }
  const AttributeView train = make_view(dataset, filter.schema, Split::train);
  ProbeModel model = fit(filter.schema, train.X, train.y, config.policy());
  model.provenance.dataset_id = dataset.dataset_id;
  model.provenance.tool_version = kToolVersion;
  model.provenance.fit_timestamp = iso_timestamp();

  fs::create_directories(config.out_dir);
  const std::string model_path = (fs::path(config.out_dir) / "model.json").string();
  save_model(model, model_path);

  std::vector<long long> counts(static_cast<std::size_t>(model.n_values()), 0);
  for (int label : train.y) ++counts[static_cast<std::size_t>(label)];
  std::cout << "attribute: " << model.schema.attribute << "\n";
  for (int v = 0; v < model.n_values(); ++v) {
    std::cout << "value " << model.schema.values[static_cast<std::size_t>(v)] << ": n="
              << counts[static_cast<std::size_t>(v)] << " prior="
              << model.class_prior[static_cast<std::size_t>(v)] << "\n";
  }
  std::cout << "dim: " << model.dim << "\n";
  std::cout << "parameters: " << param_count(model.dim, model.n_values()) << " total, "
            << gaussian_param_count(model.dim) << " per-value Gaussian term\n";
  std::cout << "model: " << model_path << "\n";
  return 0;
}

void write_trace_tsv(const std::string& path, const SelectionTrace& trace,
                     const MetricCurve& curve) {
  std::ostringstream out;
  out << "step\tdim\tcriterion\tloglik_nats\taccuracy\tmi_bits\tlba\tlbmi\tlbnmi\n";
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = trace.steps[i];
    out << (i + 1) << '\t' << s.chosen_dim << '\t' << format_double(s.criterion_value) << '\t'
        << format_double(s.loglik_nats) << '\t' << format_double(s.accuracy) << '\t'
        << format_double(s.mi_bits) << '\t' << format_double(curve.lba[i]) << '\t'
        << format_double(curve.lbmi_bits[i]) << '\t' << format_double(curve.lbnmi[i]) << '\n';
  }
  write_text_file(path, out.str());
}

SelectionTrace read_trace_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw FormatError("trace file '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("step\tdim\tcriterion", 0) != 0) {
    throw FormatError("trace file '" + path + "' has unexpected header");
  }
  SelectionTrace trace;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    SelectionStep step;
    int step_no = 0;
    double lba = 0.0, lbmi = 0.0, lbnmi = 0.0;
    if (std::sscanf(line.c_str(), "%d\t%d\t%lf\t%lf\t%lf\t%lf\t%lf\t%lf\t%lf", &step_no,
                    &step.chosen_dim, &step.criterion_value, &step.loglik_nats, &step.accuracy,
                    &step.mi_bits, &lba, &lbmi, &lbnmi) != 9) {
      throw FormatError("trace file '" + path + "' has a malformed row: " + line);
    }
    trace.steps.push_back(step);
  }
  if (trace.steps.empty()) throw InvalidInput("trace file '" + path + "' has no steps");
  trace.max_k = static_cast<int>(trace.steps.size());
  return trace;
}

int cmd_select(const RunConfig& config) {
  const EmbeddingDataset dataset = load_from_config(config);
  const ProbeModel model = load_model_checked(config, dataset);
  const Split split = split_or(config, Split::validation);
  const AttributeView view = make_view(dataset, model.schema, split);
  if (view.y.empty()) {
    throw InvalidInput("split '" + std::string(split_name(split)) +
                       "' has no rows for attribute '" + model.schema.attribute + "'");
  }
  const Criterion criterion = parse_criterion(config.criterion);

  SelectionTrace trace;
  json extra;
  if (config.strategy == "greedy") {
    GreedyOptions opts;
    opts.max_k = config.max_dims;
    opts.criterion = criterion;
    opts.workers = config.workers;
    trace = greedy_select(model, view.X, view.y, opts);
  } else if (config.strategy == "exhaustive") {
    const ExhaustiveResult best = exhaustive_select(model, view.X, view.y, config.exhaustive_k,
                                                    criterion);
    // Emitted as the best subset's prefix chain so the trace format is shared.
    trace.criterion = criterion;
    trace.max_k = config.exhaustive_k;
    trace.attribute = model.schema.attribute;
    GreedySelector scorer(model, view.X, view.y, criterion, config.workers,
                          static_cast<int>(best.subset.size()));
    for (int dim : best.subset) {
      scorer.commit(dim);
      const PrefixMetrics pm = scorer.prefix_metrics();
      SelectionStep step;
      step.chosen_dim = dim;
      step.criterion_value =
          criterion == Criterion::log_likelihood ? pm.loglik : pm.accuracy;
      step.loglik_nats = pm.loglik;
      step.accuracy = pm.accuracy;
      step.mi_bits = pm.mi_bits;
      trace.steps.push_back(step);
    }
    extra["exhaustive_value"] = best.value;
    extra["n_subsets"] = best.n_subsets;
  } else {
    throw InvalidInput("unknown strategy '" + config.strategy +
                       "' (expected greedy or exhaustive)");
  }
  trace.dataset_id = dataset.dataset_id;

  std::vector<double> acc, mi;
  for (const auto& s : trace.steps) {
    acc.push_back(s.accuracy);
    mi.push_back(s.mi_bits);
  }
  const double entropy = entropy_plugin(view.y, model.n_values());
  const MetricCurve curve = MetricCurve::from_steps(acc, mi, entropy);

  fs::create_directories(config.out_dir);
  const std::string tsv_path = (fs::path(config.out_dir) / "trace.tsv").string();
  write_trace_tsv(tsv_path, trace, curve);

  json sidecar = dataset_provenance(config, dataset);
  sidecar["attribute"] = trace.attribute;
  sidecar["criterion"] = criterion_name(trace.criterion);
  sidecar["strategy"] = config.strategy;
  sidecar["split"] = split_name(split);
  sidecar["max_k"] = trace.max_k;
  sidecar["workers"] = config.workers;
  sidecar["model_file_hash"] = fnv1a_file_hex(config.model_path);
  sidecar["entropy_bits"] = entropy;
  sidecar["chosen_dims"] = trace.chosen_dims();
  if (!extra.is_null()) sidecar["exhaustive"] = extra;
  const std::string json_path = (fs::path(config.out_dir) / "trace.json").string();
  write_text_file(json_path, sidecar.dump(2) + "\n");

  std::cout << "trace: " << tsv_path << " (" << trace.steps.size() << " steps)\n";
  return 0;
}

int cmd_eval(const RunConfig& config) {
  const EmbeddingDataset dataset = load_from_config(config);
  const ProbeModel model = load_model_checked(config, dataset);
  if (config.trace_path.empty()) throw InvalidInput("--trace is required");
  const SelectionTrace trace = read_trace_tsv(config.trace_path);
  const Split split = split_or(config, Split::test);
  const AttributeView view = make_view(dataset, model.schema, split);
  DimList dims = trace.chosen_dims();
  validate_subset(dims, model.dim);

  const EvalRun run = evaluate_chain(model, view, dims, config.workers);

  fs::create_directories(config.out_dir);
  const std::string tsv_path = (fs::path(config.out_dir) / "metrics.tsv").string();
  {
    std::ostringstream out;
    out << "step\tdim\tloglik_nats\taccuracy\tlba\tmi_bits\tlbmi\tlbnmi\n";
    for (std::size_t i = 0; i < run.dims.size(); ++i) {
      out << (i + 1) << '\t' << run.dims[i] << '\t' << format_double(run.metrics[i].loglik)
          << '\t' << format_double(run.metrics[i].accuracy) << '\t'
          << format_double(run.curve.lba[i]) << '\t' << format_double(run.metrics[i].mi_bits)
          << '\t' << format_double(run.curve.lbmi_bits[i]) << '\t'
          << format_double(run.curve.lbnmi[i]) << '\n';
    }
    write_text_file(tsv_path, out.str());
  }
  json j = metrics_json(run);
  j["provenance"] = dataset_provenance(config, dataset);
  j["provenance"]["model_file_hash"] = fnv1a_file_hex(config.model_path);
  j["provenance"]["trace_file_hash"] = fnv1a_file_hex(config.trace_path);
  j["split"] = split_name(split);
  j["attribute"] = model.schema.attribute;
  const std::string json_path = (fs::path(config.out_dir) / "metrics.json").string();
  write_text_file(json_path, j.dump(2) + "\n");

  const std::size_t last = run.dims.size() - 1;
  std::cout << "split: " << split_name(split) << "\n";
  std::cout << "entropy_bits: " << run.curve.entropy_bits << "\n";
  std::cout << "majority_baseline: " << run.majority << "\n";
  std::cout << "final: accuracy=" << run.metrics[last].accuracy << " lba=" << run.curve.lba[last]
            << " mi_bits=" << run.metrics[last].mi_bits << " lbmi=" << run.curve.lbmi_bits[last]
            << " lbnmi=" << run.curve.lbnmi[last] << "\n";
  std::cout << "metrics: " << tsv_path << "\n";
  return 0;
}

int cmd_report(const RunConfig& config) {
  const EmbeddingDataset dataset = load_from_config(config);
  const ProbeModel model = load_model_checked(config, dataset);
  if (config.trace_path.empty()) throw InvalidInput("--trace is required");
  const SelectionTrace trace = read_trace_tsv(config.trace_path);
  const Split split = split_or(config, Split::test);
  const AttributeView view = make_view(dataset, model.schema, split);
  DimList dims = trace.chosen_dims();
  validate_subset(dims, model.dim);

  const EvalRun run = evaluate_chain(model, view, dims, config.workers);

  // Milestones mirror the usual 2/10/50-dimension reporting grid.
  std::vector<std::size_t> milestones;
  for (std::size_t k : {std::size_t{1}, std::size_t{2}, std::size_t{10}, std::size_t{50}}) {
    if (k <= run.dims.size()) milestones.push_back(k);
  }
  if (milestones.empty() || milestones.back() != run.dims.size()) {
    milestones.push_back(run.dims.size());
  }

  json j;
  j["attribute"] = model.schema.attribute;
  j["split"] = split_name(split);
  j["entropy_bits"] = run.curve.entropy_bits;
  j["majority_baseline"] = run.majority;
  j["provenance"] = dataset_provenance(config, dataset);
  json ms = json::array();
  std::cout << "attribute: " << model.schema.attribute << " (split " << split_name(split)
            << ")\n";
  std::cout << "entropy_bits=" << run.curve.entropy_bits << " majority_baseline=" << run.majority
            << "\n";
  std::cout << "k\tdim\tlba\tlbmi_bits\tlbnmi\n";
  for (std::size_t k : milestones) {
    const std::size_t i = k - 1;
    ms.push_back({{"k", k},
                  {"lba", run.curve.lba[i]},
                  {"lbmi_bits", run.curve.lbmi_bits[i]},
                  {"lbnmi", run.curve.lbnmi[i]}});
    std::cout << k << '\t' << run.dims[i] << '\t' << run.curve.lba[i] << '\t'
              << run.curve.lbmi_bits[i] << '\t' << run.curve.lbnmi[i] << "\n";
  }
  j["milestones"] = ms;
  fs::create_directories(config.out_dir);
  const std::string json_path = (fs::path(config.out_dir) / "report.json").string();
  write_text_file(json_path, j.dump(2) + "\n");
  std::cout << "report: " << json_path << "\n";
  return 0;
}

int cmd_scatter(const RunConfig& config) {
  const EmbeddingDataset dataset = load_from_config(config);
  const ProbeModel model = load_model_checked(config, dataset);
  if (config.dim_x < 0 || config.dim_y < 0) throw InvalidInput("--dims i,j is required");
  const Split split = split_or(config, Split::test);
  const AttributeView view = make_view(dataset, model.schema, split);

  json prov = dataset_provenance(config, dataset);
  prov["model_file_hash"] = fnv1a_file_hex(config.model_path);
  prov["dims"] = {config.dim_x, config.dim_y};
  prov["split"] = split_name(split);
  const std::string svg =
      render_scatter_svg(model, view.X, view.y, config.dim_x, config.dim_y, prov.dump());

  const std::string out_path = config.svg_path.empty()
                                   ? (fs::path(config.out_dir) / "scatter.svg").string()
                                   : config.svg_path;
  if (!fs::path(out_path).parent_path().empty()) {
    fs::create_directories(fs::path(out_path).parent_path());
  }
  write_text_file(out_path, svg);
  std::cout << "scatter: " << out_path << "\n";
  return 0;
}

int cmd_synth(const RunConfig& config) {
  if (config.spec_path.empty()) throw InvalidInput("--spec is required");
  const SynthSpec spec = SynthSpec::from_json_file(config.spec_path);
  const EmbeddingDataset dataset = generate(spec);
  fs::create_directories(config.out_dir);
  const std::string matrix_path = (fs::path(config.out_dir) / "embeddings.bin").string();
  const std::string labels_path = (fs::path(config.out_dir) / "labels.tsv").string();
  write_matrix(matrix_path, dataset.embeddings);
  write_labels(labels_path, dataset.tokens);

  json prov;
  prov["tool_version"] = kToolVersion;
  prov["generator"] = "std::mt19937_64 + std::normal_distribution";
  prov["seed"] = spec.seed;
  prov["dataset_id"] = dataset.dataset_id;
  prov["spec"] = json::parse(spec.to_json_text());
  prov["spec_file_hash"] = fnv1a_file_hex(config.spec_path);
  write_text_file((fs::path(config.out_dir) / "provenance.json").string(), prov.dump(2) + "\n");

  std::cout << "dataset: " << matrix_path << " (" << dataset.rows() << " rows, d=" << dataset.d
            << ")\n";
  return 0;
}

}  // namespace morphoscope

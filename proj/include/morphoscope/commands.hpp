#pragma once

#include <string>

#include "morphoscope/dataset.hpp"
#include "morphoscope/selection.hpp"

namespace morphoscope {

inline constexpr const char* kToolVersion = "morphoscope 0.1.0";

struct RunConfig {
  std::string matrix_path;
  std::string labels_path;
  std::string attribute;
  std::string out_dir = ".";
  std::string model_path;
  std::string trace_path;
  std::string spec_path;
  std::string svg_path;

  double k0 = 0.01;
  double nu_offset = 2.0;
  std::string prior_scope = "value";
  int max_dims = 50;
  std::string criterion = "loglik";
  std::string split;  // per-command default when empty
  int workers = 0;
  std::string strategy = "greedy";
  int exhaustive_k = 1;
  int dim_x = -1;
  int dim_y = -1;

  HyperPolicy policy() const;
};

// Each command returns the process exit code contribution (always 0; errors
// are thrown and mapped by the caller).
int cmd_fit(const RunConfig& config);
int cmd_select(const RunConfig& config);
int cmd_eval(const RunConfig& config);
int cmd_report(const RunConfig& config);
int cmd_scatter(const RunConfig& config);
int cmd_synth(const RunConfig& config);

// Trace TSV round trip (header: step dim criterion loglik_nats accuracy
// mi_bits lba lbmi lbnmi).
void write_trace_tsv(const std::string& path, const SelectionTrace& trace,
                     const MetricCurve& curve);
SelectionTrace read_trace_tsv(const std::string& path);

// Maps a thrown error onto the exit-code contract: 2 for user/spec errors,
// 1 for I/O, format, and data errors.
int run_cli(int argc, char** argv);

}  // namespace morphoscope

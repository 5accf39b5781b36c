#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "morphoscope/commands.hpp"
#include "morphoscope/log.hpp"

namespace morphoscope {

namespace {

using nlohmann::json;

struct CommandSetup {
  CLI::App* app = nullptr;
  std::string config_path;
};

void add_common_options(CLI::App* sub, RunConfig& config, CommandSetup& setup) {
  setup.app = sub;
  sub->add_option("--config", setup.config_path, "JSON config file (flags take precedence)");
  sub->add_option("--dataset", config.matrix_path, "embedding matrix file");
  sub->add_option("--labels", config.labels_path, "labels TSV file");
  sub->add_option("--attribute", config.attribute, "attribute to probe");
  sub->add_option("--out", config.out_dir, "output directory");
  sub->add_option("--workers", config.workers, "worker threads (0 = auto)");
  sub->add_option("--k0", config.k0, "prior pseudo-count on the mean");
  sub->add_option("--nu0-offset", config.nu_offset, "degrees-of-freedom offset (nu0 = d + offset)");
  sub->add_option("--prior-scope", config.prior_scope, "prior moments scope: value or pooled")
      ->check(CLI::IsMember({"value", "pooled"}));
  sub->add_option("--max-dims", config.max_dims, "selection budget");
  sub->add_option("--criterion", config.criterion, "selection criterion: loglik or accuracy")
      ->check(CLI::IsMember({"loglik", "accuracy"}));
  sub->add_option("--split", config.split, "data split: train, validation or test");
}

// Configuration precedence: flags > config file > defaults. A config value is
// applied only when its flag was not given on the command line.
void apply_config_file(const CommandSetup& setup, RunConfig& config) {
  if (setup.config_path.empty()) return;
  std::ifstream in(setup.config_path);
  if (!in) throw Error("cannot open config file '" + setup.config_path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(std::string("config file is not valid JSON: ") + e.what());
  }
  const CLI::App* app = setup.app;
  const auto used = [&](const std::string& flag) {
    const CLI::Option* opt = app->get_option_no_throw(flag);
    return opt != nullptr && opt->count() > 0;
  };
  const auto load_str = [&](const char* key, const std::string& flag, std::string& field) {
    if (j.contains(key) && !used(flag)) field = j.at(key).get<std::string>();
  };
  const auto load_int = [&](const char* key, const std::string& flag, int& field) {
    if (j.contains(key) && !used(flag)) field = j.at(key).get<int>();
  };
  load_str("dataset", "--dataset", config.matrix_path);
  load_str("labels", "--labels", config.labels_path);
  load_str("attribute", "--attribute", config.attribute);
  load_str("out", "--out", config.out_dir);
  load_str("prior_scope", "--prior-scope", config.prior_scope);
  load_str("criterion", "--criterion", config.criterion);
  load_str("split", "--split", config.split);
  load_str("model", "--model", config.model_path);
  load_str("trace", "--trace", config.trace_path);
  load_int("workers", "--workers", config.workers);
  load_int("max_dims", "--max-dims", config.max_dims);
  if (j.contains("k0") && !used("--k0")) config.k0 = j.at("k0").get<double>();
  if (j.contains("nu0_offset") && !used("--nu0-offset")) {
    config.nu_offset = j.at("nu0_offset").get<double>();
  }
}

void parse_dims_pair(const std::string& text, RunConfig& config) {
  if (text.empty()) return;
  int x = -1, y = -1;
  char trailing = 0;
  if (std::sscanf(text.c_str(), "%d,%d%c", &x, &y, &trailing) != 2) {
    throw InvalidInput("--dims expects two comma-separated indices, got '" + text + "'");
  }
  config.dim_x = x;
  config.dim_y = y;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Gaussian probe over embedding dimensions: fit, select, evaluate, plot"};
  app.require_subcommand(1);

  RunConfig config;
  std::string dims_text;

  CommandSetup fit_setup, select_setup, eval_setup, report_setup, scatter_setup, synth_setup;

  CLI::App* fit_cmd = app.add_subcommand("fit", "fit a probe for one attribute");
  add_common_options(fit_cmd, config, fit_setup);

  CLI::App* select_cmd = app.add_subcommand("select", "greedy or exhaustive dimension selection");
  add_common_options(select_cmd, config, select_setup);
  select_cmd->add_option("--model", config.model_path, "fitted model JSON");
  select_cmd->add_option("--strategy", config.strategy, "greedy or exhaustive")
      ->check(CLI::IsMember({"greedy", "exhaustive"}));
  select_cmd->add_option("--k", config.exhaustive_k, "subset size for exhaustive search");

  CLI::App* eval_cmd = app.add_subcommand("eval", "per-prefix metrics of a trace on a split");
  add_common_options(eval_cmd, config, eval_setup);
  eval_cmd->add_option("--model", config.model_path, "fitted model JSON");
  eval_cmd->add_option("--trace", config.trace_path, "selection trace TSV");

  CLI::App* report_cmd = app.add_subcommand("report", "milestone summary of a trace");
  add_common_options(report_cmd, config, report_setup);
  report_cmd->add_option("--model", config.model_path, "fitted model JSON");
  report_cmd->add_option("--trace", config.trace_path, "selection trace TSV");

  CLI::App* scatter_cmd = app.add_subcommand("scatter", "SVG scatter plot of two dimensions");
  add_common_options(scatter_cmd, config, scatter_setup);
  scatter_cmd->add_option("--model", config.model_path, "fitted model JSON");
  scatter_cmd->add_option("--dims", dims_text, "two dimensions, e.g. 3,7");
  scatter_cmd->add_option("--svg-out", config.svg_path, "output SVG path");

  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common_options(synth_cmd, config, synth_setup);
  synth_cmd->add_option("--spec", config.spec_path, "synthesis spec JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (fit_cmd->parsed()) {
      apply_config_file(fit_setup, config);
      return cmd_fit(config);
    }
    if (select_cmd->parsed()) {
      apply_config_file(select_setup, config);
      return cmd_select(config);
    }
    if (eval_cmd->parsed()) {
      apply_config_file(eval_setup, config);
      return cmd_eval(config);
    }
    if (report_cmd->parsed()) {
      apply_config_file(report_setup, config);
      return cmd_report(config);
    }
    if (scatter_cmd->parsed()) {
      apply_config_file(scatter_setup, config);
      parse_dims_pair(dims_text, config);
      return cmd_scatter(config);
    }
    if (synth_cmd->parsed()) {
      apply_config_file(synth_setup, config);
      return cmd_synth(config);
    }
    std::cerr << "no subcommand given\n";
    return 2;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NotPositiveDefinite& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InsufficientData& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const UnknownAttribute& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidTag& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const TooLarge& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DegenerateSplit& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidSpec& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    // FormatError, ConsistencyError, DataError, I/O wrappers
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace morphoscope

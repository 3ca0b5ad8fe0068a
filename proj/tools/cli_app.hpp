#pragma once

// Command-line front end: `trf fit|evaluate|lda|synth|inspect`.
// Exit codes: 0 success, 2 config/validation, 3 data format or I/O,
// 4 numerical failure.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "trf/pipeline.hpp"

namespace trf::cli {

struct CommonOptions {
  std::string config;
  std::optional<long long> seed;
  std::optional<int> workers;
  std::string output;
  std::vector<std::string> overrides;
};

inline void add_common(CLI::App* sub, CommonOptions& o, bool config_required) {
  auto* c = sub->add_option("--config", o.config, "pipeline configuration (JSON)");
  if (config_required) c->required();
  sub->add_option("--seed", o.seed, "random seed");
  sub->add_option("--workers", o.workers, "subjects processed in parallel");
  sub->add_option("--output", o.output, "output directory");
  sub->add_option("--set", o.overrides, "override a config key, e.g. lambda_grid.n=10")->take_all();
}

inline PipelineConfig resolve_config(const CommonOptions& o) {
  Json j = o.config.empty() ? default_config_json() : load_config_json(o.config);
  for (const auto& s : o.overrides) apply_override(j, s);
  if (o.seed) j["seed"] = *o.seed;
  if (o.workers) j["workers"] = *o.workers;
  if (!o.output.empty()) j["output_dir"] = o.output;
  return parse_config(j);
}

inline int inspect(const std::vector<std::string>& paths, std::ostream& out) {
  for (const auto& p : paths) {
    const auto header = read_btsr_header(p);
    out << p << ": " << header.dump() << "\n";
  }
  return 0;
}

/// Runs the CLI; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Temporal response function estimation for EEG encoding models", "trf"};
  app.require_subcommand(1);

  CommonOptions fit_opts, eval_opts, lda_opts, synth_opts;
  auto* fit = app.add_subcommand("fit", "cross-validate and fit a TRF per subject");
  add_common(fit, fit_opts, true);
  auto* evaluate = app.add_subcommand("evaluate", "score held-out data and aggregate across subjects");
  add_common(evaluate, eval_opts, true);
  auto* lda = app.add_subcommand("lda", "reduce word vectors onto POS discriminant axes");
  add_common(lda, lda_opts, true);
  auto* synth = app.add_subcommand("synth", "generate synthetic subjects with a known TRF");
  add_common(synth, synth_opts, false);
  std::vector<std::string> inspect_paths;
  auto* insp = app.add_subcommand("inspect", "print BTSR headers");
  insp->add_option("files", inspect_paths, "BTSR files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "trf: " << e.what() << "\n";
    return 2;
  }

  LogFn log = [&err](const std::string& msg) { err << "trf: " << msg << "\n"; };
  try {
    if (*fit) cmd_fit(resolve_config(fit_opts), log);
    if (*evaluate) cmd_evaluate(resolve_config(eval_opts), log);
    if (*lda) cmd_lda(resolve_config(lda_opts), log);
    if (*synth) cmd_synth(resolve_config(synth_opts), log);
    if (*insp) return inspect(inspect_paths, out);
  } catch (const Error& e) {
    err << "trf: error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const Json::exception& e) {
    err << "trf: error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "trf: error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}

}  // namespace trf::cli

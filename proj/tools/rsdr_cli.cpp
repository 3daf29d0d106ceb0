// rsdr: robust sufficient dimension reduction from the command line.
//
// Subcommands: fit | cv | simulate | outliers | roc.  Every run writes one
// JSON result document (stdout or --output); simulate and roc can also emit
// CSV tables.  A flat `key = value` config file can back any long flag;
// explicit flags always win.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <set>
#include <string>

#include "rsdr/run.hpp"
#include "rsdr/serialize.hpp"

namespace {

struct OptionRefs {
  std::map<std::string, CLI::Option*> by_key;
};

// Registers the flags a subcommand understands, bound straight into the
// RunConfig.  Returned handles let us detect which keys the command line set.
OptionRefs add_options(CLI::App* cmd, rsdr::RunConfig& config,
                       const std::set<std::string>& keys,
                       std::string& config_path) {
  OptionRefs refs;
  auto want = [&](const char* key) { return keys.count(key) > 0; };

  if (want("input"))
    refs.by_key["input"] =
        cmd->add_option("--input", config.input, "Input CSV file (header row required)");
  if (want("response"))
    refs.by_key["response"] = cmd->add_option(
        "--response", config.response,
        "Response column: header name, or 0-based index (roc: label column)");
  if (want("score"))
    refs.by_key["score"] =
        cmd->add_option("--score", config.score, "Score column for roc");
  if (want("standardize"))
    refs.by_key["standardize"] = cmd->add_flag(
        "--standardize", config.standardize,
        "Scale every predictor column to mean 0, variance 1");
  if (want("dim"))
    refs.by_key["dim"] =
        cmd->add_option("--dim", config.dim, "Target subspace dimension d");
  if (want("alpha"))
    refs.by_key["alpha"] = cmd->add_option(
        "--alpha", config.alpha,
        "Distance exponent in (0,2), or 'cv' (simulate: comma list)");
  if (want("eta"))
    refs.by_key["eta"] =
        cmd->add_option("--eta", config.eta, "Gradient regularizer eta");
  if (want("tol"))
    refs.by_key["tol"] =
        cmd->add_option("--tol", config.tol, "Objective-gain stopping tolerance");
  if (want("max-iter"))
    refs.by_key["max-iter"] =
        cmd->add_option("--max-iter", config.max_iter, "Maximum ascent iterations");
  if (want("ridge"))
    refs.by_key["ridge"] = cmd->add_option(
        "--ridge", config.ridge, "Covariance ridge (default: 1e-8 * trace/p)");
  if (want("grid"))
    refs.by_key["grid"] = cmd->add_option(
        "--grid", config.grid, "Comma list of alpha values for cross-validation");
  if (want("folds"))
    refs.by_key["folds"] =
        cmd->add_option("--folds", config.folds, "Cross-validation folds");
  if (want("gamma"))
    refs.by_key["gamma"] =
        cmd->add_option("--gamma", config.gamma, "Outlier significance level");
  if (want("boot"))
    refs.by_key["boot"] =
        cmd->add_option("--boot", config.boot, "Bootstrap replicates");
  if (want("reducer"))
    refs.by_key["reducer"] = cmd->add_option(
        "--reducer", config.reducer, "Dimension reducer: none | pca | rsdr");
  if (want("model"))
    refs.by_key["model"] =
        cmd->add_option("--model", config.model, "Simulation model: A | B | C");
  if (want("dist"))
    refs.by_key["dist"] = cmd->add_option(
        "--dist", config.dist, "Predictor distribution: gaussian | uniform");
  if (want("n"))
    refs.by_key["n"] = cmd->add_option("--n", config.n, "Sample size");
  if (want("p"))
    refs.by_key["p"] = cmd->add_option("--p", config.p, "Predictor count");
  if (want("contaminate"))
    refs.by_key["contaminate"] = cmd->add_flag(
        "--contaminate", config.contaminate,
        "Contaminate 10% of responses with 50 * sum(x)");
  if (want("reps"))
    refs.by_key["reps"] =
        cmd->add_option("--reps", config.reps, "Replications per method");
  if (want("seed"))
    refs.by_key["seed"] = cmd->add_option("--seed", config.seed, "Master seed");
  if (want("threads"))
    refs.by_key["threads"] = cmd->add_option(
        "--threads", config.threads,
        "Worker threads (never changes numeric output)");
  if (want("output"))
    refs.by_key["output"] = cmd->add_option(
        "--output", config.output, "Result JSON path (default: stdout)");
  if (want("table"))
    refs.by_key["table"] =
        cmd->add_option("--table", config.table, "CSV table output path");
  if (want("write-data"))
    refs.by_key["write-data"] = cmd->add_option(
        "--write-data", config.write_data,
        "Also write one generated dataset as CSV");
  if (want("timings"))
    refs.by_key["timings"] = cmd->add_flag(
        "--timings", config.timings,
        "Include wall-clock measurements (makes output nondeterministic)");
  cmd->add_option("--config", config_path,
                  "Flat key = value config file; flags override it");
  return refs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rsdr: robust sufficient dimension reduction"};
  app.set_version_flag("--version", std::string(rsdr::kVersion));
  app.require_subcommand(1);

  rsdr::RunConfig config;
  std::string config_path;
  std::map<std::string, OptionRefs> refs;

  const std::set<std::string> common = {"eta",     "tol",   "max-iter", "ridge",
                                        "seed",    "threads", "output",
                                        "timings"};
  auto with = [&](std::set<std::string> extra) {
    extra.insert(common.begin(), common.end());
    return extra;
  };

  CLI::App* fit = app.add_subcommand(
      "fit", "Estimate the central subspace of a CSV dataset");
  refs["fit"] = add_options(
      fit, config,
      with({"input", "response", "standardize", "dim", "alpha", "grid", "folds"}),
      config_path);

  CLI::App* cv = app.add_subcommand(
      "cv", "Cross-validate the distance exponent alpha");
  refs["cv"] = add_options(
      cv, config,
      with({"input", "response", "standardize", "dim", "grid", "folds"}),
      config_path);

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Replicate the benchmark models and report subspace angles");
  refs["simulate"] = add_options(
      simulate, config,
      with({"model", "dist", "n", "p", "contaminate", "reps", "alpha", "dim",
            "grid", "folds", "table", "write-data"}),
      config_path);

  CLI::App* outliers = app.add_subcommand(
      "outliers", "Leave-one-out influence scores with a bootstrap threshold");
  refs["outliers"] = add_options(
      outliers, config,
      with({"input", "response", "standardize", "dim", "alpha", "gamma", "boot",
            "reducer", "grid", "folds"}),
      config_path);

  CLI::App* roc_cmd = app.add_subcommand(
      "roc", "ROC curve and AUC from score and 0/1 label columns");
  refs["roc"] = add_options(roc_cmd, config,
                            {"input", "response", "score", "output", "table"},
                            config_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  for (CLI::App* cmd : {fit, cv, simulate, outliers, roc_cmd}) {
    if (!cmd->parsed()) continue;
    config.subcommand = cmd->get_name();
    if (!config_path.empty()) {
      std::set<std::string> cli_set;
      for (const auto& [key, option] : refs[config.subcommand].by_key)
        if (option->count() > 0) cli_set.insert(key);
      try {
        rsdr::apply_config_values(config, rsdr::parse_config_file(config_path),
                                  cli_set);
      } catch (const rsdr::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
      }
    }
    return rsdr::run(config);
  }
  return 1;
}

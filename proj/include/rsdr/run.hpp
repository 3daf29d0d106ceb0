#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rsdr/csv.hpp"
#include "rsdr/dataset.hpp"
#include "rsdr/errors.hpp"
#include "rsdr/estimator.hpp"
#include "rsdr/outlier.hpp"
#include "rsdr/serialize.hpp"
#include "rsdr/simulate.hpp"

namespace rsdr {

/// Everything a CLI invocation can configure.  Flags always override the
/// same keys from a config file; execution-only knobs (threads, output
/// paths, timings) never enter the result document's config echo.
struct RunConfig {
  std::string subcommand;  // fit | cv | simulate | outliers | roc

  // input/output
  std::string input;
  std::string output;      // empty = stdout
  std::string table;       // optional CSV table emission
  std::string write_data;  // simulate: dump one generated dataset
  std::string response;
  std::string score;  // roc: score column
  bool standardize = false;

  // estimation
  std::optional<int> dim;
  std::string alpha = "1";  // number, "cv", or comma list (simulate)
  double eta = 1e-6;
  double tol = 1e-8;
  int max_iter = 500;
  std::optional<double> ridge;
  std::string grid;  // comma list of alphas for cv; empty = default
  int folds = 5;

  // outlier detection
  double gamma = 0.05;
  int boot = 100;
  std::string reducer = "none";

  // simulation
  std::string model = "A";
  std::string dist = "gaussian";
  int n = 100;
  int p = 6;
  bool contaminate = false;
  int reps = 30;

  // execution
  std::uint64_t seed = 0;
  int threads = 1;
  bool timings = false;
};

namespace cli_detail {

inline double parse_double_value(const std::string& key, const std::string& raw) {
  double out = 0.0;
  if (!detail::parse_double(raw, out))
    throw ParameterError("config: '" + key + "' expects a number, got '" + raw + "'");
  return out;
}

inline int parse_int_value(const std::string& key, const std::string& raw) {
  const double v = parse_double_value(key, raw);
  if (v != std::floor(v))
    throw ParameterError("config: '" + key + "' expects an integer");
  return static_cast<int>(v);
}

inline bool parse_bool_value(const std::string& key, std::string raw) {
  raw = detail::trim(raw);
  for (char& c : raw) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (raw == "true" || raw == "1" || raw == "yes" || raw == "on" || raw.empty())
    return true;
  if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
  throw ParameterError("config: '" + key + "' expects a boolean, got '" + raw + "'");
}

inline std::vector<double> parse_double_list(const std::string& key,
                                             const std::string& raw) {
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(parse_double_value(key, item));
  if (out.empty()) throw ParameterError("config: '" + key + "' is empty");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

/// One setter per long-flag name; config files share this table.
inline const std::map<std::string, Setter>& config_keys() {
  static const std::map<std::string, Setter> table = {
      {"input", [](RunConfig& c, const std::string& v) { c.input = v; }},
      {"output", [](RunConfig& c, const std::string& v) { c.output = v; }},
      {"table", [](RunConfig& c, const std::string& v) { c.table = v; }},
      {"write-data", [](RunConfig& c, const std::string& v) { c.write_data = v; }},
      {"response", [](RunConfig& c, const std::string& v) { c.response = v; }},
      {"score", [](RunConfig& c, const std::string& v) { c.score = v; }},
      {"standardize",
       [](RunConfig& c, const std::string& v) { c.standardize = parse_bool_value("standardize", v); }},
      {"dim", [](RunConfig& c, const std::string& v) { c.dim = parse_int_value("dim", v); }},
      {"alpha", [](RunConfig& c, const std::string& v) { c.alpha = detail::trim(v); }},
      {"eta", [](RunConfig& c, const std::string& v) { c.eta = parse_double_value("eta", v); }},
      {"tol", [](RunConfig& c, const std::string& v) { c.tol = parse_double_value("tol", v); }},
      {"max-iter",
       [](RunConfig& c, const std::string& v) { c.max_iter = parse_int_value("max-iter", v); }},
      {"ridge", [](RunConfig& c, const std::string& v) { c.ridge = parse_double_value("ridge", v); }},
      {"grid", [](RunConfig& c, const std::string& v) { c.grid = detail::trim(v); }},
      {"folds", [](RunConfig& c, const std::string& v) { c.folds = parse_int_value("folds", v); }},
      {"gamma", [](RunConfig& c, const std::string& v) { c.gamma = parse_double_value("gamma", v); }},
      {"boot", [](RunConfig& c, const std::string& v) { c.boot = parse_int_value("boot", v); }},
      {"reducer", [](RunConfig& c, const std::string& v) { c.reducer = detail::trim(v); }},
      {"model", [](RunConfig& c, const std::string& v) { c.model = detail::trim(v); }},
      {"dist", [](RunConfig& c, const std::string& v) { c.dist = detail::trim(v); }},
      {"n", [](RunConfig& c, const std::string& v) { c.n = parse_int_value("n", v); }},
      {"p", [](RunConfig& c, const std::string& v) { c.p = parse_int_value("p", v); }},
      {"contaminate",
       [](RunConfig& c, const std::string& v) { c.contaminate = parse_bool_value("contaminate", v); }},
      {"reps", [](RunConfig& c, const std::string& v) { c.reps = parse_int_value("reps", v); }},
      {"seed",
       [](RunConfig& c, const std::string& v) {
         const double num = parse_double_value("seed", v);
         if (num < 0 || num != std::floor(num))
           throw ParameterError("config: 'seed' expects a nonnegative integer");
         c.seed = static_cast<std::uint64_t>(num);
       }},
      {"threads",
       [](RunConfig& c, const std::string& v) { c.threads = parse_int_value("threads", v); }},
      {"timings",
       [](RunConfig& c, const std::string& v) { c.timings = parse_bool_value("timings", v); }},
  };
  return table;
}

}  // namespace cli_detail

/// Parses a flat `key = value` config file ('#' starts a comment).
inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("config: cannot open '" + path + "'");
  std::map<std::string, std::string> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InputError("config: line " + std::to_string(line_no) +
                       " is not 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (!cli_detail::config_keys().count(key))
      throw ParameterError("config: unknown key '" + key + "'");
    out[key] = value;
  }
  return out;
}

/// Applies config-file values to keys the command line did not set.
inline void apply_config_values(RunConfig& config,
                                const std::map<std::string, std::string>& values,
                                const std::set<std::string>& cli_set_keys) {
  for (const auto& [key, value] : values) {
    if (cli_set_keys.count(key)) continue;  // flags win
    const auto it = cli_detail::config_keys().find(key);
    if (it == cli_detail::config_keys().end())
      throw ParameterError("config: unknown key '" + key + "'");
    it->second(config, value);
  }
}

namespace cli_detail {

inline Model parse_model(const std::string& raw) {
  if (raw == "A" || raw == "a") return Model::A;
  if (raw == "B" || raw == "b") return Model::B;
  if (raw == "C" || raw == "c") return Model::C;
  throw ParameterError("model must be one of A, B, C");
}

inline PredictorDist parse_dist(const std::string& raw) {
  if (raw == "gaussian") return PredictorDist::gaussian;
  if (raw == "uniform") return PredictorDist::uniform;
  throw ParameterError("dist must be 'gaussian' or 'uniform'");
}

inline Reducer parse_reducer(const std::string& raw) {
  if (raw == "none") return Reducer::none;
  if (raw == "pca") return Reducer::pca;
  if (raw == "rsdr") return Reducer::rsdr;
  throw ParameterError("reducer must be one of none, pca, rsdr");
}

inline FitOptions make_fit_options(const RunConfig& config) {
  FitOptions options;
  options.optimizer.eta = config.eta;
  options.optimizer.tol_obj = config.tol;
  options.optimizer.max_iter = config.max_iter;
  options.ridge = config.ridge;
  options.k_folds = config.folds;
  options.seed = config.seed;
  options.threads = config.threads;
  if (!config.grid.empty())
    options.alpha_grid = parse_double_list("grid", config.grid);
  return options;
}

inline AlphaSpec parse_alpha_spec(const std::string& raw) {
  if (raw == "cv") return AlphaSpec::cv();
  return AlphaSpec::fixed(parse_double_value("alpha", raw));
}

inline std::string format_fixed(double value, int digits) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << value;
  return ss.str();
}

inline std::string method_label(const AlphaSpec& spec) {
  if (spec.use_cv) return "rsdr-cv";
  std::string a = format_fixed(spec.value, 2);
  while (a.back() == '0') a.pop_back();
  if (a.back() == '.') a.pop_back();
  return "rsdr-a" + a;
}

inline LoadedCsv load_input(const RunConfig& config) {
  if (config.input.empty()) throw ParameterError("--input is required");
  if (config.response.empty()) throw ParameterError("--response is required");
  return load_csv(config.input, config.response, config.standardize);
}

}  // namespace cli_detail

/// Table layout mirroring the replication summaries: one row per
/// (model, method) with angle and time statistics at 4 decimals.  Time
/// columns are left blank unless timings were requested.
inline void emit_table(const ReplicationReport& report, const std::string& path,
                       const std::string& model_label, bool timings) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("table: cannot write '" + path + "'");
  out << "label,angle_mean,angle_sd,time_mean_s,time_sd_s,reps\n";
  for (const auto& m : report.methods) {
    out << model_label << '-' << m.label << ','
        << cli_detail::format_fixed(m.angle_mean, 4) << ','
        << cli_detail::format_fixed(m.angle_sd, 4) << ',';
    if (timings) {
      out << cli_detail::format_fixed(m.time_mean_s, 4) << ','
          << cli_detail::format_fixed(m.time_sd_s, 4);
    } else {
      out << ',';
    }
    out << ',' << m.completed << '\n';
  }
  if (!out) throw InputError("table: write to '" + path + "' failed");
}

/// Two-column ROC emission, ordered by false-positive rate.
inline void emit_roc_csv(const RocResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("table: cannot write '" + path + "'");
  out << "fpr,tpr\n";
  for (const auto& [fpr, tpr] : result.points)
    out << detail::format_double(fpr) << ',' << detail::format_double(tpr) << '\n';
  if (!out) throw InputError("table: write to '" + path + "' failed");
}

namespace cli_detail {

struct CommandOutput {
  nlohmann::json result;
  nlohmann::json echo;
};

inline CommandOutput run_fit(const RunConfig& config, std::ostream& diag) {
  const LoadedCsv loaded = load_input(config);
  if (loaded.dropped_rows > 0)
    diag << "note: dropped " << loaded.dropped_rows
         << " row(s) with missing values\n";
  const int d = config.dim.value_or(1);
  const AlphaSpec spec = parse_alpha_spec(config.alpha);
  const FitOptions options = make_fit_options(config);
  const FitResult fit_result = fit(loaded.data, d, spec, options);
  if (!fit_result.warning.empty())
    diag << "warning: " << fit_result.warning << "\n";

  CommandOutput out;
  out.result = to_json(fit_result);
  out.result["n"] = loaded.data.n();
  out.result["p"] = loaded.data.p();
  out.result["d"] = d;
  out.result["dropped_rows"] = loaded.dropped_rows;
  out.result["predictors"] = loaded.predictor_names;
  out.echo = {{"input", config.input},       {"response", config.response},
              {"standardize", config.standardize}, {"dim", d},
              {"alpha", config.alpha},       {"eta", config.eta},
              {"tol", config.tol},           {"max_iter", config.max_iter},
              {"seed", config.seed}};
  if (config.ridge.has_value()) out.echo["ridge"] = *config.ridge;
  if (spec.use_cv) {
    out.echo["folds"] = config.folds;
    out.echo["grid"] = make_fit_options(config).alpha_grid;
  }
  return out;
}

inline CommandOutput run_cv(const RunConfig& config, std::ostream& diag) {
  const LoadedCsv loaded = load_input(config);
  if (loaded.dropped_rows > 0)
    diag << "note: dropped " << loaded.dropped_rows
         << " row(s) with missing values\n";
  const int d = config.dim.value_or(1);
  const FitOptions options = make_fit_options(config);
  const CVReport report = cross_validate_alpha(loaded.data, d,
                                               options.alpha_grid,
                                               config.folds, options);
  CommandOutput out;
  out.result = to_json(report);
  out.result["d"] = d;
  out.echo = {{"input", config.input},   {"response", config.response},
              {"standardize", config.standardize}, {"dim", d},
              {"grid", options.alpha_grid}, {"folds", config.folds},
              {"eta", config.eta},       {"tol", config.tol},
              {"max_iter", config.max_iter}, {"seed", config.seed}};
  return out;
}

inline CommandOutput run_simulate(const RunConfig& config, std::ostream&) {
  ModelSpec spec;
  spec.model = parse_model(config.model);
  spec.dist = parse_dist(config.dist);
  spec.n = config.n;
  spec.p = config.p;
  spec.contaminated = config.contaminate;
  spec.seed = config.seed;

  std::vector<MethodConfig> methods;
  std::stringstream ss(config.alpha);
  std::string item;
  while (std::getline(ss, item, ',')) {
    MethodConfig method;
    method.alpha = parse_alpha_spec(detail::trim(item));
    method.label = method_label(method.alpha);
    method.options = make_fit_options(config);
    method.d = config.dim.value_or(0);
    methods.push_back(std::move(method));
  }
  if (methods.empty()) throw ParameterError("simulate: no alpha values given");

  const ReplicationReport report =
      replicate(spec, methods, config.reps, config.threads);

  const std::string model_label =
      config.model + (spec.dist == PredictorDist::gaussian ? "1" : "2");
  if (!config.table.empty())
    emit_table(report, config.table, model_label, config.timings);
  if (!config.write_data.empty())
    write_dataset_csv(config.write_data, generate(spec).first);

  CommandOutput out;
  out.result = to_json(report, config.timings);
  out.result["model"] = config.model;
  out.result["dist"] = config.dist;
  out.result["n"] = config.n;
  out.result["p"] = config.p;
  out.result["contaminated"] = config.contaminate;
  out.echo = {{"model", config.model}, {"dist", config.dist},
              {"n", config.n},         {"p", config.p},
              {"contaminate", config.contaminate}, {"reps", config.reps},
              {"alpha", config.alpha}, {"eta", config.eta},
              {"tol", config.tol},     {"max_iter", config.max_iter},
              {"seed", config.seed}};
  if (config.dim.has_value()) out.echo["dim"] = *config.dim;
  return out;
}

inline CommandOutput run_outliers(const RunConfig& config, std::ostream& diag) {
  const LoadedCsv loaded = load_input(config);
  if (loaded.dropped_rows > 0)
    diag << "note: dropped " << loaded.dropped_rows
         << " row(s) with missing values\n";
  OutlierConfig outlier_config;
  outlier_config.gamma = config.gamma;
  outlier_config.n_boot = config.boot;
  outlier_config.reducer = parse_reducer(config.reducer);
  outlier_config.d = config.dim.value_or(0);
  if (config.alpha == "cv")
    throw ParameterError("outliers: alpha must be a fixed value");
  outlier_config.alpha = parse_double_value("alpha", config.alpha);
  outlier_config.fit_options = make_fit_options(config);

  const OutlierScores scores = detect(loaded.data, outlier_config, config.seed);

  CommandOutput out;
  out.result = to_json(scores);
  out.result["n"] = loaded.data.n();
  out.result["reducer"] = config.reducer;
  out.echo = {{"input", config.input},   {"response", config.response},
              {"standardize", config.standardize},
              {"gamma", config.gamma},   {"boot", config.boot},
              {"reducer", config.reducer}, {"alpha", config.alpha},
              {"seed", config.seed}};
  if (config.dim.has_value()) out.echo["dim"] = *config.dim;
  return out;
}

inline CommandOutput run_roc(const RunConfig& config, std::ostream&) {
  const LoadedCsv loaded = load_input(config);

  std::vector<bool> labels(loaded.data.n());
  for (Eigen::Index i = 0; i < loaded.data.n(); ++i) {
    const double v = loaded.data.Y(i);
    if (v != 0.0 && v != 1.0)
      throw InputError("roc: label column must contain only 0 and 1");
    labels[static_cast<std::size_t>(i)] = v == 1.0;
  }

  Eigen::Index score_col = -1;
  if (config.score.empty()) {
    if (loaded.data.p() != 1)
      throw ParameterError("roc: --score is required when several columns remain");
    score_col = 0;
  } else {
    for (std::size_t j = 0; j < loaded.predictor_names.size(); ++j)
      if (loaded.predictor_names[j] == config.score)
        score_col = static_cast<Eigen::Index>(j);
    if (score_col < 0)
      throw InputError("roc: score column '" + config.score + "' not found");
  }

  const RocResult result = roc(loaded.data.X.col(score_col), labels);
  if (!config.table.empty()) emit_roc_csv(result, config.table);

  CommandOutput out;
  out.result = to_json(result);
  out.echo = {{"input", config.input},
              {"response", config.response},
              {"score", config.score}};
  return out;
}

}  // namespace cli_detail

/// Dispatches one configured invocation.  Exit codes: 0 success,
/// 1 input/validation error, 2 numerical failure.  Human-readable messages
/// go to `diag`; the result document goes to the output path or `out`.
inline int run(const RunConfig& config, std::ostream& out = std::cout,
               std::ostream& diag = std::cerr) {
  try {
    const auto start = std::chrono::steady_clock::now();
    cli_detail::CommandOutput command;
    if (config.subcommand == "fit") {
      command = cli_detail::run_fit(config, diag);
    } else if (config.subcommand == "cv") {
      command = cli_detail::run_cv(config, diag);
    } else if (config.subcommand == "simulate") {
      command = cli_detail::run_simulate(config, diag);
    } else if (config.subcommand == "outliers") {
      command = cli_detail::run_outliers(config, diag);
    } else if (config.subcommand == "roc") {
      command = cli_detail::run_roc(config, diag);
    } else {
      throw ParameterError("unknown subcommand '" + config.subcommand + "'");
    }
    const std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - start;
    const nlohmann::json document = make_document(
        config.subcommand, std::move(command.echo), std::move(command.result),
        config.timings ? std::optional<double>(elapsed.count()) : std::nullopt);
    if (config.output.empty()) {
      out << document.dump(2) << '\n';
    } else {
      std::ofstream file(config.output, std::ios::binary);
      if (!file)
        throw InputError("output: cannot write '" + config.output + "'");
      file << document.dump(2) << '\n';
      if (!file)
        throw InputError("output: write to '" + config.output + "' failed");
    }
    return 0;
  } catch (const NumericalError& e) {
    diag << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    diag << "error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    diag << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace rsdr

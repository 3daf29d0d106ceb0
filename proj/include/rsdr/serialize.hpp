#pragma once

#include <json.hpp>

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

#include "rsdr/estimator.hpp"
#include "rsdr/outlier.hpp"
#include "rsdr/simulate.hpp"

namespace rsdr {

inline constexpr const char* kVersion = "0.1.0";

namespace detail {

inline nlohmann::json to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json to_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace detail

inline nlohmann::json to_json(const OptimizeTrace& trace) {
  return {{"objective_values", trace.objective_values},
          {"iterations", trace.iterations},
          {"converged", trace.converged},
          {"max_orthogonality_error", trace.max_orthogonality_error}};
}

inline nlohmann::json to_json(const CVReport& report) {
  return {{"grid", report.grid},
          {"mean_validation_scores", report.mean_validation_scores},
          {"fold_scores", report.fold_scores},
          {"chosen_alpha", report.chosen_alpha}};
}

inline nlohmann::json to_json(const FitResult& result) {
  nlohmann::json out = {
      {"beta_hat", detail::to_json(result.beta_hat)},
      {"c_hat", detail::to_json(result.C_hat.C)},
      {"alpha_used", result.alpha_used},
      {"init_source", to_string(result.init_source)},
      {"final_objective", result.final_objective},
      {"trace", to_json(result.trace)},
  };
  if (result.cv.has_value()) out["cv"] = to_json(*result.cv);
  if (!result.warning.empty()) out["warning"] = result.warning;
  return out;
}

inline nlohmann::json to_json(const MethodSummary& summary, bool timings) {
  nlohmann::json out = {{"label", summary.label},
                        {"angle_mean", summary.angle_mean},
                        {"angle_sd", summary.angle_sd},
                        {"completed", summary.completed},
                        {"failed", summary.failed}};
  if (timings) {
    out["time_mean_s"] = summary.time_mean_s;
    out["time_sd_s"] = summary.time_sd_s;
  }
  return out;
}

inline nlohmann::json to_json(const ReplicationReport& report, bool timings) {
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& m : report.methods) methods.push_back(to_json(m, timings));
  return {{"reps", report.reps}, {"methods", std::move(methods)}};
}

inline nlohmann::json to_json(const OutlierScores& scores) {
  std::vector<int> flags(scores.flags.size());
  for (std::size_t i = 0; i < scores.flags.size(); ++i)
    flags[i] = scores.flags[i] ? 1 : 0;
  return {{"scores", detail::to_json(scores.scores)},
          {"threshold", scores.threshold},
          {"flags", flags}};
}

inline nlohmann::json to_json(const RocResult& result) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& [fpr, tpr] : result.points)
    points.push_back(nlohmann::json::array({fpr, tpr}));
  return {{"points", std::move(points)}, {"auc", result.auc}};
}

/// Assembles the result document.  Everything under "meta" and "result" is a
/// pure function of the run configuration, so documents from identical
/// configurations are byte-identical; the optional "timing" section carries
/// the only volatile values.
inline nlohmann::json make_document(const std::string& subcommand,
                                    nlohmann::json config_echo,
                                    nlohmann::json result,
                                    std::optional<double> wall_clock_s) {
  nlohmann::json doc = {
      {"meta",
       {{"subcommand", subcommand},
        {"version", kVersion},
        {"config", std::move(config_echo)}}},
      {"result", std::move(result)},
  };
  if (wall_clock_s.has_value()) doc["timing"] = {{"wall_clock_s", *wall_clock_s}};
  return doc;
}

}  // namespace rsdr

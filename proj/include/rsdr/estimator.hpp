#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rsdr/dataset.hpp"
#include "rsdr/dcov.hpp"
#include "rsdr/errors.hpp"
#include "rsdr/parallel.hpp"
#include "rsdr/rng.hpp"
#include "rsdr/stiefel.hpp"

namespace rsdr {

/// Predictors transformed to (approximately) unit sample covariance, plus
/// the symmetric square-root factors used to move between the whitened
/// variable C and the original-scale basis beta.
struct WhitenedData {
  Eigen::MatrixXd Z;               // n x p, centered and whitened
  Eigen::MatrixXd sigma_half;      // Sigma^(1/2)
  Eigen::MatrixXd sigma_neg_half;  // Sigma^(-1/2)
  double ridge = 0.0;
};

enum class InitSource { sir, dr, user };

inline const char* to_string(InitSource s) {
  switch (s) {
    case InitSource::sir: return "SIR";
    case InitSource::dr: return "DR";
    case InitSource::user: return "user";
  }
  return "?";
}

struct CVReport {
  std::vector<double> grid;                    // ascending alpha values
  std::vector<double> mean_validation_scores;  // per alpha
  std::vector<std::vector<double>> fold_scores;  // [alpha][fold]
  double chosen_alpha = 0.0;
};

struct FitResult {
  StiefelPoint C_hat;
  Eigen::MatrixXd beta_hat;  // Sigma^(-1/2) * C_hat
  double alpha_used = 1.0;
  InitSource init_source = InitSource::sir;
  OptimizeTrace trace;
  double final_objective = 0.0;
  std::optional<CVReport> cv;  // present when alpha was cross-validated
  std::string warning;         // nonempty when an initializer failed
};

/// Either a fixed exponent or a request to choose it by cross-validation.
struct AlphaSpec {
  bool use_cv = false;
  double value = 1.0;

  static AlphaSpec fixed(double alpha) { return {false, alpha}; }
  static AlphaSpec cv() { return {true, 0.0}; }
};

struct FitOptions {
  OptimizerConfig optimizer;
  std::optional<double> ridge;  // default: 1e-8 * trace(Sigma)/p
  int n_slices = 0;             // 0 = automatic (min(10, n/5), at least d+1)
  int k_folds = 5;
  std::vector<double> alpha_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::uint64_t seed = 0;  // fold shuffling
  int threads = 1;
  std::optional<Eigen::MatrixXd> user_init;  // p x d basis in original scale
};

inline double default_ridge(const Dataset& data) {
  const Eigen::Index n = data.n(), p = data.p();
  const Eigen::MatrixXd centered = data.X.rowwise() - data.X.colwise().mean();
  const double trace =
      centered.colwise().squaredNorm().sum() / static_cast<double>(n - 1);
  return 1e-8 * trace / static_cast<double>(p);
}

/// Centers X, forms Sigma = cov(X) + ridge*I, and computes Z = Xc Sigma^(-1/2)
/// through a symmetric eigendecomposition.
inline WhitenedData whiten(const Dataset& data, double ridge) {
  data.validate();
  if (ridge < 0.0) throw ParameterError("whiten: ridge must be >= 0");
  const Eigen::Index n = data.n();
  const Eigen::MatrixXd centered = data.X.rowwise() - data.X.colwise().mean();
  Eigen::MatrixXd sigma =
      (centered.transpose() * centered) / static_cast<double>(n - 1);
  sigma.diagonal().array() += ridge;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
  if (eig.info() != Eigen::Success)
    throw NumericalError("whiten: eigendecomposition failed");
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  if (!(lambda(0) > 1e-12))
    throw NumericalError(
        "whiten: covariance is numerically singular; increase the ridge");

  const Eigen::VectorXd sqrt_l = lambda.array().sqrt();
  const Eigen::VectorXd inv_sqrt_l = sqrt_l.array().inverse();
  const Eigen::MatrixXd& v = eig.eigenvectors();

  WhitenedData out;
  out.ridge = ridge;
  out.sigma_half = v * sqrt_l.asDiagonal() * v.transpose();
  out.sigma_neg_half = v * inv_sqrt_l.asDiagonal() * v.transpose();
  out.Z = centered * out.sigma_neg_half;
  return out;
}

namespace detail {

/// Contiguous equal-count slices of the index-stable sort of Y.  Robust to
/// ties; a slicing error is only possible when n < n_slices.
inline std::vector<std::vector<int>> slice_indices(const Eigen::VectorXd& y,
                                                   int n_slices) {
  const int n = static_cast<int>(y.size());
  if (n_slices < 2) throw ParameterError("slicing: need at least 2 slices");
  if (n < n_slices)
    throw InputError("slicing: fewer samples than slices");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return y(a) < y(b); });
  std::vector<std::vector<int>> slices(n_slices);
  const int base = n / n_slices, extra = n % n_slices;
  int pos = 0;
  for (int h = 0; h < n_slices; ++h) {
    const int count = base + (h < extra ? 1 : 0);
    slices[h].assign(order.begin() + pos, order.begin() + pos + count);
    pos += count;
  }
  return slices;
}

/// Top-d eigenvectors (descending eigenvalue) of a symmetric matrix.
inline Eigen::MatrixXd top_eigenvectors(const Eigen::MatrixXd& m, int d) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success)
    throw NumericalError("eigendecomposition failed");
  const Eigen::Index p = m.rows();
  Eigen::MatrixXd out(p, d);
  for (int j = 0; j < d; ++j) out.col(j) = eig.eigenvectors().col(p - 1 - j);
  return out;
}

inline int resolve_n_slices(int requested, Eigen::Index n, int d) {
  if (requested > 0) return requested;
  int h = std::min<int>(10, static_cast<int>(n / 5));
  h = std::max(h, d + 1);
  return h;
}

inline void check_dimension(const Dataset& data, int d) {
  if (d < 1) throw ParameterError("d must be >= 1");
  if (d > data.p()) throw ParameterError("d must not exceed the predictor count");
}

inline Eigen::MatrixXd sir_candidate(const WhitenedData& wd,
                                     const Eigen::VectorXd& y, int d,
                                     int n_slices) {
  const auto slices = slice_indices(y, n_slices);
  const Eigen::Index p = wd.Z.cols();
  const double n = static_cast<double>(wd.Z.rows());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
  for (const auto& slice : slices) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
    for (int i : slice) mean += wd.Z.row(i).transpose();
    mean /= static_cast<double>(slice.size());
    m += (static_cast<double>(slice.size()) / n) * (mean * mean.transpose());
  }
  return wd.sigma_neg_half * top_eigenvectors(m, d);
}

inline Eigen::MatrixXd dr_candidate(const WhitenedData& wd,
                                    const Eigen::VectorXd& y, int d,
                                    int n_slices) {
  const auto slices = slice_indices(y, n_slices);
  const Eigen::Index p = wd.Z.cols();
  const double n = static_cast<double>(wd.Z.rows());
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(p, p);

  Eigen::MatrixXd second_moment_term = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd mean_outer = Eigen::MatrixXd::Zero(p, p);
  double mean_norm_sq = 0.0;
  for (const auto& slice : slices) {
    const double ph = static_cast<double>(slice.size()) / n;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd vh = Eigen::MatrixXd::Zero(p, p);
    for (int i : slice) {
      mean += wd.Z.row(i).transpose();
      vh += wd.Z.row(i).transpose() * wd.Z.row(i);
    }
    mean /= static_cast<double>(slice.size());
    vh /= static_cast<double>(slice.size());  // slice second moment E[ZZ'|h]
    const Eigen::MatrixXd dev = vh - identity;
    second_moment_term += ph * dev * dev;
    mean_outer += ph * mean * mean.transpose();
    mean_norm_sq += ph * mean.squaredNorm();
  }
  const Eigen::MatrixXd m =
      second_moment_term + mean_outer * mean_outer + mean_norm_sq * mean_outer;
  return wd.sigma_neg_half * top_eigenvectors(m, d);
}

}  // namespace detail

/// Sliced inverse regression directions in the original predictor scale.
inline Eigen::MatrixXd sir_directions(const WhitenedData& wd,
                                      const Eigen::VectorXd& y, int d,
                                      int n_slices) {
  if (n_slices < d + 1)
    throw ParameterError("sir_directions: need n_slices >= d + 1");
  return detail::sir_candidate(wd, y, d, n_slices);
}

inline Eigen::MatrixXd sir_directions(const Dataset& data, int d, int n_slices) {
  detail::check_dimension(data, d);
  return sir_directions(whiten(data, default_ridge(data)), data.Y, d, n_slices);
}

/// Directional regression directions in the original predictor scale.
inline Eigen::MatrixXd dr_directions(const WhitenedData& wd,
                                     const Eigen::VectorXd& y, int d,
                                     int n_slices) {
  if (n_slices < d + 1)
    throw ParameterError("dr_directions: need n_slices >= d + 1");
  return detail::dr_candidate(wd, y, d, n_slices);
}

inline Eigen::MatrixXd dr_directions(const Dataset& data, int d, int n_slices) {
  detail::check_dimension(data, d);
  return dr_directions(whiten(data, default_ridge(data)), data.Y, d, n_slices);
}

struct InitChoice {
  Eigen::MatrixXd beta;  // p x d
  InitSource source = InitSource::sir;
  std::string warning;
};

namespace detail {

struct CandidateOutcome {
  std::optional<Eigen::MatrixXd> beta;
  std::string error;
};

/// Selection rule shared by choose_initialization: larger alpha-dCov wins,
/// ties go to SIR, a single failure falls back to the survivor with a
/// warning, and a double failure propagates.
inline InitChoice pick_initialization(const Dataset& data, double alpha,
                                      const CandidateOutcome& sir,
                                      const CandidateOutcome& dr) {
  if (!sir.beta && !dr.beta)
    throw NumericalError("initialization failed: SIR (" + sir.error +
                         "), DR (" + dr.error + ")");
  if (sir.beta && !dr.beta)
    return {*sir.beta, InitSource::sir, "DR initialization failed: " + dr.error};
  if (dr.beta && !sir.beta)
    return {*dr.beta, InitSource::dr, "SIR initialization failed: " + sir.error};

  const double score_sir = sample_dcov_sq(data.X * (*sir.beta), data.Y, alpha);
  const double score_dr = sample_dcov_sq(data.X * (*dr.beta), data.Y, alpha);
  if (score_sir >= score_dr) return {*sir.beta, InitSource::sir, ""};
  return {*dr.beta, InitSource::dr, ""};
}

}  // namespace detail

/// Evaluates the SIR and DR candidates by their alpha-dCov with the response
/// and keeps the larger (ties go to SIR).  If one initializer fails the
/// other is used and a warning recorded; if both fail the error propagates.
inline InitChoice choose_initialization(const WhitenedData& wd,
                                        const Dataset& data, int d,
                                        int n_slices, double alpha) {
  detail::CandidateOutcome sir, dr;
  try {
    sir.beta = sir_directions(wd, data.Y, d, n_slices);
  } catch (const Error& e) {
    sir.error = e.what();
  }
  try {
    dr.beta = dr_directions(wd, data.Y, d, n_slices);
  } catch (const Error& e) {
    dr.error = e.what();
  }
  return detail::pick_initialization(data, alpha, sir, dr);
}

inline InitChoice choose_initialization(const Dataset& data, int d, int n_slices,
                                        double alpha) {
  detail::check_dimension(data, d);
  return choose_initialization(whiten(data, default_ridge(data)), data, d,
                               n_slices, alpha);
}

namespace detail {

inline FitResult fit_fixed_alpha(const Dataset& data, int d, double alpha,
                                 const FitOptions& options) {
  check_alpha(alpha);
  check_dimension(data, d);
  const double ridge = options.ridge.value_or(default_ridge(data));
  const WhitenedData wd = whiten(data, ridge);
  const int n_slices = resolve_n_slices(options.n_slices, data.n(), d);

  InitChoice init;
  if (options.user_init.has_value()) {
    if (options.user_init->rows() != data.p() || options.user_init->cols() != d)
      throw ParameterError("fit: user initialization must be p x d");
    init.beta = *options.user_init;
    init.source = InitSource::user;
  } else {
    init = choose_initialization(wd, data, d, n_slices, alpha);
  }

  const StiefelPoint c0 = project_stiefel(wd.sigma_half * init.beta);
  const CenteredDistanceMatrix b =
      double_center(alpha_distance_matrix(data.Y, alpha));
  auto [c_hat, trace] = optimize(wd.Z, b, alpha, options.optimizer, c0);

  FitResult out;
  out.beta_hat = wd.sigma_neg_half * c_hat.C;
  out.C_hat = std::move(c_hat);
  out.alpha_used = alpha;
  out.init_source = init.source;
  out.final_objective = trace.objective_values.back();
  out.trace = std::move(trace);
  out.warning = init.warning;
  return out;
}

}  // namespace detail

/// 5-fold-style cross-validation of alpha: fit each grid value on each
/// training fold and score the held-out fold by its 0.5-dCov between the
/// projected predictors and the response.  Folds are contiguous blocks of a
/// seeded shuffle; ties in the mean score go to the smaller alpha.
inline CVReport cross_validate_alpha(const Dataset& data, int d,
                                     std::vector<double> grid, int k_folds,
                                     const FitOptions& options) {
  data.validate();
  detail::check_dimension(data, d);
  if (k_folds < 2) throw ParameterError("cross_validate_alpha: need k_folds >= 2");
  if (grid.empty()) throw ParameterError("cross_validate_alpha: empty alpha grid");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  for (double a : grid) detail::check_alpha(a);

  const int n = static_cast<int>(data.n());
  if (n < 2 * k_folds)
    throw ParameterError("cross_validate_alpha: fold too small to whiten");

  RandomStream fold_rng(options.seed, "folds");
  const std::vector<int> order = fold_rng.permutation(n);
  std::vector<std::vector<int>> folds(k_folds);
  const int base = n / k_folds, extra = n % k_folds;
  int pos = 0;
  for (int f = 0; f < k_folds; ++f) {
    const int count = base + (f < extra ? 1 : 0);
    folds[f].assign(order.begin() + pos, order.begin() + pos + count);
    pos += count;
  }

  const int n_alpha = static_cast<int>(grid.size());
  std::vector<std::vector<double>> fold_scores(
      n_alpha, std::vector<double>(k_folds, 0.0));

  FitOptions inner = options;
  inner.user_init.reset();
  parallel_for(n_alpha * k_folds, options.threads, [&](int item) {
    const int ai = item / k_folds;
    const int fi = item % k_folds;
    std::vector<int> train;
    train.reserve(n);
    for (int f = 0; f < k_folds; ++f)
      if (f != fi) train.insert(train.end(), folds[f].begin(), folds[f].end());
    const Dataset train_data = data.rows(train);
    const Dataset val_data = data.rows(folds[fi]);
    const FitResult fit = detail::fit_fixed_alpha(train_data, d, grid[ai], inner);
    fold_scores[ai][fi] =
        sample_dcov_sq(val_data.X * fit.beta_hat, val_data.Y, 0.5);
  });

  CVReport report;
  report.grid = grid;
  report.fold_scores = fold_scores;
  report.mean_validation_scores.resize(n_alpha);
  int best = 0;
  for (int ai = 0; ai < n_alpha; ++ai) {
    double total = 0.0;
    for (double s : fold_scores[ai]) total += s;
    report.mean_validation_scores[ai] = total / k_folds;
    if (report.mean_validation_scores[ai] >
        report.mean_validation_scores[best])
      best = ai;  // strict >, so ties keep the smaller alpha
  }
  report.chosen_alpha = grid[best];
  return report;
}

/// End-to-end rSDR fit: whiten, initialize from SIR/DR (or a user basis),
/// optionally cross-validate alpha, ascend on the Stiefel manifold, and map
/// the solution back to the original predictor scale.
inline FitResult fit(const Dataset& data, int d, const AlphaSpec& alpha_spec,
                     const FitOptions& options = {}) {
  data.validate();
  detail::check_dimension(data, d);
  if (alpha_spec.use_cv) {
    const CVReport report =
        cross_validate_alpha(data, d, options.alpha_grid, options.k_folds, options);
    FitResult out = detail::fit_fixed_alpha(data, d, report.chosen_alpha, options);
    out.cv = report;
    return out;
  }
  return detail::fit_fixed_alpha(data, d, alpha_spec.value, options);
}

}  // namespace rsdr

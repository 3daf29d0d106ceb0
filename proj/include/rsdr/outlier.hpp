#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "rsdr/dataset.hpp"
#include "rsdr/detail/sum.hpp"
#include "rsdr/errors.hpp"
#include "rsdr/estimator.hpp"
#include "rsdr/parallel.hpp"
#include "rsdr/rng.hpp"

namespace rsdr {

enum class Reducer { none, pca, rsdr };

struct OutlierConfig {
  double gamma = 0.05;  // significance level
  int n_boot = 100;     // bootstrap replicates
  Reducer reducer = Reducer::none;
  int d = 0;            // target dimension when reducing
  double alpha = 0.5;   // rSDR exponent when reducer == rsdr
  FitOptions fit_options;

  void validate() const {
    if (!(gamma > 0.0 && gamma < 1.0))
      throw ParameterError("outlier config: gamma must be in (0, 1)");
    if (n_boot < 1) throw ParameterError("outlier config: need n_boot >= 1");
    if (reducer != Reducer::none && d < 1)
      throw ParameterError("outlier config: reducers need d >= 1");
  }
};

struct OutlierScores {
  Eigen::VectorXd scores;  // leave-one-out influence D_i
  double threshold = 0.0;  // bootstrap upper-gamma quantile
  std::vector<bool> flags;  // score > threshold
};

struct RocResult {
  std::vector<std::pair<double, double>> points;  // (fpr, tpr), (0,0)..(1,1)
  double auc = 0.0;
};

namespace detail {

/// Plain-distance (alpha = 1) matrix of one scalar column together with the
/// running sums the deletion updates need.
struct LooColumn {
  Eigen::MatrixXd dist;      // n x n, |x_k - x_l|
  Eigen::VectorXd row_sums;  // full row sums
  double grand = 0.0;        // full grand sum
};

inline LooColumn make_loo_column(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  LooColumn col;
  col.dist.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    col.dist(k, k) = 0.0;
    for (Eigen::Index l = k + 1; l < n; ++l) {
      const double d = std::abs(x(k) - x(l));
      col.dist(k, l) = d;
      col.dist(l, k) = d;
    }
  }
  col.row_sums.resize(n);
  CompensatedSum acc, grand;
  for (Eigen::Index k = 0; k < n; ++k) {
    acc.reset();
    for (Eigen::Index l = 0; l < n; ++l) acc.add(col.dist(k, l));
    col.row_sums(k) = acc.value();
    grand.add(col.row_sums(k));
  }
  col.grand = grand.value();
  return col;
}

/// Entrywise product sums for one pair of distance matrices: the total and
/// the per-row totals that drive the O(n) deletion update.
struct PairSums {
  double total = 0.0;
  Eigen::VectorXd row_products;
};

inline PairSums make_pair_sums(const LooColumn& a, const LooColumn& b) {
  const Eigen::Index n = a.dist.rows();
  PairSums out;
  out.row_products.resize(n);
  CompensatedSum acc, total;
  for (Eigen::Index k = 0; k < n; ++k) {
    acc.reset();
    for (Eigen::Index l = 0; l < n; ++l) acc.add(a.dist(k, l) * b.dist(k, l));
    out.row_products(k) = acc.value();
    total.add(out.row_products(k));
  }
  out.total = total.value();
  return out;
}

/// nu^2 over the full sample via the expansion
///   nu^2 = (P - (2/n) sum_k R^a_k R^b_k + G_a G_b / n^2) / n^2.
inline double dcov_sq_full(const LooColumn& a, const LooColumn& b,
                           const PairSums& ab) {
  const double n = static_cast<double>(a.dist.rows());
  const double cross = a.row_sums.dot(b.row_sums);
  return (ab.total - (2.0 / n) * cross + a.grand * b.grand / (n * n)) / (n * n);
}

/// nu^2 with sample i removed, from O(n) updates of the same sums.
inline double dcov_sq_without(const LooColumn& a, const LooColumn& b,
                              const PairSums& ab, Eigen::Index i) {
  const Eigen::Index n = a.dist.rows();
  const double m = static_cast<double>(n - 1);
  // Row i and column i leave every sum; diagonals are zero.
  const double grand_a = a.grand - 2.0 * a.row_sums(i);
  const double grand_b = b.grand - 2.0 * b.row_sums(i);
  const double total = ab.total - 2.0 * ab.row_products(i);
  double cross = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (k == i) continue;
    cross += (a.row_sums(k) - a.dist(k, i)) * (b.row_sums(k) - b.dist(k, i));
  }
  return (total - (2.0 / m) * cross + grand_a * grand_b / (m * m)) / (m * m);
}

inline double dcor_from_parts(double cov, double var_a, double var_b) {
  const double va = std::max(0.0, var_a);
  const double vb = std::max(0.0, var_b);
  if (!(va * vb > 0.0)) return 0.0;
  const double r_sq = std::clamp(cov / std::sqrt(va * vb), 0.0, 1.0);
  return std::sqrt(r_sq);
}

}  // namespace detail

/// Leave-one-out influence scores (alpha = 1 distance correlation):
///   D_i = (1/m) sum_k (dCor(col_k, Y) - dCor(col_k^(i), Y^(i)))^2
/// over the m columns of Xr.  Distance matrices are built once; each
/// deletion reuses their masked row/grand/product sums.
inline Eigen::VectorXd loo_dcor_scores(const Eigen::MatrixXd& xr,
                                       const Eigen::VectorXd& y) {
  const Eigen::Index n = xr.rows();
  const Eigen::Index m = xr.cols();
  if (n != y.size())
    throw InputError("loo_dcor_scores: X and Y must have matching rows");
  if (n < 3) throw InputError("loo_dcor_scores: need at least 3 samples");
  if (m < 1) throw InputError("loo_dcor_scores: need at least 1 column");
  if (!xr.allFinite() || !y.allFinite())
    throw InputError("loo_dcor_scores: entries must be finite");

  const detail::LooColumn yc = detail::make_loo_column(y);
  const detail::PairSums yy = detail::make_pair_sums(yc, yc);

  Eigen::VectorXd scores = Eigen::VectorXd::Zero(n);
  for (Eigen::Index k = 0; k < m; ++k) {
    const detail::LooColumn xc = detail::make_loo_column(xr.col(k));
    const detail::PairSums xy = detail::make_pair_sums(xc, yc);
    const detail::PairSums xx = detail::make_pair_sums(xc, xc);
    const double full = detail::dcor_from_parts(
        detail::dcov_sq_full(xc, yc, xy), detail::dcov_sq_full(xc, xc, xx),
        detail::dcov_sq_full(yc, yc, yy));
    for (Eigen::Index i = 0; i < n; ++i) {
      const double deleted = detail::dcor_from_parts(
          detail::dcov_sq_without(xc, yc, xy, i),
          detail::dcov_sq_without(xc, xc, xx, i),
          detail::dcov_sq_without(yc, yc, yy, i));
      const double delta = full - deleted;
      scores(i) += delta * delta;
    }
  }
  return scores / static_cast<double>(m);
}

/// Pooled bootstrap threshold: draw n row indices with replacement, compute
/// all leave-one-out scores of the resampled data, pool the n * n_boot
/// values, and return their upper-gamma empirical quantile.
inline double bootstrap_threshold(const Eigen::MatrixXd& xr,
                                  const Eigen::VectorXd& y, double gamma,
                                  int n_boot, std::uint64_t seed,
                                  int threads = 1) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw ParameterError("bootstrap_threshold: gamma must be in (0, 1)");
  if (n_boot < 1) throw ParameterError("bootstrap_threshold: need n_boot >= 1");
  const int n = static_cast<int>(xr.rows());

  std::vector<Eigen::VectorXd> per_replicate(n_boot);
  parallel_for(n_boot, threads, [&](int b) {
    RandomStream rng(seed, "bootstrap", static_cast<std::uint64_t>(b));
    Eigen::MatrixXd xb(n, xr.cols());
    Eigen::VectorXd yb(n);
    for (int i = 0; i < n; ++i) {
      const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      xb.row(i) = xr.row(j);
      yb(i) = y(j);
    }
    per_replicate[b] = loo_dcor_scores(xb, yb);
  });

  std::vector<double> pooled;
  pooled.reserve(static_cast<std::size_t>(n) * n_boot);
  for (const auto& scores : per_replicate)
    pooled.insert(pooled.end(), scores.data(), scores.data() + scores.size());
  std::sort(pooled.begin(), pooled.end());
  const double count = static_cast<double>(pooled.size());
  const auto idx = static_cast<std::ptrdiff_t>(
      std::ceil((1.0 - gamma) * count)) - 1;
  const auto clamped =
      std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(count) - 1);
  return pooled[static_cast<std::size_t>(clamped)];
}

/// Principal component scores: projections of the centered data onto its
/// top-d right singular vectors.
inline Eigen::MatrixXd pca_reduce(const Eigen::MatrixXd& x, int d) {
  const Eigen::Index n = x.rows(), p = x.cols();
  if (d < 1 || d > std::min<Eigen::Index>(n - 1, p))
    throw ParameterError("pca_reduce: need 1 <= d <= min(n - 1, p)");
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  return centered * svd.matrixV().leftCols(d);
}

/// Full detection pipeline: reduce, score, threshold, flag.
inline OutlierScores detect(const Dataset& data, const OutlierConfig& config,
                            std::uint64_t seed) {
  data.validate();
  config.validate();

  Eigen::MatrixXd reduced;
  switch (config.reducer) {
    case Reducer::none:
      reduced = data.X;
      break;
    case Reducer::pca:
      reduced = pca_reduce(data.X, config.d);
      break;
    case Reducer::rsdr: {
      FitOptions options = config.fit_options;
      options.seed = seed;
      const FitResult result =
          fit(data, config.d, AlphaSpec::fixed(config.alpha), options);
      reduced = data.X * result.beta_hat;
      break;
    }
  }

  OutlierScores out;
  out.scores = loo_dcor_scores(reduced, data.Y);
  out.threshold =
      bootstrap_threshold(reduced, data.Y, config.gamma, config.n_boot, seed,
                          config.fit_options.threads);
  out.flags.resize(out.scores.size());
  for (Eigen::Index i = 0; i < out.scores.size(); ++i)
    out.flags[i] = out.scores(i) > out.threshold;
  return out;
}

/// ROC curve by sweeping the distinct score values from high to low, with
/// tied scores grouped; AUC by the trapezoid rule (ties count one half).
inline RocResult roc(const Eigen::VectorXd& scores,
                     const std::vector<bool>& labels) {
  const Eigen::Index n = scores.size();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw InputError("roc: scores and labels must have equal length");
  if (!scores.allFinite()) throw InputError("roc: scores must be finite");
  Eigen::Index positives = 0;
  for (bool l : labels) positives += l ? 1 : 0;
  const Eigen::Index negatives = n - positives;
  if (positives == 0 || negatives == 0)
    throw InputError("roc: need at least one positive and one negative label");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores(a) > scores(b); });

  RocResult out;
  out.points.emplace_back(0.0, 0.0);
  double tp = 0.0, fp = 0.0, auc = 0.0;
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    double group_tp = 0.0, group_fp = 0.0;
    while (j < n && scores(order[j]) == scores(order[i])) {
      if (labels[order[j]]) {
        group_tp += 1.0;
      } else {
        group_fp += 1.0;
      }
      ++j;
    }
    const double prev_tpr = tp / static_cast<double>(positives);
    const double prev_fpr = fp / static_cast<double>(negatives);
    tp += group_tp;
    fp += group_fp;
    const double tpr = tp / static_cast<double>(positives);
    const double fpr = fp / static_cast<double>(negatives);
    auc += (fpr - prev_fpr) * (tpr + prev_tpr) * 0.5;
    out.points.emplace_back(fpr, tpr);
    i = j;
  }
  out.auc = auc;
  return out;
}

}  // namespace rsdr

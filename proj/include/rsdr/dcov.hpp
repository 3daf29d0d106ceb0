#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "rsdr/detail/sum.hpp"
#include "rsdr/errors.hpp"

namespace rsdr {

/// Pairwise alpha-powered Euclidean distances of a sample set.
struct DistanceMatrix {
  Eigen::MatrixXd values;  // n x n, symmetric, zero diagonal
  double alpha = 1.0;
};

/// Distance matrix after double centering: every row and column sums to zero.
struct CenteredDistanceMatrix {
  Eigen::MatrixXd values;
};

namespace detail {

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0))
    throw ParameterError("alpha must lie in the open interval (0, 2)");
}

/// Row means of a symmetric matrix plus the grand mean, each exactly rounded
/// so the values are invariant under joint row/column permutation.
inline void symmetric_means(const Eigen::MatrixXd& m, Eigen::VectorXd& row_mean,
                            double& grand_mean) {
  const Eigen::Index n = m.rows();
  row_mean.resize(n);
  ExactSum acc;
  ExactSum grand;
  for (Eigen::Index k = 0; k < n; ++k) {
    acc.reset();
    for (Eigen::Index l = 0; l < n; ++l) acc.add(m(k, l));
    const double row_sum = acc.value();
    row_mean(k) = row_sum / static_cast<double>(n);
    grand.add(row_sum);
  }
  grand_mean = grand.value() / (static_cast<double>(n) * static_cast<double>(n));
}

/// (1/n^2) sum_kl A_kl * B_kl with exact rounding, so the result is bitwise
/// symmetric in (A, B) and invariant under joint permutation of the entries.
inline double centered_product_mean(const Eigen::MatrixXd& a,
                                    const Eigen::MatrixXd& b) {
  const Eigen::Index n = a.rows();
  ExactSum acc;
  for (Eigen::Index l = 0; l < n; ++l)
    for (Eigen::Index k = 0; k < n; ++k) acc.add(a(k, l) * b(k, l));
  return acc.value() / (static_cast<double>(n) * static_cast<double>(n));
}

}  // namespace detail

/// Matrix of ||x_k - x_l||^alpha over the rows of `points`.
inline DistanceMatrix alpha_distance_matrix(const Eigen::MatrixXd& points,
                                            double alpha) {
  detail::check_alpha(alpha);
  const Eigen::Index n = points.rows();
  if (n < 2) throw InputError("alpha_distance_matrix: need at least 2 samples");
  if (!points.allFinite())
    throw InputError("alpha_distance_matrix: entries must be finite");

  DistanceMatrix out;
  out.alpha = alpha;
  out.values.setZero(n, n);
  const double half_alpha = 0.5 * alpha;
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = k + 1; l < n; ++l) {
      const double sq = (points.row(k) - points.row(l)).squaredNorm();
      const double d = (alpha == 1.0) ? std::sqrt(sq) : std::pow(sq, half_alpha);
      out.values(k, l) = d;
      out.values(l, k) = d;
    }
  }
  return out;
}

/// A_kl = a_kl - row mean - column mean + grand mean.  Input must be
/// symmetric with a zero diagonal, so column means equal row means.
inline CenteredDistanceMatrix double_center(const DistanceMatrix& d) {
  const Eigen::MatrixXd& a = d.values;
  const Eigen::Index n = a.rows();
  if (a.cols() != n || n < 1)
    throw InputError("double_center: matrix must be square and nonempty");
  for (Eigen::Index k = 0; k < n; ++k) {
    if (a(k, k) != 0.0)
      throw InputError("double_center: matrix must have a zero diagonal");
    for (Eigen::Index l = k + 1; l < n; ++l)
      if (a(k, l) != a(l, k))
        throw InputError("double_center: matrix must be symmetric");
  }

  Eigen::VectorXd row_mean;
  double grand_mean = 0.0;
  detail::symmetric_means(a, row_mean, grand_mean);

  CenteredDistanceMatrix out;
  out.values.resize(n, n);
  // row_mean(k) + row_mean(l) commutes bitwise, which keeps the centered
  // matrix exactly symmetric and permutation-equivariant.
  for (Eigen::Index l = 0; l < n; ++l)
    for (Eigen::Index k = 0; k < n; ++k)
      out.values(k, l) = (a(k, l) - (row_mean(k) + row_mean(l))) + grand_mean;
  return out;
}

/// Sample alpha-distance covariance nu^2_n(u, v): the mean of the entrywise
/// product of the two double-centered distance matrices (1/n^2 normalizer).
inline double sample_dcov_sq(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v,
                             double alpha) {
  if (u.rows() != v.rows())
    throw InputError("sample_dcov_sq: sample counts must match");
  const CenteredDistanceMatrix a = double_center(alpha_distance_matrix(u, alpha));
  const CenteredDistanceMatrix b = double_center(alpha_distance_matrix(v, alpha));
  return detail::centered_product_mean(a.values, b.values);
}

/// Sample alpha-distance variance nu^2_n(u) = nu^2_n(u, u).
inline double sample_dvar_sq(const Eigen::MatrixXd& u, double alpha) {
  const CenteredDistanceMatrix a = double_center(alpha_distance_matrix(u, alpha));
  return detail::centered_product_mean(a.values, a.values);
}

/// Squared sample distance correlation R^2_n, with the zero-variance branch
/// and clamped to [0, 1].
inline double sample_dcor_sq(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v,
                             double alpha) {
  if (u.rows() != v.rows())
    throw InputError("sample_dcor_sq: sample counts must match");
  const CenteredDistanceMatrix a = double_center(alpha_distance_matrix(u, alpha));
  const CenteredDistanceMatrix b = double_center(alpha_distance_matrix(v, alpha));
  const double cov = detail::centered_product_mean(a.values, b.values);
  // Cancellation can leave tiny negatives; clamp before the square root.
  const double var_u =
      std::max(0.0, detail::centered_product_mean(a.values, a.values));
  const double var_v =
      std::max(0.0, detail::centered_product_mean(b.values, b.values));
  const double denom_sq = var_u * var_v;
  if (!(denom_sq > 0.0)) return 0.0;
  const double r = cov / std::sqrt(denom_sq);
  return std::clamp(r, 0.0, 1.0);
}

}  // namespace rsdr

#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <utility>
#include <vector>

#include "rsdr/dcov.hpp"
#include "rsdr/detail/sum.hpp"
#include "rsdr/errors.hpp"

namespace rsdr {

/// A p x d matrix with orthonormal columns (a point on St(d, p)).
struct StiefelPoint {
  Eigen::MatrixXd C;

  Eigen::Index p() const { return C.rows(); }
  Eigen::Index d() const { return C.cols(); }

  double orthogonality_error() const {
    return (C.transpose() * C -
            Eigen::MatrixXd::Identity(C.cols(), C.cols()))
        .norm();
  }

  static StiefelPoint from_matrix(Eigen::MatrixXd m) {
    if (m.cols() > m.rows())
      throw ParameterError("StiefelPoint: need d <= p");
    StiefelPoint pt{std::move(m)};
    if (pt.orthogonality_error() > 1e-8)
      throw InputError("StiefelPoint: columns are not orthonormal");
    return pt;
  }
};

enum class UpdateRule {
  riemannian,  // project the gradient onto the tangent space, then retract
  euclidean,   // retract the raw Euclidean gradient step
};

struct OptimizerConfig {
  double eta = 1e-6;             // denominator regularizer
  double init_step = 1.0;        // first trial step of the line search
  double backtrack_factor = 0.5;
  double armijo_c = 1e-4;
  double tol_obj = 1e-8;         // stop when the objective gain drops below
  int max_iter = 500;
  int max_backtracks = 30;
  UpdateRule update_rule = UpdateRule::riemannian;

  void validate() const {
    if (!(eta > 0.0)) throw ParameterError("optimizer: eta must be > 0");
    if (!(init_step > 0.0)) throw ParameterError("optimizer: init_step must be > 0");
    if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0))
      throw ParameterError("optimizer: backtrack_factor must be in (0, 1)");
    if (!(armijo_c > 0.0 && armijo_c < 1.0))
      throw ParameterError("optimizer: armijo_c must be in (0, 1)");
    if (!(tol_obj > 0.0)) throw ParameterError("optimizer: tol_obj must be > 0");
    if (max_iter < 1) throw ParameterError("optimizer: max_iter must be >= 1");
    if (max_backtracks < 1)
      throw ParameterError("optimizer: max_backtracks must be >= 1");
  }
};

struct OptimizeTrace {
  std::vector<double> objective_values;  // nondecreasing, starts at F(C0)
  int iterations = 0;                    // accepted ascent steps
  bool converged = false;
  double max_orthogonality_error = 0.0;  // worst ||C'C - I||_F over iterates
};

/// Nearest orthonormal-column matrix: thin SVD M = U S V', result U V'.
inline StiefelPoint project_stiefel(const Eigen::MatrixXd& m) {
  if (m.cols() > m.rows())
    throw ParameterError("project_stiefel: need d <= p");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 1e-12 * sv(0)))
    throw NumericalError("project_stiefel: matrix is rank deficient, projection degenerate");
  return StiefelPoint{svd.matrixU() * svd.matrixV().transpose()};
}

/// Regularized objective
///   F_eta(C) = (1/n^2) sum_kl (||C'z_k - C'z_l||^2 + eta)^(alpha/2) B_kl,
/// where B is the double-centered alpha-distance matrix of the response.
/// eta = 0 is accepted here so tests can check the exact-dcov limit.
inline double objective_f_eta(const StiefelPoint& c, const Eigen::MatrixXd& z,
                              const CenteredDistanceMatrix& b, double alpha,
                              double eta) {
  const Eigen::Index n = z.rows();
  if (b.values.rows() != n || b.values.cols() != n)
    throw InputError("objective_f_eta: B must be n x n for n samples");
  if (z.cols() != c.p())
    throw InputError("objective_f_eta: Z and C have mismatched dimensions");
  detail::check_alpha(alpha);
  if (eta < 0.0) throw ParameterError("objective_f_eta: eta must be >= 0");

  const Eigen::MatrixXd proj = z * c.C;  // n x d
  const double half_alpha = 0.5 * alpha;
  const bool plain = alpha == 1.0;  // sqrt is much cheaper than pow
  detail::CompensatedSum acc;
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = k + 1; l < n; ++l) {
      const double sq = (proj.row(k) - proj.row(l)).squaredNorm() + eta;
      const double term = plain ? std::sqrt(sq) : std::pow(sq, half_alpha);
      acc.add(2.0 * term * b.values(k, l));
    }
    acc.add(std::pow(eta, half_alpha) * b.values(k, k));
  }
  return acc.value() / (static_cast<double>(n) * static_cast<double>(n));
}

/// Gradient of F_eta with respect to C:
///   (alpha/n^2) sum_kl B_kl (z_k - z_l)(z_k - z_l)' C
///                / (||C'z_k - C'z_l||^2 + eta)^((2-alpha)/2).
/// Evaluated through the weighted-Laplacian identity
///   sum_kl w_kl (z_k - z_l)(z_k - z_l)' = 2 Z'(diag(W 1) - W) Z,
/// which costs O(n^2 d + n p d) instead of O(n^2 p d).
inline Eigen::MatrixXd euclidean_gradient(const StiefelPoint& c,
                                          const Eigen::MatrixXd& z,
                                          const CenteredDistanceMatrix& b,
                                          double alpha, double eta) {
  const Eigen::Index n = z.rows();
  if (b.values.rows() != n || b.values.cols() != n)
    throw InputError("euclidean_gradient: B must be n x n for n samples");
  if (z.cols() != c.p())
    throw InputError("euclidean_gradient: Z and C have mismatched dimensions");
  detail::check_alpha(alpha);
  if (!(eta > 0.0)) throw ParameterError("euclidean_gradient: eta must be > 0");

  const Eigen::MatrixXd proj = z * c.C;
  const double expo = 0.5 * (2.0 - alpha);
  const bool plain = alpha == 1.0;
  Eigen::MatrixXd w(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    w(k, k) = 0.0;  // the k = l summand vanishes identically
    for (Eigen::Index l = k + 1; l < n; ++l) {
      const double sq = (proj.row(k) - proj.row(l)).squaredNorm() + eta;
      const double v =
          b.values(k, l) / (plain ? std::sqrt(sq) : std::pow(sq, expo));
      w(k, l) = v;
      w(l, k) = v;
    }
  }
  Eigen::MatrixXd lap = -w;
  lap.diagonal() += w.rowwise().sum();
  const double scale = 2.0 * alpha / (static_cast<double>(n) * static_cast<double>(n));
  return scale * (z.transpose() * (lap * proj));
}

/// Tangent-space projection at C: G - C sym(C'G).
inline Eigen::MatrixXd riemannian_gradient(const StiefelPoint& c,
                                           const Eigen::MatrixXd& g) {
  const Eigen::MatrixXd ctg = c.C.transpose() * g;
  return g - c.C * ((ctg + ctg.transpose()) * 0.5);
}

/// Projected gradient ascent of F_eta over St(d, p) with a backtracking
/// Armijo line search.  Accepted steps satisfy
///   F(C_new) >= F(C_old) + armijo_c * step * ||D||_F^2,
/// so the objective trace is nondecreasing by construction.  When no step
/// passes within max_backtracks the current iterate is declared stationary.
inline std::pair<StiefelPoint, OptimizeTrace> optimize(
    const Eigen::MatrixXd& z, const CenteredDistanceMatrix& b, double alpha,
    const OptimizerConfig& config, const StiefelPoint& c0) {
  config.validate();
  if (c0.orthogonality_error() > 1e-8)
    throw InputError("optimize: initial point is not on the Stiefel manifold");

  StiefelPoint current = c0;
  double f_current = objective_f_eta(current, z, b, alpha, config.eta);

  OptimizeTrace trace;
  trace.objective_values.push_back(f_current);
  trace.max_orthogonality_error = current.orthogonality_error();

  StiefelPoint best = current;
  double f_best = f_current;

  for (int iter = 0; iter < config.max_iter; ++iter) {
    const Eigen::MatrixXd grad =
        euclidean_gradient(current, z, b, alpha, config.eta);
    const Eigen::MatrixXd dir = config.update_rule == UpdateRule::riemannian
                                    ? riemannian_gradient(current, grad)
                                    : grad;
    const double dir_norm_sq = dir.squaredNorm();

    bool accepted = false;
    StiefelPoint next;
    double f_next = f_current;
    double step = config.init_step;
    for (int bt = 0; bt < config.max_backtracks; ++bt, step *= config.backtrack_factor) {
      StiefelPoint candidate;
      try {
        candidate = project_stiefel(current.C + step * dir);
      } catch (const NumericalError&) {
        continue;  // step left the projectable region; shrink and retry
      }
      const double f_cand = objective_f_eta(candidate, z, b, alpha, config.eta);
      if (f_cand >= f_current + config.armijo_c * step * dir_norm_sq) {
        next = std::move(candidate);
        f_next = f_cand;
        accepted = true;
        break;
      }
    }

    if (!accepted) {
      // No nondecreasing step exists at line-search resolution: stationary.
      trace.converged = true;
      break;
    }

    ++trace.iterations;
    trace.objective_values.push_back(f_next);
    trace.max_orthogonality_error =
        std::max(trace.max_orthogonality_error, next.orthogonality_error());
    if (f_next > f_best) {
      best = next;
      f_best = f_next;
    }
    const double gain = std::abs(f_next - f_current);
    current = std::move(next);
    f_current = f_next;
    if (gain <= config.tol_obj) {
      trace.converged = true;
      break;
    }
  }

  return {best, trace};
}

}  // namespace rsdr

#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rsdr/dataset.hpp"
#include "rsdr/errors.hpp"
#include "rsdr/estimator.hpp"
#include "rsdr/parallel.hpp"
#include "rsdr/rng.hpp"

namespace rsdr {

enum class Model { A, B, C };
enum class PredictorDist { gaussian, uniform };
enum class ContaminationMode { additive, replace };

struct ModelSpec {
  Model model = Model::A;
  PredictorDist dist = PredictorDist::gaussian;
  int n = 100;
  int p = 6;
  bool contaminated = false;
  std::uint64_t seed = 0;
  ContaminationMode contamination_mode = ContaminationMode::additive;

  int subspace_dim() const { return model == Model::C ? 1 : 2; }

  void validate() const {
    if (p < 3) throw ParameterError("model spec: need p >= 3");
    if (n < 2) throw ParameterError("model spec: need n >= 2");
  }
};

struct TrueSubspace {
  Eigen::MatrixXd beta;      // p x d true directions
  Eigen::MatrixXd rotation;  // the SO(p) matrix applied to the seed vectors
};

struct MethodSummary {
  std::string label;
  double angle_mean = 0.0;
  double angle_sd = 0.0;
  double time_mean_s = 0.0;
  double time_sd_s = 0.0;
  int completed = 0;
  int failed = 0;
};

struct ReplicationReport {
  std::vector<MethodSummary> methods;
  int reps = 0;
};

/// One fit configuration evaluated by replicate().
struct MethodConfig {
  std::string label;
  AlphaSpec alpha = AlphaSpec::fixed(1.0);
  FitOptions options;
  int d = 0;  // 0 = the model's true dimension
};

/// Uniform draw from SO(p): QR of a Gaussian matrix, columns sign-corrected
/// by the R diagonal, then one column flipped if the determinant is -1.
inline Eigen::MatrixXd random_rotation(int p, RandomStream& rng) {
  Eigen::MatrixXd g(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) g(i, j) = rng.normal();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < p; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  if (q.determinant() < 0.0) q.col(p - 1) = -q.col(p - 1);
  return q;
}

/// Generates one dataset from the three benchmark models.  Separate named
/// streams drive the rotation, the predictors, the noise, and the
/// contamination indicator, so the indicator is independent of X and the
/// whole draw is a pure function of the seed.
inline std::pair<Dataset, TrueSubspace> generate(const ModelSpec& spec) {
  spec.validate();
  const int n = spec.n, p = spec.p;

  RandomStream rotation_rng(spec.seed, "rotation");
  RandomStream predictor_rng(spec.seed, "predictors");
  RandomStream noise_rng(spec.seed, "noise");
  RandomStream contamination_rng(spec.seed, "contamination");

  const Eigen::MatrixXd rotation = random_rotation(p, rotation_rng);

  Eigen::VectorXd b1 = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd b2 = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd b3 = Eigen::VectorXd::Zero(p);
  b1(0) = 1.0;
  b2(1) = 1.0;
  b3(0) = 1.0;
  b3(1) = 0.5;
  b3(2) = 1.0;
  const Eigen::VectorXd beta1 = rotation.transpose() * b1;
  const Eigen::VectorXd beta2 = rotation.transpose() * b2;
  const Eigen::VectorXd beta3 = rotation.transpose() * b3;

  Dataset data;
  data.X.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j)
      data.X(i, j) = spec.dist == PredictorDist::gaussian
                         ? predictor_rng.normal()
                         : predictor_rng.uniform(-2.0, 2.0);

  data.Y.resize(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::RowVectorXd x = data.X.row(i);
    switch (spec.model) {
      case Model::A: {
        const double t1 = x.dot(beta1.transpose());
        const double t2 = x.dot(beta2.transpose());
        data.Y(i) = t1 * t1 + t2 + 0.1 * noise_rng.normal();
        break;
      }
      case Model::B: {
        const double e1 = noise_rng.normal();
        const double e2 = noise_rng.normal();
        const double s = 2.0 * x.dot(beta1.transpose()) + e1;
        const double sign = s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
        data.Y(i) =
            sign * std::log(std::abs(2.0 * x.dot(beta2.transpose()) + 4.0 + e2));
        break;
      }
      case Model::C: {
        data.Y(i) = std::exp(x.dot(beta3.transpose())) * noise_rng.normal();
        break;
      }
    }
  }

  if (spec.contaminated) {
    for (int i = 0; i < n; ++i) {
      const double u = contamination_rng.uniform01();
      if (u < 0.1) {
        const double shift = 50.0 * data.X.row(i).sum();
        data.Y(i) = spec.contamination_mode == ContaminationMode::additive
                        ? data.Y(i) + shift
                        : shift;
      }
    }
  }

  TrueSubspace truth;
  truth.rotation = rotation;
  if (spec.model == Model::C) {
    truth.beta = beta3;
  } else {
    truth.beta.resize(p, 2);
    truth.beta.col(0) = beta1;
    truth.beta.col(1) = beta2;
  }
  return {std::move(data), std::move(truth)};
}

/// Largest principal angle between span(B1) and span(B2):
/// arccos of the smallest singular value of Q1' Q2.
inline double principal_angle(const Eigen::MatrixXd& b1,
                              const Eigen::MatrixXd& b2) {
  auto orthonormalize = [](const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    if (!(sv(sv.size() - 1) > 1e-12 * sv(0)))
      throw InputError("principal_angle: basis is rank deficient");
    return Eigen::MatrixXd(svd.matrixU());
  };
  const Eigen::MatrixXd q1 = orthonormalize(b1);
  const Eigen::MatrixXd q2 = orthonormalize(b2);
  Eigen::JacobiSVD<Eigen::MatrixXd> cross(q1.transpose() * q2);
  const auto& sv = cross.singularValues();
  const double smallest = std::clamp(sv(sv.size() - 1), 0.0, 1.0);
  return std::acos(smallest);
}

/// Runs each method on `reps` independently generated datasets and
/// aggregates principal angles against the true subspace plus wall-clock
/// times.  A method failure on one replication is excluded from the
/// aggregates and counted.  Replications run in parallel with per-replication
/// seeds, so results do not depend on the thread count.
inline ReplicationReport replicate(const ModelSpec& base,
                                   const std::vector<MethodConfig>& methods,
                                   int reps, int threads = 1) {
  if (reps < 1) throw ParameterError("replicate: need reps >= 1");
  if (methods.empty()) throw ParameterError("replicate: no methods given");
  base.validate();

  const int n_methods = static_cast<int>(methods.size());
  struct Cell {
    double angle = 0.0;
    double seconds = 0.0;
    bool ok = false;
  };
  std::vector<std::vector<Cell>> cells(reps, std::vector<Cell>(n_methods));

  parallel_for(reps, threads, [&](int r) {
    ModelSpec spec = base;
    spec.seed = base.seed + static_cast<std::uint64_t>(r) + 1;
    const auto [data, truth] = generate(spec);
    for (int m = 0; m < n_methods; ++m) {
      const MethodConfig& method = methods[m];
      const int d = method.d > 0 ? method.d : spec.subspace_dim();
      FitOptions options = method.options;
      options.seed = spec.seed;
      const auto start = std::chrono::steady_clock::now();
      try {
        const FitResult result = fit(data, d, method.alpha, options);
        const std::chrono::duration<double> elapsed =
            std::chrono::steady_clock::now() - start;
        cells[r][m] = {principal_angle(truth.beta, result.beta_hat),
                       elapsed.count(), true};
      } catch (const Error&) {
        cells[r][m].ok = false;
      }
    }
  });

  ReplicationReport report;
  report.reps = reps;
  for (int m = 0; m < n_methods; ++m) {
    MethodSummary s;
    s.label = methods[m].label;
    std::vector<double> angles, times;
    for (int r = 0; r < reps; ++r) {
      if (cells[r][m].ok) {
        angles.push_back(cells[r][m].angle);
        times.push_back(cells[r][m].seconds);
      } else {
        ++s.failed;
      }
    }
    s.completed = static_cast<int>(angles.size());
    auto mean_sd = [](const std::vector<double>& xs) {
      if (xs.empty()) return std::pair<double, double>{0.0, 0.0};
      double mean = 0.0;
      for (double x : xs) mean += x;
      mean /= static_cast<double>(xs.size());
      double ss = 0.0;
      for (double x : xs) ss += (x - mean) * (x - mean);
      const double sd =
          xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
      return std::pair<double, double>{mean, sd};
    };
    std::tie(s.angle_mean, s.angle_sd) = mean_sd(angles);
    std::tie(s.time_mean_s, s.time_sd_s) = mean_sd(times);
    report.methods.push_back(std::move(s));
  }
  return report;
}

/// AR(1) design for the outlier study: X ~ N(0, Sigma) with
/// Sigma_jk = 0.5^|j-k|, clean responses Y = X beta + eps with
/// beta = (1,1,1,1,1,0,...), and n_outliers randomly placed responses whose
/// mean switches to X gamma with gamma = (0,0,0,0,0,1,...,1).
inline std::pair<Dataset, std::vector<bool>> generate_ar1_outlier_data(
    int n, int p, int n_outliers, std::uint64_t seed) {
  if (p < 10) throw ParameterError("ar1 design: need p >= 10");
  if (n < 2) throw ParameterError("ar1 design: need n >= 2");
  if (n_outliers < 0 || n_outliers >= n)
    throw ParameterError("ar1 design: need 0 <= n_outliers < n");

  Eigen::MatrixXd sigma(p, p);
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k) sigma(j, k) = std::pow(0.5, std::abs(j - k));
  const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw NumericalError("ar1 design: Cholesky factorization failed");
  const Eigen::MatrixXd chol_t = llt.matrixL().transpose();

  RandomStream predictor_rng(seed, "predictors");
  RandomStream noise_rng(seed, "noise");
  RandomStream index_rng(seed, "outlier-indices");

  Dataset data;
  data.X.resize(n, p);
  for (int i = 0; i < n; ++i) {
    Eigen::RowVectorXd g(p);
    for (int j = 0; j < p; ++j) g(j) = predictor_rng.normal();
    data.X.row(i) = g * chol_t;
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  beta.head(5).setOnes();
  Eigen::VectorXd gamma = Eigen::VectorXd::Ones(p);
  gamma.head(5).setZero();

  data.Y.resize(n);
  for (int i = 0; i < n; ++i)
    data.Y(i) = data.X.row(i).dot(beta.transpose()) + noise_rng.normal();

  std::vector<bool> flags(n, false);
  for (int idx : index_rng.sample_without_replacement(n, n_outliers)) {
    flags[idx] = true;
    const double eps = data.Y(idx) - data.X.row(idx).dot(beta.transpose());
    data.Y(idx) = data.X.row(idx).dot(gamma.transpose()) + eps;
  }
  return {std::move(data), std::move(flags)};
}

}  // namespace rsdr

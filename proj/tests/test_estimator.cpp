#include "rsdr/estimator.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "rsdr/simulate.hpp"
#include "test_support.hpp"

using rsdr::AlphaSpec;
using rsdr::Dataset;
using rsdr::FitOptions;
using rsdr::InitSource;
using rsdr::Model;
using rsdr::ModelSpec;
using rsdr::PredictorDist;
using rsdr::WhitenedData;

namespace {

Dataset linear_dataset(rsdr::RandomStream& rng, int n, int p,
                       const Eigen::VectorXd& direction, double noise_sd,
                       bool squared = false) {
  Dataset data;
  data.X = testsup::random_matrix(rng, n, p);
  data.Y.resize(n);
  for (int i = 0; i < n; ++i) {
    const double t = data.X.row(i).dot(direction.transpose());
    data.Y(i) = (squared ? t * t : t) + noise_sd * rng.normal();
  }
  return data;
}

TEST(Whiten, IdentityCovarianceLeavesCenteredData) {
  rsdr::RandomStream rng(201, "whiten-id");
  Dataset raw;
  raw.X = testsup::random_matrix(rng, 80, 4);
  raw.Y = Eigen::VectorXd::Zero(80);
  // First whitening produces data with unit sample covariance...
  const WhitenedData wd0 = rsdr::whiten(raw, 0.0);
  Dataset unit;
  unit.X = wd0.Z;
  unit.Y = raw.Y;
  // ...so whitening it again must return (centered) input unchanged.
  const WhitenedData wd = rsdr::whiten(unit, 0.0);
  const Eigen::MatrixXd centered = unit.X.rowwise() - unit.X.colwise().mean();
  EXPECT_LT((wd.Z - centered).norm(), 1e-6 * centered.norm());
}

TEST(Whiten, RemovesGlobalScale) {
  rsdr::RandomStream rng(202, "whiten-scale");
  Dataset data;
  data.X = 7.5 * testsup::random_matrix(rng, 120, 3);
  data.Y = Eigen::VectorXd::Zero(120);
  const WhitenedData wd = rsdr::whiten(data, 0.0);
  const int n = 120;
  for (int j = 0; j < 3; ++j) {
    const double mean = wd.Z.col(j).mean();
    const double var =
        (wd.Z.col(j).array() - mean).square().sum() / (n - 1);
    EXPECT_NEAR(var, 1.0, 1e-6);
  }
  // With a zero ridge the whole sample covariance of Z is the identity.
  const Eigen::MatrixXd cov = wd.Z.transpose() * wd.Z / (n - 1.0);
  EXPECT_LT((cov - Eigen::MatrixXd::Identity(3, 3)).norm(), 1e-6);
  // Factor identities.
  EXPECT_LT((wd.sigma_half * wd.sigma_neg_half -
             Eigen::MatrixXd::Identity(3, 3)).norm(),
            1e-8);
}

TEST(Whiten, SingularCovarianceRejected) {
  rsdr::RandomStream rng(203, "whiten-sing");
  Dataset data;
  data.X = testsup::random_matrix(rng, 4, 6);  // p > n
  data.Y = Eigen::VectorXd::Zero(4);
  EXPECT_THROW(rsdr::whiten(data, 0.0), rsdr::NumericalError);
  EXPECT_THROW(rsdr::whiten(data, -1.0), rsdr::ParameterError);
  // A positive ridge makes it well defined.
  EXPECT_NO_THROW(rsdr::whiten(data, 0.1));
}

TEST(SirDirections, RecoversLinearLink) {
  rsdr::RandomStream rng(204, "sir-linear");
  Eigen::VectorXd direction = Eigen::VectorXd::Zero(5);
  direction << 1.0, -0.5, 2.0, 0.0, 0.25;
  const Dataset data = linear_dataset(rng, 500, 5, direction, 0.05);
  const Eigen::MatrixXd beta = rsdr::sir_directions(data, 1, 10);
  EXPECT_LT(rsdr::principal_angle(beta, direction), 0.1);
}

TEST(SirDirections, PureNoiseStillReturnsADirection) {
  rsdr::RandomStream rng(205, "sir-noise");
  Dataset data;
  data.X = testsup::random_matrix(rng, 100, 4);
  data.Y.resize(100);
  for (int i = 0; i < 100; ++i) data.Y(i) = rng.normal();
  const Eigen::MatrixXd beta = rsdr::sir_directions(data, 1, 10);
  EXPECT_EQ(beta.rows(), 4);
  EXPECT_EQ(beta.cols(), 1);
  EXPECT_TRUE(beta.allFinite());
}

TEST(SirDirections, MissesSymmetricLink) {
  rsdr::RandomStream rng(206, "sir-symmetric");
  Eigen::VectorXd direction = Eigen::VectorXd::Zero(5);
  direction(0) = 1.0;
  const Dataset data = linear_dataset(rng, 500, 5, direction, 0.05, /*squared=*/true);
  const Eigen::MatrixXd beta = rsdr::sir_directions(data, 1, 10);
  EXPECT_GT(rsdr::principal_angle(beta, direction), 1.0);
}

TEST(SirDirections, SlicingErrors) {
  rsdr::RandomStream rng(207, "sir-errors");
  Dataset data;
  data.X = testsup::random_matrix(rng, 6, 3);
  data.Y = Eigen::VectorXd::LinSpaced(6, 0.0, 1.0);
  EXPECT_THROW(rsdr::sir_directions(data, 1, 10), rsdr::InputError);  // n < slices
  EXPECT_THROW(rsdr::sir_directions(data, 2, 2), rsdr::ParameterError);  // < d+1
}

TEST(DrDirections, RecoversSymmetricLink) {
  rsdr::RandomStream rng(208, "dr-quadratic");
  Eigen::VectorXd direction = Eigen::VectorXd::Zero(5);
  direction(0) = 1.0;
  const Dataset data = linear_dataset(rng, 500, 5, direction, 0.05, /*squared=*/true);
  const Eigen::MatrixXd beta = rsdr::dr_directions(data, 1, 10);
  EXPECT_LT(rsdr::principal_angle(beta, direction), 0.2);
}

TEST(DrDirections, ConstantResponseIsDefined) {
  rsdr::RandomStream rng(209, "dr-const");
  Dataset data;
  data.X = testsup::random_matrix(rng, 60, 4);
  data.Y = Eigen::VectorXd::Constant(60, 3.25);
  const Eigen::MatrixXd beta = rsdr::dr_directions(data, 1, 6);
  EXPECT_TRUE(beta.allFinite());
}

TEST(DrDirections, RecoversLinearLink) {
  rsdr::RandomStream rng(210, "dr-linear");
  Eigen::VectorXd direction = Eigen::VectorXd::Zero(5);
  direction << 0.5, 1.0, 0.0, -1.0, 0.5;
  const Dataset data = linear_dataset(rng, 500, 5, direction, 0.05);
  const Eigen::MatrixXd beta = rsdr::dr_directions(data, 1, 10);
  EXPECT_LT(rsdr::principal_angle(beta, direction), 0.15);
}

TEST(ChooseInitialization, QuadraticLinkPrefersDr) {
  rsdr::RandomStream rng(211, "init-quadratic");
  Eigen::VectorXd direction = Eigen::VectorXd::Zero(5);
  direction(1) = 1.0;
  const Dataset data = linear_dataset(rng, 400, 5, direction, 0.05, /*squared=*/true);
  const auto choice = rsdr::choose_initialization(data, 1, 10, 1.0);
  EXPECT_EQ(choice.source, InitSource::dr);
}

TEST(ChooseInitialization, WinnerHasLargerDcov) {
  rsdr::RandomStream rng(212, "init-linear");
  Eigen::VectorXd direction = Eigen::VectorXd::Zero(4);
  direction << 1.0, 1.0, -1.0, 0.0;
  const Dataset data = linear_dataset(rng, 300, 4, direction, 0.1);
  const WhitenedData wd = rsdr::whiten(data, 0.0);
  const Eigen::MatrixXd sir = rsdr::sir_directions(wd, data.Y, 1, 10);
  const Eigen::MatrixXd dr = rsdr::dr_directions(wd, data.Y, 1, 10);
  const double score_sir = rsdr::sample_dcov_sq(data.X * sir, data.Y, 1.0);
  const double score_dr = rsdr::sample_dcov_sq(data.X * dr, data.Y, 1.0);
  const auto choice = rsdr::choose_initialization(wd, data, 1, 10, 1.0);
  const InitSource expected =
      score_sir >= score_dr ? InitSource::sir : InitSource::dr;
  EXPECT_EQ(choice.source, expected);
}

TEST(ChooseInitialization, FallsBackWhenOneCandidateFails) {
  rsdr::RandomStream rng(213, "init-fallback");
  Eigen::VectorXd direction = Eigen::VectorXd::Zero(3);
  direction(0) = 1.0;
  const Dataset data = linear_dataset(rng, 50, 3, direction, 0.1);
  rsdr::detail::CandidateOutcome sir, dr;
  sir.beta = direction;
  dr.error = "injected slicing error";
  const auto choice = rsdr::detail::pick_initialization(data, 1.0, sir, dr);
  EXPECT_EQ(choice.source, InitSource::sir);
  EXPECT_NE(choice.warning.find("injected"), std::string::npos);

  rsdr::detail::CandidateOutcome neither;
  neither.error = "also failed";
  EXPECT_THROW(rsdr::detail::pick_initialization(data, 1.0, neither, dr),
               rsdr::NumericalError);
}

TEST(CrossValidate, SingleElementGridIsChosen) {
  rsdr::RandomStream rng(214, "cv-single");
  Eigen::VectorXd direction = Eigen::VectorXd::Zero(4);
  direction(0) = 1.0;
  const Dataset data = linear_dataset(rng, 60, 4, direction, 0.1);
  FitOptions options;
  options.seed = 9;
  const auto report = rsdr::cross_validate_alpha(data, 1, {0.5}, 5, options);
  EXPECT_EQ(report.chosen_alpha, 0.5);
  EXPECT_EQ(report.grid.size(), 1u);
}

TEST(CrossValidate, ReportIsWellFormed) {
  rsdr::RandomStream rng(215, "cv-shape");
  Eigen::VectorXd direction = Eigen::VectorXd::Zero(4);
  direction << 1.0, 0.5, 0.0, -0.5;
  const Dataset data = linear_dataset(rng, 80, 4, direction, 0.1);
  FitOptions options;
  options.seed = 4;
  const std::vector<double> grid = {0.3, 0.6, 0.9};
  const auto report = rsdr::cross_validate_alpha(data, 1, grid, 5, options);
  ASSERT_EQ(report.grid.size(), 3u);
  ASSERT_EQ(report.mean_validation_scores.size(), 3u);
  ASSERT_EQ(report.fold_scores.size(), 3u);
  for (const auto& per_fold : report.fold_scores) {
    EXPECT_EQ(per_fold.size(), 5u);
    for (double s : per_fold) EXPECT_TRUE(std::isfinite(s));
  }
  // chosen_alpha attains the maximum mean score.
  const double best =
      *std::max_element(report.mean_validation_scores.begin(),
                        report.mean_validation_scores.end());
  const auto it = std::find(report.grid.begin(), report.grid.end(),
                            report.chosen_alpha);
  ASSERT_NE(it, report.grid.end());
  EXPECT_EQ(report.mean_validation_scores[it - report.grid.begin()], best);
}

TEST(CrossValidate, DeterministicGivenSeed) {
  rsdr::RandomStream rng(216, "cv-determinism");
  Eigen::VectorXd direction = Eigen::VectorXd::Zero(4);
  direction(2) = 1.0;
  const Dataset data = linear_dataset(rng, 70, 4, direction, 0.2);
  FitOptions options;
  options.seed = 77;
  const std::vector<double> grid = {0.4, 0.8};
  const auto a = rsdr::cross_validate_alpha(data, 1, grid, 4, options);
  options.threads = 4;
  const auto b = rsdr::cross_validate_alpha(data, 1, grid, 4, options);
  EXPECT_EQ(a.chosen_alpha, b.chosen_alpha);
  EXPECT_EQ(a.mean_validation_scores, b.mean_validation_scores);
  EXPECT_EQ(a.fold_scores, b.fold_scores);
}

TEST(CrossValidate, ContaminatedDataPrefersRobustAlpha) {
  // On contaminated model A data the chosen alpha should be well below 1.
  int below_one = 0;
  for (int seed = 0; seed < 20; ++seed) {
    ModelSpec spec;
    spec.model = Model::A;
    spec.dist = PredictorDist::gaussian;
    spec.n = 100;
    spec.p = 6;
    spec.contaminated = true;
    spec.seed = 500 + seed;
    const auto [data, truth] = rsdr::generate(spec);
    FitOptions options;
    options.seed = spec.seed;
    options.threads = 2;
    const auto report =
        rsdr::cross_validate_alpha(data, 2, {0.1, 0.3, 0.5, 0.7, 0.9}, 5, options);
    if (report.chosen_alpha < 1.0) ++below_one;
  }
  EXPECT_GT(below_one, 10);
}

TEST(Fit, FullDimensionalFitSpansEverything) {
  rsdr::RandomStream rng(217, "fit-full");
  Eigen::VectorXd direction = Eigen::VectorXd::Zero(3);
  direction << 1.0, -1.0, 0.5;
  const Dataset data = linear_dataset(rng, 60, 3, direction, 0.1);
  const auto result = rsdr::fit(data, 3, AlphaSpec::fixed(1.0));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(result.beta_hat);
  EXPECT_GT(svd.singularValues()(2), 1e-8);  // full rank: spans R^3
  // Rotation invariance: with d = p the objective is constant in C and
  // equals the dcov of the full whitened data.
  const WhitenedData wd = rsdr::whiten(data, rsdr::default_ridge(data));
  const double full_dcov = rsdr::sample_dcov_sq(wd.Z, data.Y, 1.0);
  const double fitted_dcov =
      rsdr::sample_dcov_sq(data.X * result.beta_hat, data.Y, 1.0);
  EXPECT_NEAR(fitted_dcov, full_dcov, 1e-6 * std::max(1.0, std::abs(full_dcov)));
  EXPECT_NEAR(result.final_objective, full_dcov, 1e-4);
}

TEST(Fit, RejectsBadDimension) {
  rsdr::RandomStream rng(218, "fit-dim");
  Eigen::VectorXd direction = Eigen::VectorXd::Zero(3);
  direction(0) = 1.0;
  const Dataset data = linear_dataset(rng, 40, 3, direction, 0.1);
  EXPECT_THROW(rsdr::fit(data, 10, AlphaSpec::fixed(1.0)), rsdr::ParameterError);
  EXPECT_THROW(rsdr::fit(data, 0, AlphaSpec::fixed(1.0)), rsdr::ParameterError);
}

TEST(Fit, ConstraintSatisfied) {
  ModelSpec spec;
  spec.model = Model::A;
  spec.n = 100;
  spec.p = 6;
  spec.seed = 42;
  const auto [data, truth] = rsdr::generate(spec);
  const auto result = rsdr::fit(data, 2, AlphaSpec::fixed(1.0));
  // beta' Sigma beta = I in the ridge-adjusted metric used by the fit.
  const Eigen::MatrixXd centered = data.X.rowwise() - data.X.colwise().mean();
  Eigen::MatrixXd sigma = (centered.transpose() * centered) / (data.n() - 1.0);
  sigma.diagonal().array() += rsdr::default_ridge(data);
  const Eigen::MatrixXd gram =
      result.beta_hat.transpose() * sigma * result.beta_hat;
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(2, 2)).norm(), 1e-6);
}

TEST(Fit, SubspaceIdentifiableUpToRotation) {
  ModelSpec spec;
  spec.model = Model::A;
  spec.n = 100;
  spec.p = 6;
  spec.seed = 7;
  const auto [data, truth] = rsdr::generate(spec);

  const Eigen::MatrixXd init = truth.beta;
  Eigen::Matrix2d q;
  const double theta = 0.83;
  q << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);

  FitOptions options;
  options.user_init = init;
  const auto fit1 = rsdr::fit(data, 2, AlphaSpec::fixed(1.0), options);
  options.user_init = Eigen::MatrixXd(init * q);
  const auto fit2 = rsdr::fit(data, 2, AlphaSpec::fixed(1.0), options);

  EXPECT_EQ(fit1.init_source, InitSource::user);
  EXPECT_NEAR(fit1.final_objective, fit2.final_objective, 1e-8);
  auto projector = [](const Eigen::MatrixXd& b) {
    return Eigen::MatrixXd(
        b * (b.transpose() * b).ldlt().solve(b.transpose()));
  };
  EXPECT_LT((projector(fit1.beta_hat) - projector(fit2.beta_hat)).norm(), 1e-4);
}

TEST(Fit, ModelCRecoverableAtModerateSampleSize) {
  // Light version of the benchmark: a handful of seeds, loose bound.
  double total = 0.0;
  for (int seed = 0; seed < 5; ++seed) {
    ModelSpec spec;
    spec.model = Model::C;
    spec.n = 100;
    spec.p = 6;
    spec.seed = 900 + seed;
    const auto [data, truth] = rsdr::generate(spec);
    const auto result = rsdr::fit(data, 1, AlphaSpec::fixed(1.0));
    total += rsdr::principal_angle(truth.beta, result.beta_hat);
  }
  EXPECT_LT(total / 5.0, 0.5);
}

}  // namespace

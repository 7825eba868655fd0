#include "conneckt/inference.hpp"

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

namespace conneckt {
namespace {

Recording from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Recording rec;
  const auto p = static_cast<Eigen::Index>(rows.size());
  const auto T = static_cast<Eigen::Index>(rows.begin()->size());
  rec.values.resize(p, T);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index t = 0;
    for (double v : row) rec.values(i, t++) = v;
    ++i;
  }
  return rec;
}

CovarianceEstimate cov_of(const Eigen::MatrixXd& sigma) {
  return CovarianceEstimate{sigma, 100};
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

TEST(EmpiricalCovariance, HandComputedTwoByTwo) {
  const auto cov = empirical_covariance(from_rows({{1, 2, 3}, {1, 0, -1}}));
  EXPECT_EQ(cov.sample_count, 3u);
  EXPECT_DOUBLE_EQ(cov.sigma(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(cov.sigma(0, 1), -1.0);
  EXPECT_DOUBLE_EQ(cov.sigma(1, 0), -1.0);
  EXPECT_DOUBLE_EQ(cov.sigma(1, 1), 1.0);
}

TEST(EmpiricalCovariance, IdenticalAndConstantNeurons) {
  const auto same = empirical_covariance(from_rows({{0.3, 1.7, 2.2, 0.1}, {0.3, 1.7, 2.2, 0.1}}));
  EXPECT_EQ(same.sigma(0, 0), same.sigma(0, 1));
  EXPECT_EQ(same.sigma(0, 0), same.sigma(1, 1));

  const auto flat = empirical_covariance(from_rows({{1, 2, 4, 8}, {5, 5, 5, 5}}));
  EXPECT_EQ(flat.sigma(1, 0), 0.0);
  EXPECT_EQ(flat.sigma(0, 1), 0.0);
  EXPECT_EQ(flat.sigma(1, 1), 0.0);
}

TEST(EmpiricalCovariance, ExactlySymmetricWithNonnegativeDiagonal) {
  std::mt19937_64 rng(1);
  Recording rec;
  rec.values = testing::random_mixed_data(17, 333, rng);
  const auto cov = empirical_covariance(rec);
  EXPECT_TRUE(cov.sigma == cov.sigma.transpose());
  EXPECT_TRUE((cov.sigma.diagonal().array() >= 0.0).all());
}

TEST(EmpiricalCovariance, NeedsTwoSamples) {
  try {
    empirical_covariance(from_rows({{1}, {2}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
  }
}

TEST(InvertExact, IdentityAndDiagonal) {
  const auto id = invert_exact(cov_of(Eigen::MatrixXd::Identity(4, 4)));
  EXPECT_TRUE(id.omega.isApprox(Eigen::MatrixXd::Identity(4, 4), 0.0) ||
              id.omega == Eigen::MatrixXd::Identity(4, 4));
  EXPECT_EQ(id.components_used, 4u);

  Eigen::MatrixXd d(2, 2);
  d << 2, 0, 0, 4;
  const auto inv = invert_exact(cov_of(d));
  EXPECT_DOUBLE_EQ(inv.omega(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(inv.omega(1, 1), 0.25);
  EXPECT_EQ(inv.omega(0, 1), 0.0);
}

TEST(InvertExact, RandomSpdProductIsIdentity) {
  std::mt19937_64 rng(20);
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::MatrixXd sigma = testing::random_spd(20, rng, 0.05);
    const auto prec = invert_exact(cov_of(sigma));
    EXPECT_TRUE(prec.omega == prec.omega.transpose());
    EXPECT_LT(max_abs(prec.omega * sigma - Eigen::MatrixXd::Identity(20, 20)), 1e-8);
  }
}

TEST(InvertExact, SingularCovarianceIsAConditioningError) {
  const auto cov = empirical_covariance(from_rows({{1, 2, 4, 8}, {5, 5, 5, 5}}));
  try {
    invert_exact(cov);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Conditioning);
  }
}

TEST(InvertPca, FullRankMatchesExact) {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::MatrixXd sigma = testing::random_spd(15, rng);
    const auto exact = invert_exact(cov_of(sigma));
    const auto pca = invert_pca(cov_of(sigma), 15);
    EXPECT_EQ(pca.components_used, 15u);
    EXPECT_TRUE(pca.omega == pca.omega.transpose());
    EXPECT_LT(max_abs(pca.omega - exact.omega), 1e-8 * max_abs(exact.omega));
  }
}

TEST(InvertPca, SingleComponentOfDiagonal) {
  Eigen::MatrixXd d(2, 2);
  d << 4, 0, 0, 1;
  const auto prec = invert_pca(cov_of(d), 1);
  EXPECT_EQ(prec.components_used, 1u);
  EXPECT_NEAR(prec.omega(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(prec.omega(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(prec.omega(1, 1), 0.0, 1e-15);
}

TEST(InvertPca, RankDeficientGivesPseudoInverse) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd basis(5, 3);
  for (Eigen::Index r = 0; r < 5; ++r)
    for (Eigen::Index c = 0; c < 3; ++c) basis(r, c) = normal(rng);
  const Eigen::MatrixXd sigma = basis * basis.transpose();  // rank 3

  const Eigen::MatrixXd pinv = testing::svd_pseudo_inverse(sigma);
  for (std::size_t m : {3u, 4u, 5u}) {
    const auto prec = invert_pca(cov_of(sigma), m);
    EXPECT_EQ(prec.components_used, 3u) << m;
    EXPECT_TRUE(prec.omega.allFinite());
    EXPECT_LT(max_abs(prec.omega - pinv), 1e-8 * max_abs(pinv)) << m;
  }
}

TEST(InvertPca, ComponentCountOutOfRange) {
  const auto cov = cov_of(Eigen::MatrixXd::Identity(3, 3));
  for (std::size_t m : {0u, 4u}) {
    try {
      invert_pca(cov, m);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Parameter);
    }
  }
}

TEST(PartialCorrelation, IdentityPrecisionHasNoEdges) {
  const auto pc = partial_correlation(PrecisionEstimate{Eigen::MatrixXd::Identity(5, 5), 5});
  EXPECT_EQ(max_abs(pc.scores), 0.0);
  EXPECT_TRUE(pc.symmetric);
}

TEST(PartialCorrelation, TwoVariablesGiveTheCorrelation) {
  for (double rho : {-0.8, -0.1, 0.0, 0.35, 0.9}) {
    Eigen::MatrixXd sigma(2, 2);
    sigma << 1, rho, rho, 1;
    const auto pc = partial_correlation(invert_exact(cov_of(sigma)));
    EXPECT_NEAR(pc.scores(0, 1), rho, 1e-14);
    EXPECT_EQ(pc.scores(0, 0), 0.0);
  }
}

TEST(PartialCorrelation, GaussianChainSeparatesDirectFromIndirect) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal;
  const Eigen::Index n = 100000;
  Recording rec;
  rec.values.resize(3, n);
  for (Eigen::Index t = 0; t < n; ++t) {
    const double x = normal(rng);
    const double y = x + normal(rng);
    const double z = y + normal(rng);
    rec.values(0, t) = x;
    rec.values(1, t) = y;
    rec.values(2, t) = z;
  }
  InferenceOptions exact;
  exact.pca = PcaSetting::off();
  const auto pc = partial_correlation(rec, exact);
  const auto oracle = testing::residual_regression_partial_correlation(rec.values);
  EXPECT_LT(std::abs(pc.scores(0, 2)), 0.02);
  EXPECT_GT(pc.scores(0, 1), 0.5);
  EXPECT_GT(pc.scores(1, 2), 0.5);
  EXPECT_LT(max_abs(pc.scores - oracle), 1e-9);
}

TEST(PartialCorrelation, MatchesResidualRegressionOracle) {
  std::mt19937_64 rng(77);
  for (int rep = 0; rep < 3; ++rep) {
    Recording rec;
    rec.values = testing::random_mixed_data(12, 5000, rng);
    InferenceOptions exact;
    exact.pca = PcaSetting::off();
    const auto pc = partial_correlation(rec, exact);
    const auto oracle = testing::residual_regression_partial_correlation(rec.values);
    EXPECT_LT(max_abs(pc.scores - oracle), 1e-6);
  }
}

TEST(PartialCorrelation, ScaleInvariantSymmetricAndBounded) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::MatrixXd sigma = testing::random_spd(9, rng);
    const auto base = partial_correlation(invert_exact(cov_of(sigma)));
    EXPECT_TRUE(base.scores == base.scores.transpose());
    EXPECT_LE(max_abs(base.scores), 1.0 + 1e-9);
    for (double alpha : {1e-3, 0.7, 42.0, 1e4}) {
      const auto scaled = partial_correlation(invert_exact(cov_of(alpha * sigma)));
      EXPECT_LT(max_abs(scaled.scores - base.scores), 1e-12) << alpha;
    }
  }
}

TEST(PartialCorrelation, NonpositiveDiagonalNamesTheNeuron) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Identity(3, 3);
  omega(2, 2) = 0.0;
  try {
    partial_correlation(PrecisionEstimate{omega, 3});
    FAIL();
  } catch (const DegeneracyError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Degeneracy);
    EXPECT_EQ(e.neuron(), 2u);
  }
}

TEST(PearsonCorrelation, DuplicateAndMirror) {
  const auto rec = from_rows({{0.1, 0.5, -0.3, 2.0, 0.4}, {0.1, 0.5, -0.3, 2.0, 0.4},
                              {-0.1, -0.5, 0.3, -2.0, -0.4}});
  const auto pc = pearson_correlation(rec);
  EXPECT_NEAR(pc.scores(0, 1), 1.0, 1e-15);
  EXPECT_NEAR(pc.scores(0, 2), -1.0, 1e-15);
  EXPECT_EQ(pc.scores(1, 1), 0.0);
  EXPECT_TRUE(pc.symmetric);
}

TEST(PearsonCorrelation, IndependentSeriesAreNearZero) {
  std::mt19937_64 rng(10000);
  std::normal_distribution<double> normal;
  Recording rec;
  rec.values.resize(4, 10000);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index t = 0; t < 10000; ++t) rec.values(i, t) = normal(rng);
  EXPECT_LT(max_abs(pearson_correlation(rec).scores), 0.05);
}

TEST(PearsonCorrelation, ZeroVarianceIsDegenerate) {
  try {
    pearson_correlation(from_rows({{1, 2, 3}, {4, 4, 4}}));
    FAIL();
  } catch (const DegeneracyError& e) {
    EXPECT_EQ(e.neuron(), 1u);
  }
}

TEST(PcaSetting, ParsesAndResolves) {
  EXPECT_EQ(PcaSetting::parse("off").components(10), std::nullopt);
  EXPECT_EQ(PcaSetting::parse("7").components(10), 7u);
  EXPECT_EQ(PcaSetting::parse("0.8p").components(1000), 800u);
  EXPECT_EQ(PcaSetting::parse("0.8p").components(50), 40u);
  EXPECT_EQ(PcaSetting::parse("0.8p").components(1), 1u);
  EXPECT_EQ(PcaSetting::parse("0.8p").to_string(), "0.8p");
  EXPECT_THROW(PcaSetting::parse("11").components(10), Error);
  EXPECT_THROW(PcaSetting::parse("0"), Error);
  EXPECT_THROW(PcaSetting::parse("1.5p"), Error);
  EXPECT_THROW(PcaSetting::parse("many"), Error);
}

TEST(EstimatePrecision, StandardizeAndRidge) {
  std::mt19937_64 rng(31);
  Eigen::MatrixXd sigma = testing::random_spd(6, rng);
  sigma.row(0) *= 5.0;
  sigma.col(0) *= 5.0;
  InferenceOptions opts;
  opts.pca = PcaSetting::off();
  opts.standardize = true;
  const auto std_prec = estimate_precision(cov_of(sigma), opts);
  opts.standardize = false;
  const auto raw_prec = estimate_precision(cov_of(sigma), opts);
  // Exact inversion is scale invariant per variable, so partial correlations agree.
  EXPECT_LT(max_abs(partial_correlation(std_prec).scores - partial_correlation(raw_prec).scores), 1e-12);

  opts.ridge = 0.5;
  const auto ridged = estimate_precision(cov_of(sigma), opts);
  Eigen::MatrixXd shifted = sigma;
  shifted.diagonal().array() += 0.5;
  EXPECT_LT(max_abs(ridged.omega * shifted - Eigen::MatrixXd::Identity(6, 6)), 1e-10);
  opts.ridge = -1.0;
  EXPECT_THROW(estimate_precision(cov_of(sigma), opts), Error);
}

TEST(EstimatePrecision, RidgeRescuesConstantNeuron) {
  const auto cov = empirical_covariance(from_rows({{1, 2, 4, 8, 3}, {5, 5, 5, 5, 5}, {0, 1, 0, 1, 1}}));
  InferenceOptions opts;
  opts.pca = PcaSetting::off();
  EXPECT_THROW(estimate_precision(cov, opts), Error);
  opts.ridge = 1e-3;
  const auto pc = partial_correlation(estimate_precision(cov, opts));
  EXPECT_EQ(pc.scores(0, 1), 0.0);
}

}  // namespace
}  // namespace conneckt

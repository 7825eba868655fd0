#include "conneckt/directivity.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <random>

namespace conneckt {
namespace {

Recording rows(std::initializer_list<std::initializer_list<double>> data) {
  Recording rec;
  rec.values.resize(static_cast<Eigen::Index>(data.size()),
                    static_cast<Eigen::Index>(data.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : data) {
    Eigen::Index t = 0;
    for (double v : row) rec.values(i, t++) = v;
    ++i;
  }
  return rec;
}

AssociationMatrix symmetric(const Eigen::MatrixXd& m) {
  return AssociationMatrix{m, true};
}

ActivationCounts counts_with_z(const Eigen::MatrixXd& z, std::size_t samples = 100) {
  ActivationCounts c;
  c.s.setZero(z.rows(), z.cols());
  c.z = z;
  c.samples = samples;
  return c;
}

Recording random_recording(std::size_t p, std::size_t T, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.5);
  Recording rec;
  rec.values.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(T));
  for (Eigen::Index i = 0; i < rec.values.rows(); ++i)
    for (Eigen::Index t = 0; t < rec.values.cols(); ++t) rec.values(i, t) = unif(rng);
  return rec;
}

TEST(ActivationCounts, EnumeratedExample) {
  const auto c = activation_counts(rows({{0, 1, 0}, {0, 0.3, 1.2}}), 0.2, 0.5);
  EXPECT_EQ(c.s(0, 1), 2);
  // x_i(t+1) - x_j(t): 1 - 0 = 1, 0 - 0.3 < 0.
  EXPECT_EQ(c.s(1, 0), 0);
  EXPECT_EQ(c.z(0, 1), 2.0);
  EXPECT_EQ(c.z(1, 0), -2.0);
  EXPECT_EQ(c.samples, 3u);
}

TEST(ActivationCounts, IdenticalSeriesGiveZeroZ) {
  const auto c = activation_counts(rows({{0.1, 0.4, 0.5, 0.9}, {0.1, 0.4, 0.5, 0.9}}), 0.2, 0.5);
  EXPECT_EQ(c.s(0, 1), c.s(1, 0));
  EXPECT_EQ(c.z(0, 1), 0.0);
}

TEST(ActivationCounts, ZeroRecordingGivesZeroCounts) {
  Recording rec;
  rec.values = SeriesMatrix::Zero(4, 50);
  const auto c = activation_counts(rec, DirectivityConfig{});
  EXPECT_EQ(c.s.cwiseAbs().maxCoeff(), 0);
}

TEST(ActivationCounts, WindowIsClosed) {
  const auto c = activation_counts(rows({{0, 0, 0}, {0, 0.25, 0.5}}), 0.25, 0.5);
  EXPECT_EQ(c.s(0, 1), 2);
}

TEST(ActivationCounts, TooShortIsShapeError) {
  try {
    activation_counts(rows({{1}, {2}}), 0.2, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
  }
}

TEST(ActivationCounts, InvariantsOnRandomInput) {
  const auto rec = random_recording(9, 400, 1);
  const auto c = activation_counts(rec, 0.2, 0.5);
  EXPECT_GE(c.s.minCoeff(), 0);
  EXPECT_LE(c.s.maxCoeff(), 399);
  EXPECT_TRUE(c.z == -c.z.transpose());
  EXPECT_TRUE(c.z.diagonal().isZero(0.0));
  const auto n = normalized(c);
  EXPECT_TRUE(n.z == -n.z.transpose());
  EXPECT_DOUBLE_EQ(n.z(0, 1), c.z(0, 1) / 399.0);
}

TEST(ActivationCounts, SameResultOnAnyThreadCount) {
  const auto rec = random_recording(13, 300, 2);
  const auto one = activation_counts(rec, 0.2, 0.5, 1);
  const auto many = activation_counts(rec, 0.2, 0.5, 8);
  EXPECT_TRUE(one.s == many.s);
  EXPECT_TRUE(one.z == many.z);
}

TEST(ActivationCounts, LeadingNeuronHasPositiveZ) {
  // Neuron 1 repeats neuron 0 one step later with a 0.3 rise.
  std::mt19937_64 rng(3);
  std::bernoulli_distribution fire(0.1);
  Recording rec;
  rec.values = SeriesMatrix::Zero(2, 2000);
  for (Eigen::Index t = 0; t + 1 < 2000; ++t) {
    if (fire(rng)) {
      rec.values(0, t) = 1.0;
      rec.values(1, t + 1) = 1.3;
    }
  }
  const auto c = activation_counts(rec, 0.2, 0.5);
  EXPECT_GT(c.z(0, 1), 100.0);
}

TEST(ThresholdedAssociation, ZeroZGivesZeroMatrix) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(3, 3, 0.4);
  const auto r = thresholded_association(symmetric(p), counts_with_z(Eigen::MatrixXd::Zero(3, 3)), 1.0);
  EXPECT_EQ(r.scores.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_FALSE(r.symmetric);
}

TEST(ThresholdedAssociation, KeepsOnlyTheLeadingDirection) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(2, 2);
  p(0, 1) = p(1, 0) = 0.7;
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(2, 2);
  z(0, 1) = 5;
  z(1, 0) = -5;
  const auto r = thresholded_association(symmetric(p), counts_with_z(z), 1.0);
  EXPECT_EQ(r.scores(0, 1), 0.7);
  EXPECT_EQ(r.scores(1, 0), 0.0);

  const auto none = thresholded_association(symmetric(p), counts_with_z(z),
                                            std::numeric_limits<double>::infinity());
  EXPECT_EQ(none.scores.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ThresholdedAssociation, SizeMismatchAndBadPhi3) {
  const auto p = symmetric(Eigen::MatrixXd::Zero(3, 3));
  try {
    thresholded_association(p, counts_with_z(Eigen::MatrixXd::Zero(2, 2)), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Dimension);
  }
  EXPECT_THROW(thresholded_association(p, counts_with_z(Eigen::MatrixXd::Zero(3, 3)), 0.0), Error);
}

TEST(BlendedAssociation, ScalarExample) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(2, 2);
  p(0, 1) = p(1, 0) = 0.5;
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(2, 2);
  z(0, 1) = 10;
  z(1, 0) = -10;
  const auto q = blended_association(symmetric(p), counts_with_z(z), 0.997);
  EXPECT_NEAR(q.scores(0, 1), 0.5285, 1e-15);
  EXPECT_NEAR(q.scores(1, 0), 0.997 * 0.5 - 0.003 * 10, 1e-15);
  EXPECT_FALSE(q.symmetric);
}

TEST(BlendedAssociation, EndpointWeights) {
  const auto rec = random_recording(8, 200, 4);
  const auto c = activation_counts(rec, 0.2, 0.5);
  Eigen::MatrixXd p = Eigen::MatrixXd::Random(8, 8);
  p = (0.5 * (p + p.transpose())).eval();
  p.diagonal().setZero();

  const auto q1 = blended_association(symmetric(p), c, 1.0);
  EXPECT_TRUE(q1.scores == p);
  const auto q0 = blended_association(symmetric(p), c, 0.0);
  EXPECT_TRUE(q0.scores == c.z);
  EXPECT_THROW(blended_association(symmetric(p), c, 1.5), Error);
  EXPECT_THROW(blended_association(symmetric(p), c, -0.1), Error);
}

TEST(BlendedAssociation, SymmetricPartAndPerturbationBound) {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    const auto rec = random_recording(10, 500, seed);
    const auto c = activation_counts(rec, 0.2, 0.5);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Eigen::MatrixXd p(10, 10);
    for (Eigen::Index i = 0; i < 10; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) p(i, j) = p(j, i) = (i == j ? 0.0 : unif(rng));

    const double w = 0.997;
    const auto q = blended_association(symmetric(p), c, w);
    const double bound = (1.0 - w) * static_cast<double>(c.samples - 1);
    for (Eigen::Index i = 0; i < 10; ++i) {
      for (Eigen::Index j = 0; j < 10; ++j) {
        if (i == j) continue;
        // Exact in real arithmetic; each of the two sums rounds once.
        EXPECT_NEAR(q.scores(i, j) + q.scores(j, i), 2.0 * w * p(i, j), 1e-12);
        EXPECT_LE(std::abs(q.scores(i, j) - p(i, j)), bound);
      }
    }
  }
}

TEST(DirectivityConfig, Validation) {
  DirectivityConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.phi1 = 0.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = DirectivityConfig{};
  cfg.weight = 1.01;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = DirectivityConfig{};
  cfg.phi3 = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
}

}  // namespace
}  // namespace conneckt

#include "xpca/gaussian_fit.hpp"
#include "xpca/random.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <Eigen/SVD>

namespace xpca {
namespace {

Eigen::MatrixXd random_matrix(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd X(m, n);
  for (Eigen::Index t = 0; t < X.size(); ++t) X.data()[t] = rng.normal();
  return X;
}

// One column of 1000 values with counts 70/301/430/199.
ObservedMatrix four_level_column() {
  Eigen::MatrixXd X(1000, 1);
  const int counts[] = {70, 301, 430, 199};
  Eigen::Index r = 0;
  for (int v = 0; v < 4; ++v)
    for (int c = 0; c < counts[v]; ++c) X(r++, 0) = v + 1;
  return ObservedMatrix(X);
}

TEST(StandardizeTest, UsesPopulationMoments) {
  const ObservedMatrix d = parse_csv("a,b\n1,10\n2,NA\n3,30\n");
  const StandardizedData s = standardize(d);
  EXPECT_DOUBLE_EQ(s.moments[0].mean, 2.0);
  EXPECT_DOUBLE_EQ(s.moments[0].stddev, std::sqrt(2.0 / 3.0));
  EXPECT_DOUBLE_EQ(s.z.values(2, 1), 1.0);
  EXPECT_FALSE(s.z.mask(1, 1));
}

TEST(CocaTransformTest, MidpointTieValue) {
  const CopulaData c = coca_transform(four_level_column());
  EXPECT_NEAR(c.z.values(0, 0), -1.805931302157599865, 1e-12);
}

TEST(CocaTransformTest, MaximumTiesStayFinite) {
  const CopulaData c = coca_transform(four_level_column(), TieRule::Maximum);
  EXPECT_DOUBLE_EQ(coca_cumulative(c.edfs[0], TieRule::Maximum).back(), 1000.0 / 1001.0);
  EXPECT_TRUE(std::isfinite(c.z.values(999, 0)));
  EXPECT_NEAR(c.z.values(0, 0), std_normal_quantile(70.0 / 1001.0), 1e-15);
}

TEST(CocaImputeTest, ZeroLatentGivesMedianCategory) {
  FactorModel m = fit_coca(four_level_column(), {});
  m.U.setZero();
  const std::vector<Entry> scope{{0, 0}};
  EXPECT_EQ(coca_impute(m, scope)[0], 2.0);
}

class SvdOracleTest : public ::testing::TestWithParam<int> {};

TEST_P(SvdOracleTest, CompleteDataMatchesTruncatedSvd) {
  const int k = GetParam();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Eigen::MatrixXd X = random_matrix(30, 20, 1000 + seed);
    const FactorModel m = fit_pca(ObservedMatrix(X), {.rank = k});
    const StandardizedData s = standardize(ObservedMatrix(X));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(s.z.values, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::MatrixXd best = svd.matrixU().leftCols(k) *
                                 svd.singularValues().head(k).asDiagonal() *
                                 svd.matrixV().leftCols(k).transpose();
    EXPECT_LE((m.theta() - best).norm() / best.norm(), 1e-8) << "seed " << seed;
  }
}

INSTANTIATE_TEST_SUITE_P(Ranks, SvdOracleTest, ::testing::Values(1, 3, 5));

TEST(GaussianFitTest, AlsReachesSvdOptimumOnCompleteData) {
  const Eigen::MatrixXd X = random_matrix(25, 12, 77);
  const ObservedMatrix d(X);
  const FactorModel svd = fit_pca(d, {.rank = 2});
  const FactorModel als =
      fit_pca(d, {.rank = 2, .max_sweeps = 5000, .tol_rel_sse = 1e-14, .force_iterative = true});
  EXPECT_NEAR(als.info.objective, svd.info.objective, 1e-7 * svd.info.objective);
  EXPECT_LE((als.theta() - svd.theta()).norm() / svd.theta().norm(), 1e-4);
}

TEST(GaussianFitTest, SigmaIsRootMeanResidual) {
  const ObservedMatrix d = testing::mixed_with_missing(30, 10, 2, 0.2, 4);
  const FactorModel m = fit_coca(d, {.rank = 2});
  const CopulaData c = coca_transform(d);
  const double sse = masked_sse(c.z, m.U, m.V);
  EXPECT_NEAR(m.sigma, std::sqrt(sse / static_cast<double>(d.observed_count())), 1e-12);
  EXPECT_NEAR(m.info.objective, sse, 1e-9 * sse);
}

TEST(GaussianFitTest, AlsSweepNeverIncreasesSse) {
  const ObservedMatrix d = testing::mixed_with_missing(40, 15, 3, 0.3, 9);
  const CopulaData c = coca_transform(d);
  Eigen::MatrixXd U = random_matrix(40, 3, 1), V = random_matrix(15, 3, 2);
  double prev = masked_sse(c.z, U, V);
  for (int s = 0; s < 20; ++s) {
    const double next = als_sweep(c.z, U, V, 1e-8, Exec::Serial);
    EXPECT_LE(next, prev * (1 + 1e-12));
    prev = next;
  }
}

TEST(GaussianFitTest, SerialAndParallelAgreeBitwise) {
  const ObservedMatrix d = testing::mixed_with_missing(50, 20, 3, 0.3, 5);
  const FactorModel a = fit_coca(d, {.rank = 3, .exec = Exec::Serial});
  const FactorModel b = fit_coca(d, {.rank = 3, .exec = Exec::Parallel});
  EXPECT_TRUE(testing::bitwise_equal(a.U, b.U));
  EXPECT_TRUE(testing::bitwise_equal(a.V, b.V));
  EXPECT_EQ(a.sigma, b.sigma);
}

TEST(OrthogonalizeTest, KeepsProductAndOrthonormalizesV) {
  Eigen::MatrixXd U = random_matrix(12, 3, 5), V = random_matrix(8, 3, 6);
  const Eigen::MatrixXd before = U * V.transpose();
  orthogonalize(U, V);
  EXPECT_LE((U * V.transpose() - before).norm(), 1e-12 * before.norm());
  EXPECT_LE((V.transpose() * V - Eigen::MatrixXd::Identity(3, 3)).norm(), 1e-12);
  for (int c = 1; c < 3; ++c) EXPECT_GE(U.col(c - 1).norm(), U.col(c).norm());
  for (int c = 0; c < 3; ++c) {
    Eigen::Index at;
    V.col(c).cwiseAbs().maxCoeff(&at);
    EXPECT_GT(V(at, c), 0.0);
  }
  // canonical: repeating changes nothing
  Eigen::MatrixXd U2 = U, V2 = V;
  orthogonalize(U2, V2);
  EXPECT_LE((U2 - U).norm(), 1e-12);
}

TEST(GaussianFitTest, PcaImputeBackTransforms) {
  const ObservedMatrix d = parse_csv("a,b\n1,2\n2,4\n3,6\n4,8\n");
  const FactorModel m = fit_pca(d, {.rank = 1});
  const std::vector<Entry> scope{{0, 0}, {3, 1}};
  const auto est = pca_impute(m, scope);
  EXPECT_NEAR(est[0], 1.0, 1e-10);
  EXPECT_NEAR(est[1], 8.0, 1e-10);
  EXPECT_THROW(coca_impute(m, scope), std::invalid_argument);
}

TEST(GaussianFitTest, RejectsBadRank) {
  const ObservedMatrix d(random_matrix(6, 4, 1));
  EXPECT_THROW(fit_pca(d, {.rank = 0}), std::invalid_argument);
  EXPECT_THROW(fit_pca(d, {.rank = 5}), std::invalid_argument);
}

}  // namespace
}  // namespace xpca

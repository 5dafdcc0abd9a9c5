#include "xpca/gaussian_fit.hpp"
#include "xpca/sim.hpp"
#include "xpca/xpca_fit.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

namespace xpca {
namespace {

ObservedMatrix gaussian_data(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
  return generate(m, n, 2, 0.25, MarginalSpec::gaussian(n), seed).data;
}

TEST(FitOptionsTest, Validation) {
  EXPECT_THROW(validate(FitOptions{.rank = 0}), std::invalid_argument);
  EXPECT_THROW(validate(FitOptions{.tol_rel_nll = 0.0}), std::invalid_argument);
  EXPECT_THROW(validate(FitOptions{.sigma_floor = -1.0}), std::invalid_argument);
  EXPECT_THROW(validate(FitOptions{.max_iterations = -1}), std::invalid_argument);
  EXPECT_EQ(iteration_budget(FitOptions{.optimizer = Optimizer::BCD}), 500);
  EXPECT_EQ(iteration_budget(FitOptions{.optimizer = Optimizer::LBFGS}), 2000);
  EXPECT_EQ(parse_optimizer("bcd"), Optimizer::BCD);
  EXPECT_THROW(parse_optimizer("sgd"), std::invalid_argument);
  const ObservedMatrix d = gaussian_data(10, 4, 1);
  EXPECT_THROW(fit_xpca(d, {.rank = 5}), std::invalid_argument);
}

TEST(BcdTest, SweepNeverIncreasesNll) {
  const ObservedMatrix d = testing::mixed_with_missing(30, 20, 3, 0.2, 21);
  const XpcaProblem prob = prepare_problem(d);
  const FitOptions opts{.rank = 3, .optimizer = Optimizer::BCD, .init = InitMethod::Random};
  Factors f = initial_factors(d, {.rank = 3, .seed = 4, .init = InitMethod::Random});
  const double start = nll(f, prob.bounds);
  const SweepStats first = bcd_sweep(f, prob.bounds, opts);
  EXPECT_LT(first.nll_after, start);
  double prev = first.nll_after;
  for (int s = 0; s < 15; ++s) {
    const SweepStats st = bcd_sweep(f, prob.bounds, opts);
    EXPECT_LE(st.nll_after, prev);
    EXPECT_EQ(st.nll_before, prev);
    EXPECT_GE(f.sigma, opts.sigma_floor);
    prev = st.nll_after;
  }
  EXPECT_DOUBLE_EQ(prev, nll(f, prob.bounds));
}

TEST(BcdTest, ConvergesOnContinuousData) {
  const ObservedMatrix d = gaussian_data(40, 15, 5);
  FitOptions opts{.rank = 2, .optimizer = Optimizer::BCD};
  const FactorModel m = fit_xpca(d, opts);
  EXPECT_TRUE(m.info.converged);
  EXPECT_EQ(m.info.optimizer, "bcd");
  const XpcaProblem prob = prepare_problem(d);
  const Factors f{m.U, m.V, m.sigma};
  EXPECT_TRUE(is_stationary(stationarity(f, prob.bounds, opts.sigma_floor), m.info.objective));
  for (std::size_t t = 1; t < m.info.trace.size(); ++t)
    EXPECT_LE(m.info.trace[t], m.info.trace[t - 1]);
}

TEST(LbfgsFitTest, ConvergesAndImprovesOnStart) {
  const ObservedMatrix d = gaussian_data(40, 15, 6);
  const FitOptions opts{.rank = 2};
  const FactorModel m = fit_xpca(d, opts);
  EXPECT_TRUE(m.info.converged);
  EXPECT_EQ(m.info.optimizer, "lbfgs");
  ASSERT_FALSE(m.info.trace.empty());
  EXPECT_LT(m.info.objective, m.info.trace.front());
  const XpcaProblem prob = prepare_problem(d);
  EXPECT_NEAR(nll(Factors{m.U, m.V, m.sigma}, prob.bounds), m.info.objective,
              1e-8 * (1 + m.info.objective));
}

TEST(FitTest, BothOptimizersReachTheSameOptimumOnContinuousData) {
  const ObservedMatrix d = gaussian_data(30, 12, 7);
  const FactorModel a = fit_xpca(d, {.rank = 1, .optimizer = Optimizer::BCD});
  const FactorModel b = fit_xpca(d, {.rank = 1, .optimizer = Optimizer::LBFGS});
  EXPECT_NEAR(a.info.objective, b.info.objective, 1e-4 * a.info.objective);
  EXPECT_NEAR(a.sigma, b.sigma, 1e-3);
}

TEST(FitTest, ResultIsOrthogonalized) {
  const ObservedMatrix d = gaussian_data(30, 12, 8);
  const FactorModel m = fit_xpca(d, {.rank = 2});
  EXPECT_LE((m.V.transpose() * m.V - Eigen::MatrixXd::Identity(2, 2)).norm(), 1e-10);
  EXPECT_EQ(m.method, Method::XPCA);
  EXPECT_EQ(m.edfs.size(), 12u);
  EXPECT_GT(m.epsilon, 0.0);
}

TEST(FitTest, IterationCapIsFlagged) {
  const ObservedMatrix d = testing::mixed_with_missing(30, 20, 3, 0.2, 22);
  const FactorModel m = fit_xpca(d, {.rank = 3, .optimizer = Optimizer::BCD, .max_iterations = 2});
  EXPECT_FALSE(m.info.converged);
  EXPECT_EQ(m.info.iterations, 2);
  EXPECT_EQ(m.info.trace.size(), 3u);
}

TEST(FitTest, SameSeedSameTrajectory) {
  const ObservedMatrix d = testing::mixed_with_missing(25, 15, 2, 0.2, 23);
  const FitOptions opts{.rank = 2, .optimizer = Optimizer::BCD, .max_iterations = 20, .seed = 9,
                        .init = InitMethod::Random};
  EXPECT_EQ(fit_xpca(d, opts).info.trace, fit_xpca(d, opts).info.trace);
}

TEST(FitTest, SerialAndParallelAgreeBitwise) {
  const ObservedMatrix d = testing::mixed_with_missing(40, 20, 2, 0.2, 24);
  for (Optimizer o : {Optimizer::BCD, Optimizer::LBFGS}) {
    const FitOptions base{.rank = 2, .optimizer = o, .max_iterations = 30};
    FitOptions s = base, p = base;
    s.exec = Exec::Serial;
    p.exec = Exec::Parallel;
    const FactorModel a = fit_xpca(d, s), b = fit_xpca(d, p);
    EXPECT_EQ(a.info.trace, b.info.trace) << to_string(o);
    EXPECT_TRUE(testing::bitwise_equal(a.U, b.U)) << to_string(o);
    EXPECT_EQ(a.sigma, b.sigma);
  }
}

TEST(FitTest, SaturatedModelPushesSigmaToFloor) {
  const ObservedMatrix d = gaussian_data(6, 4, 10);
  const FitOptions opts{.rank = 4, .optimizer = Optimizer::BCD, .max_iterations = 300};
  const FactorModel m = fit_xpca(d, opts);
  EXPECT_LT(m.sigma, 0.05);
  EXPECT_GE(m.sigma, opts.sigma_floor);
}

TEST(FitTest, FitModelDispatches) {
  const ObservedMatrix d = gaussian_data(20, 6, 11);
  EXPECT_EQ(fit_model(d, Method::PCA, {.rank = 2}).method, Method::PCA);
  EXPECT_EQ(fit_model(d, Method::COCA, {.rank = 2}, TieRule::Maximum).ties, TieRule::Maximum);
  EXPECT_EQ(fit_model(d, Method::XPCA, {.rank = 2}).method, Method::XPCA);
}

}  // namespace
}  // namespace xpca

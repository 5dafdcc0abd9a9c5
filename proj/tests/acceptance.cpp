// Acceptance checks. Prints one PASS/FAIL line per criterion.
//
//   xpca_acceptance            run everything
//   xpca_acceptance 3 5        run criteria 3 and 5
//
// Exit status is 0 when every selected criterion passes.

#include "xpca/gaussian_fit.hpp"
#include "xpca/impute.hpp"
#include "xpca/marginals.hpp"
#include "xpca/sim.hpp"
#include "xpca/xpca_fit.hpp"

#include "finite_diff.hpp"
#include "fixtures.hpp"

#include <Eigen/SVD>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

namespace {

using namespace xpca;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome derivatives() {
  const auto t0 = std::chrono::steady_clock::now();
  testing::DerivativeErrors worst;
  for (std::uint64_t inst = 0; inst < 10; ++inst) {
    const ObservedMatrix d = testing::mixed_with_missing(20, 15, 3, 0.3, 500 + inst);
    const XpcaProblem prob = prepare_problem(d);
    const Factors f = testing::random_factors(20, 15, 3, 600 + inst);
    const testing::DerivativeErrors e = testing::check_derivatives(f, prob.bounds);
    worst.dU = std::max(worst.dU, e.dU);
    worst.dV = std::max(worst.dV, e.dV);
    worst.dsigma = std::max(worst.dsigma, e.dsigma);
    worst.hessian = std::max(worst.hessian, e.hessian);
  }
  const double secs = elapsed_since(t0);
  const bool ok = worst.dU <= 1e-5 && worst.dV <= 1e-5 && worst.dsigma <= 1e-5 &&
                  worst.hessian <= 1e-4 && secs < 5.0;
  return {ok, fmt("max rel err dU %.2e dV %.2e dsigma %.2e row Hessian %.2e; %.2f s", worst.dU,
                  worst.dV, worst.dsigma, worst.hessian, secs)};
}

Outcome svd_oracle() {
  double worst = 0.0;
  for (int k : {1, 3, 5})
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Rng rng(derive_seed(2000 + k, seed));
      Eigen::MatrixXd X(30, 20);
      for (Eigen::Index t = 0; t < X.size(); ++t) X.data()[t] = rng.normal();
      const ObservedMatrix data(X);
      const FactorModel m = fit_pca(data, {.rank = k});
      const Eigen::MatrixXd Z = standardize(data).z.values;
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const Eigen::MatrixXd best = svd.matrixU().leftCols(k) *
                                   svd.singularValues().head(k).asDiagonal() *
                                   svd.matrixV().leftCols(k).transpose();
      worst = std::max(worst, (m.theta() - best).norm() / best.norm());
    }
  return {worst <= 1e-8, fmt("max Frobenius rel err %.2e over 15 fits", worst)};
}

Outcome edf_exactness() {
  const Edf e({1.0, 2.0, 3.0, 4.0}, {70, 301, 430, 199});
  const double expected[] = {0.070, 0.371, 0.801, 1.000};
  bool exact = true;
  for (std::size_t t = 0; t < 4; ++t) exact = exact && e.cum_max()[t] == expected[t];
  const ZInterval iv = z_bounds(e, 3.0, 0.5);
  const double mid_err = std::abs(e.cum_mid()[0] - 0.035465);
  const double lo_err = std::abs(iv.lower - (-0.329206));
  const double hi_err = std::abs(iv.upper - 0.845199);
  const bool ok = exact && mid_err <= 5e-7 && lo_err <= 1e-5 && hi_err <= 1e-5;
  return {ok, fmt("cum_max exact=%s cum_mid[0]=%.7f z(3)=(%.6f, %.6f)", exact ? "yes" : "no",
                  e.cum_mid()[0], iv.lower, iv.upper)};
}

// Shared by the normalization and bounds checks.
const FactorModel& mixed_xpca_model() {
  static const FactorModel model = [] {
    const SimulatedData s = generate(100, 100, 3, 0.25, MarginalSpec::mixed(100), 4001);
    return fit_xpca(s.data, {.rank = 3});
  }();
  return model;
}

Outcome normalization() {
  const FactorModel& m = mixed_xpca_model();
  double worst_sum = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const EntryDistribution d = entry_distribution(m, i, j);
      worst_sum = std::max(worst_sum,
                           std::abs(std::accumulate(d.probs.begin(), d.probs.end(), 0.0) - 1.0));
    }
  double worst_freq = 0.0;
  for (const Edf& edf : m.edfs) {
    const auto ivs = column_intervals(edf, m.epsilon);
    const EntryDistribution d = value_distribution(edf, ivs, 0.0, 1.0);
    for (std::size_t t = 0; t < edf.size(); ++t)
      worst_freq = std::max(worst_freq, std::abs(d.probs[t] - static_cast<double>(edf.counts()[t]) /
                                                                   edf.observed()));
  }
  // "exactly" up to the round trip through Phi and its inverse
  const bool ok = worst_sum <= 1e-10 && worst_freq <= 1e-14;
  return {ok, fmt("max |sum - 1| %.2e over 10000 cells; max |p - freq| at (0, 1) %.2e", worst_sum,
                  worst_freq)};
}

std::map<std::pair<int, Method>, std::vector<double>> holdout_underlying(const ScenarioResult& r) {
  std::map<std::pair<int, Method>, std::vector<double>> out;
  for (const ScenarioRow& row : r.rows)
    if (row.metric == "underlying" && row.split == "holdout")
      out[{row.size, row.method}].push_back(row.mse);
  return out;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

Outcome mixed_trend() {
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioConfig cfg;
  cfg.sizes = {100};
  cfg.spec = "mixed";
  cfg.reps = 8;
  cfg.rank = 3;
  cfg.sigma2 = 0.25;
  cfg.holdout_frac = 0.5;
  const ScenarioResult r = run_scenario(cfg);
  const double secs = elapsed_since(t0);
  if (!r.failures.empty()) return {false, "fit failure: " + r.failures.front().message};
  auto mse = holdout_underlying(r);
  const auto& x = mse[{100, Method::XPCA}];
  const auto& p = mse[{100, Method::PCA}];
  const auto& c = mse[{100, Method::COCA}];
  int wins = 0;
  for (std::size_t t = 0; t < x.size(); ++t) wins += x[t] < p[t];
  const bool ok = mean_of(x) < mean_of(c) && mean_of(x) < mean_of(p) && wins >= 7 && secs < 600;
  return {ok, fmt("mean holdout MSE xpca %.4f pca %.4f coca %.4f; xpca<pca in %d/8 reps; %.1f s",
                  mean_of(x), mean_of(p), mean_of(c), wins, secs)};
}

Outcome continuous_equivalence() {
  ScenarioConfig cfg;
  cfg.sizes = {100, 400};
  cfg.spec = "gaussian";
  cfg.reps = 3;
  cfg.methods = {Method::COCA, Method::XPCA};
  const ScenarioResult r = run_scenario(cfg);
  if (!r.failures.empty()) return {false, "fit failure: " + r.failures.front().message};
  auto mse = holdout_underlying(r);
  const double gap100 = std::abs(mean_of(mse[{100, Method::XPCA}]) - mean_of(mse[{100, Method::COCA}]));
  const double gap400 = std::abs(mean_of(mse[{400, Method::XPCA}]) - mean_of(mse[{400, Method::COCA}]));
  const bool ok = gap400 < gap100 && gap400 < 0.02;
  return {ok, fmt("|xpca - coca| holdout MSE: %.4f at 100, %.4f at 400 (3 reps each)", gap100,
                  gap400)};
}

Outcome tie_rule() {
  double mid = 0.0, max = 0.0, base = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const TieExperimentResult t = tie_method_experiment(seed);
    mid += t.mse_mid / 5;
    max += t.mse_max / 5;
    base += t.mse_column_mean / 5;
  }
  const double ratio = mid / max;
  return {mid < max && ratio < 0.9,
          fmt("holdout MSE midpoint %.4f maximum %.4f ratio %.4f (column mean %.4f)", mid, max,
              ratio, base)};
}

Outcome bcd_monotonicity() {
  const auto t0 = std::chrono::steady_clock::now();
  const ObservedMatrix data = generate(50, 40, 3, 0.25, MarginalSpec::mixed(40), 8001).data;
  const XpcaProblem prob = prepare_problem(data);
  int monotone = 0, stationary = 0;
  double worst_ratio = 0.0;
  for (std::uint64_t start = 1; start <= 20; ++start) {
    const FitOptions opts{.rank = 3, .optimizer = Optimizer::BCD, .max_iterations = 500,
                          .seed = start, .init = InitMethod::Random};
    const FactorModel m = fit_xpca(prob, initial_factors(data, opts), opts);
    bool mono = true;
    for (std::size_t t = 1; t < m.info.trace.size(); ++t) mono = mono && m.info.trace[t] <= m.info.trace[t - 1];
    monotone += mono;
    const double s = stationarity(Factors{m.U, m.V, m.sigma}, prob.bounds, opts.sigma_floor);
    stationary += is_stationary(s, m.info.objective);
    worst_ratio = std::max(worst_ratio, s / (1e-5 * (1 + std::abs(m.info.objective))));
  }
  const bool ok = monotone == 20 && stationary >= 18;
  return {ok, fmt("nonincreasing NLL %d/20 starts; stationary %d/20 (worst gradient %.3g x "
                  "threshold); %.1f s",
                  monotone, stationary, worst_ratio, elapsed_since(t0))};
}

Outcome interpolation_fidelity() {
  const SimulatedData s = generate(200, 30, 3, 0.25, MarginalSpec::mixed(30), 9001);
  const FactorModel m = fit_xpca(s.data, {.rank = 3});
  const auto curves = build_mean_curves(m, 30);
  std::vector<Entry> cells;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) cells.push_back({i, j});
  const auto exact = impute_mean(m, cells);
  const auto approx = impute_mean_interp(m, curves, cells);
  const Eigen::VectorXd sd = column_stddevs(s.data);
  double worst = 0.0;
  for (std::size_t t = 0; t < cells.size(); ++t)
    worst = std::max(worst, std::abs(exact[t] - approx[t]) / sd(cells[t].col));
  return {worst < 0.01, fmt("max standardized |interp - exact| %.2e over 6000 cells", worst)};
}

Outcome bounded_imputation() {
  std::size_t checked = 0, outside = 0, binary_checked = 0, binary_outside = 0;
  auto check = [&](const FactorModel& m, Estimator e) {
    std::vector<Entry> cells;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) cells.push_back({i, j});
    const auto est = impute(m, cells, e);
    for (std::size_t t = 0; t < cells.size(); ++t) {
      const Edf& edf = m.edfs[cells[t].col];
      ++checked;
      outside += est[t] < edf.min() || est[t] > edf.max();
      const bool binary = edf.size() == 2 && edf.min() == 0.0 && edf.max() == 1.0;
      if (binary && m.method == Method::XPCA && e == Estimator::Mean) {
        ++binary_checked;
        binary_outside += est[t] < 0.0 || est[t] > 1.0;
      }
    }
  };
  const FactorModel& mixed = mixed_xpca_model();
  check(mixed, Estimator::Median);
  check(mixed, Estimator::Mean);
  const ObservedMatrix holes = testing::mixed_with_missing(80, 20, 2, 0.2, 10001);
  const ObservedMatrix heavy = generate(80, 20, 2, 0.25, MarginalSpec::exponential(20), 10002).data;
  for (const ObservedMatrix* d : {&holes, &heavy}) {
    const FactorModel x = fit_xpca(*d, {.rank = 2});
    check(x, Estimator::Median);
    check(x, Estimator::Mean);
    check(fit_model(*d, Method::COCA, {.rank = 2}), Estimator::Median);
    check(fit_model(*d, Method::COCA, {.rank = 2}, TieRule::Maximum), Estimator::Median);
  }
  const bool ok = outside == 0 && binary_outside == 0 && binary_checked > 0;
  return {ok, fmt("%zu/%zu estimates outside the column range; %zu/%zu binary means outside [0, 1]",
                  outside, checked, binary_outside, binary_checked)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"derivative correctness", derivatives},
      {"SVD oracle", svd_oracle},
      {"EDF exactness", edf_exactness},
      {"distribution normalization", normalization},
      {"mixed simulation trend", mixed_trend},
      {"continuous equivalence", continuous_equivalence},
      {"midpoint versus maximum ties", tie_rule},
      {"BCD monotonicity and convergence", bcd_monotonicity},
      {"interpolated mean fidelity", interpolation_fidelity},
      {"bounded imputation", bounded_imputation},
  };
  std::set<int> selected;
  for (int a = 1; a < argc; ++a) {
    const int n = std::atoi(argv[a]);
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::cerr << "usage: xpca_acceptance [criterion numbers 1.." << criteria.size() << "]\n";
      return 2;
    }
    selected.insert(n);
  }
  bool all = true;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const int n = static_cast<int>(c) + 1;
    if (!selected.empty() && !selected.count(n)) continue;
    Outcome o;
    try {
      o = criteria[c].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << "AC" << n << ' ' << (o.pass ? "PASS" : "FAIL") << "  " << criteria[c].first
              << ": " << o.detail << std::endl;
  }
  return all ? 0 : 1;
}

#include "xpca/impute.hpp"

#include "xpca/gaussian_fit.hpp"
#include "xpca/normal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace xpca {

namespace {

void require_xpca(const FactorModel& model, const char* what) {
  if (model.method != Method::XPCA)
    throw std::invalid_argument(std::string(what) + ": model is not an XPCA model");
  if (static_cast<Eigen::Index>(model.edfs.size()) != model.cols())
    throw std::invalid_argument(std::string(what) + ": model is missing column EDFs");
}

void check_scope(const FactorModel& model, std::span<const Entry> scope) {
  for (const Entry& e : scope)
    if (e.row < 0 || e.row >= model.rows() || e.col < 0 || e.col >= model.cols())
      throw std::out_of_range("imputation scope entry outside the model");
}

std::vector<std::vector<ZInterval>> all_intervals(const FactorModel& model) {
  std::vector<std::vector<ZInterval>> out;
  out.reserve(model.edfs.size());
  for (const Edf& e : model.edfs) out.push_back(column_intervals(e, model.epsilon));
  return out;
}

}  // namespace

std::vector<ZInterval> column_intervals(const Edf& edf, double eps) {
  std::vector<ZInterval> out;
  out.reserve(edf.size());
  for (double xi : edf.distinct()) out.push_back(z_bounds(edf, xi, eps));
  return out;
}

EntryDistribution value_distribution(const Edf& edf, std::span<const ZInterval> intervals,
                                     double theta, double sigma) {
  EntryDistribution d;
  d.support = edf.distinct();
  d.probs.resize(intervals.size());
  for (std::size_t t = 0; t < intervals.size(); ++t)
    d.probs[t] = std::exp(log_interval_prob(intervals[t], theta, sigma));
  return d;
}

double expected_value(const Edf& edf, std::span<const ZInterval> intervals, double theta,
                      double sigma) {
  const auto& support = edf.distinct();
  double mean = 0.0;
  for (std::size_t t = 0; t < intervals.size(); ++t)
    mean += support[t] * std::exp(log_interval_prob(intervals[t], theta, sigma));
  return std::clamp(mean, edf.min(), edf.max());
}

EntryDistribution entry_distribution(const FactorModel& model, Eigen::Index i, Eigen::Index j) {
  require_xpca(model, "entry_distribution");
  const Entry e{i, j};
  check_scope(model, std::span<const Entry>(&e, 1));
  const Edf& edf = model.edfs[static_cast<std::size_t>(j)];
  return value_distribution(edf, column_intervals(edf, model.epsilon), model.theta(i, j),
                            model.sigma);
}

std::vector<double> impute_median(const FactorModel& model, std::span<const Entry> scope) {
  require_xpca(model, "impute_median");
  check_scope(model, scope);
  std::vector<double> out;
  out.reserve(scope.size());
  for (const Entry& e : scope)
    out.push_back(edf_inverse(model.edfs[static_cast<std::size_t>(e.col)], EdfVariant::MaxRank,
                              std_normal_cdf(model.theta(e.row, e.col))));
  return out;
}

std::vector<double> impute_mean(const FactorModel& model, std::span<const Entry> scope,
                                Exec exec) {
  require_xpca(model, "impute_mean");
  check_scope(model, scope);
  const auto intervals = all_intervals(model);
  std::vector<double> out(scope.size());
  for_each_index(exec, static_cast<std::ptrdiff_t>(scope.size()), [&](std::ptrdiff_t t) {
    const Entry& e = scope[static_cast<std::size_t>(t)];
    const auto j = static_cast<std::size_t>(e.col);
    out[static_cast<std::size_t>(t)] =
        expected_value(model.edfs[j], intervals[j], model.theta(e.row, e.col), model.sigma);
  });
  return out;
}

double MeanCurve::operator()(double theta) const {
  if (theta <= grid.front()) return values.front();
  if (theta >= grid.back()) return values.back();
  const auto hi = std::upper_bound(grid.begin(), grid.end(), theta);
  const auto h = static_cast<std::size_t>(hi - grid.begin());
  const double t = (theta - grid[h - 1]) / (grid[h] - grid[h - 1]);
  return values[h - 1] + t * (values[h] - values[h - 1]);
}

int default_interpolation_points(Eigen::Index rows) {
  return std::max(30, static_cast<int>(rows / 10));
}

MeanCurve build_mean_curve(const FactorModel& model, Eigen::Index j, int q) {
  require_xpca(model, "build_mean_curve");
  if (q < 3) throw std::invalid_argument("build_mean_curve: q must be at least 3");
  if (j < 0 || j >= model.cols()) throw std::out_of_range("build_mean_curve: column out of range");
  const Edf& edf = model.edfs[static_cast<std::size_t>(j)];
  const auto intervals = column_intervals(edf, model.epsilon);
  const double sigma = model.sigma;

  MeanCurve c;
  for (int l = 2; l <= q - 1; ++l)
    c.interior.push_back(std_normal_quantile(static_cast<double>(l - 1) / (q - 1)));

  // Past these anchors the mean is within range * Phi(-8) of its limit.
  const double reach = 8.0 * sigma;
  const double lo_anchor = std::min(intervals.front().upper, c.interior.front()) - reach;
  const double hi_anchor = std::max(intervals.back().lower, c.interior.back()) + reach;

  std::vector<double> coarse{lo_anchor};
  coarse.insert(coarse.end(), c.interior.begin(), c.interior.end());
  coarse.push_back(hi_anchor);
  const double step = 0.25 * sigma;
  for (std::size_t t = 0; t + 1 < coarse.size(); ++t) {
    const double a = coarse[t], b = coarse[t + 1];
    const int pieces =
        std::clamp(static_cast<int>(std::ceil((b - a) / step)), 1, MeanCurve::kMaxSplit);
    c.grid.push_back(a);
    for (int p = 1; p < pieces; ++p) c.grid.push_back(a + (b - a) * p / pieces);
  }
  c.grid.push_back(hi_anchor);

  c.values.reserve(c.grid.size());
  c.values.push_back(edf.min());
  for (std::size_t t = 1; t + 1 < c.grid.size(); ++t)
    c.values.push_back(expected_value(edf, intervals, c.grid[t], sigma));
  c.values.push_back(edf.max());
  for (std::size_t t = 1; t < c.values.size(); ++t)
    c.values[t] = std::max(c.values[t], c.values[t - 1]);
  return c;
}

std::vector<MeanCurve> build_mean_curves(const FactorModel& model, int q, Exec exec) {
  require_xpca(model, "build_mean_curves");
  std::vector<MeanCurve> out(static_cast<std::size_t>(model.cols()));
  for_each_index(exec, model.cols(), [&](std::ptrdiff_t j) {
    out[static_cast<std::size_t>(j)] = build_mean_curve(model, j, q);
  });
  return out;
}

std::vector<double> impute_mean_interp(const FactorModel& model,
                                       std::span<const MeanCurve> curves,
                                       std::span<const Entry> scope) {
  require_xpca(model, "impute_mean_interp");
  if (static_cast<Eigen::Index>(curves.size()) != model.cols())
    throw std::invalid_argument("impute_mean_interp: one curve per column required");
  check_scope(model, scope);
  std::vector<double> out;
  out.reserve(scope.size());
  for (const Entry& e : scope)
    out.push_back(curves[static_cast<std::size_t>(e.col)](model.theta(e.row, e.col)));
  return out;
}

std::vector<double> impute_mean_interp(const FactorModel& model, std::span<const Entry> scope,
                                       Exec exec) {
  const auto curves = build_mean_curves(model, default_interpolation_points(model.rows()), exec);
  return impute_mean_interp(model, curves, scope);
}

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::Auto: return "auto";
    case Estimator::Median: return "median";
    case Estimator::Mean: return "mean";
    case Estimator::MeanInterp: return "mean-interp";
  }
  return "auto";
}

Estimator parse_estimator(const std::string& s) {
  if (s == "auto") return Estimator::Auto;
  if (s == "median") return Estimator::Median;
  if (s == "mean") return Estimator::Mean;
  if (s == "mean-interp") return Estimator::MeanInterp;
  throw std::invalid_argument("unknown estimator '" + s + "' (expected auto, median, mean or mean-interp)");
}

bool supports(Method method, Estimator e) {
  switch (method) {
    case Method::PCA: return e == Estimator::Auto;
    case Method::COCA: return e == Estimator::Auto || e == Estimator::Median;
    case Method::XPCA: return true;
  }
  return false;
}

std::vector<double> impute(const FactorModel& model, std::span<const Entry> scope, Estimator e,
                           Exec exec) {
  if (!supports(model.method, e))
    throw std::invalid_argument("estimator '" + to_string(e) + "' is not defined for " +
                                to_string(model.method) + " models");
  switch (model.method) {
    case Method::PCA: return pca_impute(model, scope);
    case Method::COCA: return coca_impute(model, scope);
    case Method::XPCA: break;
  }
  switch (e) {
    case Estimator::Median: return impute_median(model, scope);
    case Estimator::Mean: return impute_mean(model, scope, exec);
    default: return impute_mean_interp(model, scope, exec);
  }
}

}  // namespace xpca

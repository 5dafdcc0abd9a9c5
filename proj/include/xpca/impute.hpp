#pragma once

#include "xpca/exec.hpp"
#include "xpca/matrix.hpp"
#include "xpca/model.hpp"

#include <span>
#include <string>
#include <vector>

namespace xpca {

// P(x_ij = xi) for every support value xi of column j.
struct EntryDistribution {
  std::vector<double> support;
  std::vector<double> probs;
};

// Latent interval of each support value of a column, in support order.
std::vector<ZInterval> column_intervals(const Edf& edf, double eps);

EntryDistribution value_distribution(const Edf& edf, std::span<const ZInterval> intervals,
                                     double theta, double sigma);
double expected_value(const Edf& edf, std::span<const ZInterval> intervals, double theta,
                      double sigma);

EntryDistribution entry_distribution(const FactorModel& model, Eigen::Index i, Eigen::Index j);

// F^{-1}(Phi(theta)) with the max-rank EDF.
std::vector<double> impute_median(const FactorModel& model, std::span<const Entry> scope);
std::vector<double> impute_mean(const FactorModel& model, std::span<const Entry> scope,
                                Exec exec = Exec::Parallel);

/// Piecewise-linear approximation of the conditional mean as a function of
/// theta for one column.
///
/// `interior` is the grid Phi^{-1}((l-1)/(q-1)) for l = 2..q-1. The infinite
/// endpoints become anchors at finite theta, eight latent standard deviations
/// past the outermost interval bound, carrying the column minimum and
/// maximum; the curve is constant beyond them. Any gap between consecutive
/// knots wider than sigma/4 is split evenly (into at most kMaxSplit pieces),
/// so the curve resolves the mean's bends near the edges of the data.
struct MeanCurve {
  static constexpr int kMaxSplit = 512;

  std::vector<double> interior;
  std::vector<double> grid;    // all knots, increasing, anchors included
  std::vector<double> values;  // mean at each knot, nondecreasing

  double operator()(double theta) const;
};

int default_interpolation_points(Eigen::Index rows);

MeanCurve build_mean_curve(const FactorModel& model, Eigen::Index j, int q);
std::vector<MeanCurve> build_mean_curves(const FactorModel& model, int q,
                                         Exec exec = Exec::Parallel);

std::vector<double> impute_mean_interp(const FactorModel& model,
                                       std::span<const MeanCurve> curves,
                                       std::span<const Entry> scope);
// Builds the curves with default_interpolation_points(model.rows()).
std::vector<double> impute_mean_interp(const FactorModel& model, std::span<const Entry> scope,
                                       Exec exec = Exec::Parallel);

// Point estimator. Auto picks the method's standard one: the linear
// back-transform for PCA, the median for COCA, the interpolated mean for XPCA.
enum class Estimator { Auto, Median, Mean, MeanInterp };

std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& s);
bool supports(Method method, Estimator e);

std::vector<double> impute(const FactorModel& model, std::span<const Entry> scope,
                           Estimator e = Estimator::Auto, Exec exec = Exec::Parallel);

}  // namespace xpca

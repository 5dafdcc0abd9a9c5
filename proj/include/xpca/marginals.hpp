#pragma once

#include "xpca/normal.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace xpca {

// MaxRank: rank of the largest tied value over m_j; reaches 1 at the maximum.
// MidRank: midpoint rank of tied values over m_j + 1; stays inside (0, 1).
enum class EdfVariant { MaxRank, MidRank };

/// Empirical distribution of one column's observed values.
class Edf {
 public:
  Edf() = default;
  // From distinct sorted support and matching multiplicities.
  Edf(std::vector<double> distinct, std::vector<std::size_t> counts);

  const std::vector<double>& distinct() const { return distinct_; }
  const std::vector<std::size_t>& counts() const { return counts_; }
  std::size_t observed() const { return m_obs_; }
  std::size_t size() const { return distinct_.size(); }
  const std::vector<double>& cum_max() const { return cum_max_; }
  const std::vector<double>& cum_mid() const { return cum_mid_; }
  const std::vector<double>& cumulative(EdfVariant v) const {
    return v == EdfVariant::MaxRank ? cum_max_ : cum_mid_;
  }
  double min() const { return distinct_.front(); }
  double max() const { return distinct_.back(); }

  // Index of `x` in the support, or -1.
  std::ptrdiff_t index_of(double x) const;
  double min_gap() const;

 private:
  std::vector<double> distinct_;
  std::vector<std::size_t> counts_;
  std::size_t m_obs_ = 0;
  std::vector<double> cum_max_;
  std::vector<double> cum_mid_;
};

Edf fit_edf(std::span<const double> column);

double edf_eval(const Edf& edf, EdfVariant variant, double x);

// Largest support value whose cumulative probability is <= y, or the minimum
// when y does not exceed the first cumulative value.
double edf_inverse(const Edf& edf, EdfVariant variant, double y);

// Step-function inverse over an arbitrary increasing cumulative table.
double step_inverse(std::span<const double> support, std::span<const double> cumulative, double y);

double global_epsilon(std::span<const Edf> edfs);

ZInterval z_bounds(const Edf& edf, double x, double eps);

}  // namespace xpca

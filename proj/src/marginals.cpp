#include "xpca/marginals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace xpca {

Edf::Edf(std::vector<double> distinct, std::vector<std::size_t> counts)
    : distinct_(std::move(distinct)), counts_(std::move(counts)) {
  if (distinct_.size() != counts_.size())
    throw std::invalid_argument("Edf: support and counts differ in length");
  if (distinct_.size() < 2) throw std::invalid_argument("Edf: need at least two distinct values");
  for (std::size_t t = 0; t < distinct_.size(); ++t) {
    if (!std::isfinite(distinct_[t])) throw std::invalid_argument("Edf: non-finite support value");
    if (t > 0 && !(distinct_[t] > distinct_[t - 1]))
      throw std::invalid_argument("Edf: support must be strictly increasing");
    if (counts_[t] == 0) throw std::invalid_argument("Edf: zero multiplicity");
    m_obs_ += counts_[t];
  }
  const double m = static_cast<double>(m_obs_);
  cum_max_.resize(distinct_.size());
  cum_mid_.resize(distinct_.size());
  std::size_t before = 0;
  for (std::size_t t = 0; t < distinct_.size(); ++t) {
    const double c = static_cast<double>(counts_[t]);
    // Midpoint of ranks before+1 .. before+c.
    cum_mid_[t] = (static_cast<double>(before) + (c + 1.0) / 2.0) / (m + 1.0);
    before += counts_[t];
    cum_max_[t] = static_cast<double>(before) / m;
  }
}

std::ptrdiff_t Edf::index_of(double x) const {
  auto it = std::lower_bound(distinct_.begin(), distinct_.end(), x);
  if (it == distinct_.end() || *it != x) return -1;
  return it - distinct_.begin();
}

double Edf::min_gap() const {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t t = 1; t < distinct_.size(); ++t)
    gap = std::min(gap, distinct_[t] - distinct_[t - 1]);
  return gap;
}

Edf fit_edf(std::span<const double> column) {
  std::map<double, std::size_t> tally;
  for (double x : column) {
    if (!std::isfinite(x)) throw std::invalid_argument("fit_edf: non-finite value");
    ++tally[x];
  }
  if (tally.size() < 2) throw std::invalid_argument("fit_edf: fewer than two distinct values");
  std::vector<double> distinct;
  std::vector<std::size_t> counts;
  distinct.reserve(tally.size());
  counts.reserve(tally.size());
  for (const auto& [x, c] : tally) {
    distinct.push_back(x);
    counts.push_back(c);
  }
  return Edf(std::move(distinct), std::move(counts));
}

double edf_eval(const Edf& edf, EdfVariant variant, double x) {
  const auto& support = edf.distinct();
  auto it = std::upper_bound(support.begin(), support.end(), x);
  if (it == support.begin()) return 0.0;
  return edf.cumulative(variant)[static_cast<std::size_t>(it - support.begin() - 1)];
}

double step_inverse(std::span<const double> support, std::span<const double> cumulative,
                    double y) {
  if (y <= cumulative.front()) return support.front();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), y);
  return support[static_cast<std::size_t>(it - cumulative.begin() - 1)];
}

double edf_inverse(const Edf& edf, EdfVariant variant, double y) {
  if (!(y >= 0.0 && y <= 1.0)) throw std::domain_error("edf_inverse: y outside [0, 1]");
  return step_inverse(edf.distinct(), edf.cumulative(variant), y);
}

double global_epsilon(std::span<const Edf> edfs) {
  if (edfs.empty()) throw std::invalid_argument("global_epsilon: no columns");
  double gap = std::numeric_limits<double>::infinity();
  for (const Edf& e : edfs) gap = std::min(gap, e.min_gap());
  return 0.5 * gap;
}

ZInterval z_bounds(const Edf& edf, double x, double eps) {
  if (edf.index_of(x) < 0) throw std::invalid_argument("z_bounds: value not in column support");
  if (!(eps > 0.0)) throw std::invalid_argument("z_bounds: epsilon must be positive");
  if (!(eps < edf.min_gap()))
    throw std::invalid_argument("z_bounds: epsilon must be below the column's smallest gap");
  const double lo = edf_eval(edf, EdfVariant::MaxRank, x - eps);
  const double hi = edf_eval(edf, EdfVariant::MaxRank, x);
  return {std_normal_quantile(lo), std_normal_quantile(hi)};
}

}  // namespace xpca

#pragma once

#include "xpca/random.hpp"
#include "xpca/sim.hpp"

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

namespace xpca::testing {

// Mixed binary/continuous data with a random fraction of cells hidden.
// Redraws the mask until every column keeps two distinct observed values.
inline ObservedMatrix mixed_with_missing(Eigen::Index m, Eigen::Index n, int rank,
                                         double missing, std::uint64_t seed) {
  const SimulatedData sim = generate(m, n, rank, 0.25, MarginalSpec::mixed(n), seed);
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(derive_seed(seed, 100 + attempt));
    std::vector<Entry> hidden;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < m; ++i)
        if (rng.uniform() < missing) hidden.push_back({i, j});
    try {
      return sim.data.without(hidden);
    } catch (const std::invalid_argument&) {
    }
  }
}

inline bool bitwise_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index t = 0; t < a.size(); ++t)
    if (std::memcmp(a.data() + t, b.data() + t, sizeof(double)) != 0) return false;
  return true;
}

}  // namespace xpca::testing

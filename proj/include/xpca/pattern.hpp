#pragma once

#include "xpca/matrix.hpp"

#include <cstddef>
#include <vector>

namespace xpca {

// Observed-entry index in both row-major (CSR) and column-major (CSC) order.
// Per-entry payloads are stored in CSR order; csr_slot maps a CSC position
// back to its CSR slot.
struct Pattern {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<Eigen::Index> col_of;
  std::vector<std::size_t> col_ptr;
  std::vector<Eigen::Index> row_of;
  std::vector<std::size_t> csr_slot;

  static Pattern from_mask(const Mask& mask);
  std::size_t nnz() const { return col_of.size(); }
};

}  // namespace xpca

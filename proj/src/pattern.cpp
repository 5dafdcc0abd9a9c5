#include "xpca/pattern.hpp"

namespace xpca {

Pattern Pattern::from_mask(const Mask& mask) {
  Pattern p;
  p.rows = mask.rows();
  p.cols = mask.cols();
  p.row_ptr.assign(static_cast<std::size_t>(p.rows) + 1, 0);
  for (Eigen::Index i = 0; i < p.rows; ++i) {
    for (Eigen::Index j = 0; j < p.cols; ++j)
      if (mask(i, j)) p.col_of.push_back(j);
    p.row_ptr[static_cast<std::size_t>(i) + 1] = p.col_of.size();
  }

  p.col_ptr.assign(static_cast<std::size_t>(p.cols) + 1, 0);
  for (Eigen::Index c : p.col_of) ++p.col_ptr[static_cast<std::size_t>(c) + 1];
  for (std::size_t j = 0; j < static_cast<std::size_t>(p.cols); ++j)
    p.col_ptr[j + 1] += p.col_ptr[j];
  p.row_of.resize(p.nnz());
  p.csr_slot.resize(p.nnz());
  std::vector<std::size_t> next(p.col_ptr.begin(), p.col_ptr.end() - 1);
  for (Eigen::Index i = 0; i < p.rows; ++i) {
    for (std::size_t s = p.row_ptr[i]; s < p.row_ptr[i + 1]; ++s) {
      const std::size_t pos = next[static_cast<std::size_t>(p.col_of[s])]++;
      p.row_of[pos] = i;
      p.csr_slot[pos] = s;
    }
  }
  return p;
}

}  // namespace xpca

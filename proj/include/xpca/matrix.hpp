#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace xpca {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct Entry {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  friend bool operator==(const Entry&, const Entry&) = default;
};

/// Dense m x n data with an explicit observed-entry mask.
///
/// Unobserved cells hold NaN. Construction validates that every observed cell
/// is finite and that every column has at least two distinct observed values;
/// the copula transforms and the epsilon rule are undefined otherwise.
class ObservedMatrix {
 public:
  ObservedMatrix(Eigen::MatrixXd values, Mask mask,
                 std::vector<std::string> column_names = {});

  // Complete data, every cell observed.
  explicit ObservedMatrix(Eigen::MatrixXd values,
                          std::vector<std::string> column_names = {});

  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }
  bool observed(Eigen::Index i, Eigen::Index j) const { return mask_(i, j); }
  double value(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }
  const Eigen::MatrixXd& values() const { return values_; }
  const Mask& mask() const { return mask_; }
  const std::vector<std::string>& column_names() const { return names_; }

  std::size_t observed_count() const;
  bool complete() const;
  std::vector<double> column_values(Eigen::Index j) const;

  // Observed entries in column-major order.
  std::vector<Entry> observed_entries() const;
  std::vector<Entry> missing_entries() const;

  // Same values, with `hidden` entries additionally marked unobserved.
  ObservedMatrix without(std::span<const Entry> hidden) const;

 private:
  Eigen::MatrixXd values_;
  Mask mask_;
  std::vector<std::string> names_;
};

ObservedMatrix load_csv(const std::string& path, const std::string& na_token = "NA");
ObservedMatrix parse_csv(const std::string& text, const std::string& na_token = "NA");

// Writes a header row and one line per matrix row. Cells flagged false in
// `mask` are written as na_token; numbers use the shortest round-trip form.
void write_csv(const std::string& path, const Eigen::MatrixXd& values, const Mask& mask,
               const std::vector<std::string>& column_names,
               const std::string& na_token = "NA");
void write_csv(const std::string& path, const ObservedMatrix& data,
               const std::string& na_token = "NA");
std::string format_double(double x);

/// Mean over `scope` of ((estimate - reference) / scale_j)^2.
double standardized_mse(const Eigen::MatrixXd& estimate, const ObservedMatrix& reference,
                        std::span<const Entry> scope, const Eigen::VectorXd& column_scales);
double standardized_mse(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& reference,
                        std::span<const Entry> scope, const Eigen::VectorXd& column_scales);

// Population standard deviation of each column's observed entries.
Eigen::VectorXd column_stddevs(const ObservedMatrix& data);

struct FoldAssignment {
  std::vector<Entry> entries;  // observed entries, column-major
  std::vector<int> fold;       // fold index per entry
  int folds = 0;
  std::uint64_t seed = 0;

  std::vector<Entry> members(int k) const;
  std::vector<std::size_t> sizes() const;
};

FoldAssignment split_folds(const ObservedMatrix& data, int folds, std::uint64_t seed);

}  // namespace xpca

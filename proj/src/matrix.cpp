#include "xpca/matrix.hpp"

#include "xpca/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace xpca {

namespace {

void validate(const Eigen::MatrixXd& values, const Mask& mask,
              const std::vector<std::string>& names) {
  if (values.rows() == 0 || values.cols() == 0)
    throw std::invalid_argument("data matrix must have at least one row and one column");
  if (mask.rows() != values.rows() || mask.cols() != values.cols())
    throw std::invalid_argument("mask shape does not match values");
  if (!names.empty() && static_cast<Eigen::Index>(names.size()) != values.cols())
    throw std::invalid_argument("column name count does not match column count");
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    bool any = false;
    bool two_distinct = false;
    double first = 0.0;
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      if (!mask(i, j)) continue;
      const double x = values(i, j);
      if (!std::isfinite(x))
        throw std::invalid_argument("observed cell (" + std::to_string(i) + ", " +
                                    std::to_string(j) + ") is not finite");
      if (!any) {
        any = true;
        first = x;
      } else if (x != first) {
        two_distinct = true;
      }
    }
    if (!any)
      throw std::invalid_argument("column " + std::to_string(j) + " has no observed entries");
    if (!two_distinct)
      throw std::invalid_argument("column " + std::to_string(j) +
                                  " has fewer than two distinct observed values");
  }
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

ObservedMatrix::ObservedMatrix(Eigen::MatrixXd values, Mask mask,
                               std::vector<std::string> column_names)
    : values_(std::move(values)), mask_(std::move(mask)), names_(std::move(column_names)) {
  validate(values_, mask_, names_);
  for (Eigen::Index j = 0; j < values_.cols(); ++j)
    for (Eigen::Index i = 0; i < values_.rows(); ++i)
      if (!mask_(i, j)) values_(i, j) = std::numeric_limits<double>::quiet_NaN();
}

ObservedMatrix::ObservedMatrix(Eigen::MatrixXd values, std::vector<std::string> column_names)
    : ObservedMatrix(values, Mask::Constant(values.rows(), values.cols(), true),
                     std::move(column_names)) {}

std::size_t ObservedMatrix::observed_count() const {
  return static_cast<std::size_t>(mask_.count());
}

bool ObservedMatrix::complete() const { return mask_.all(); }

std::vector<double> ObservedMatrix::column_values(Eigen::Index j) const {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < rows(); ++i)
    if (mask_(i, j)) out.push_back(values_(i, j));
  return out;
}

std::vector<Entry> ObservedMatrix::observed_entries() const {
  std::vector<Entry> out;
  out.reserve(observed_count());
  for (Eigen::Index j = 0; j < cols(); ++j)
    for (Eigen::Index i = 0; i < rows(); ++i)
      if (mask_(i, j)) out.push_back({i, j});
  return out;
}

std::vector<Entry> ObservedMatrix::missing_entries() const {
  std::vector<Entry> out;
  for (Eigen::Index j = 0; j < cols(); ++j)
    for (Eigen::Index i = 0; i < rows(); ++i)
      if (!mask_(i, j)) out.push_back({i, j});
  return out;
}

ObservedMatrix ObservedMatrix::without(std::span<const Entry> hidden) const {
  Mask m = mask_;
  for (const Entry& e : hidden) {
    if (e.row < 0 || e.row >= rows() || e.col < 0 || e.col >= cols())
      throw std::out_of_range("entry outside matrix");
    m(e.row, e.col) = false;
  }
  return ObservedMatrix(values_, std::move(m), names_);
}

ObservedMatrix parse_csv(const std::string& text, const std::string& na_token) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> names = split_line(line);
  for (auto& s : names) s = trim(s);
  const std::size_t n = names.size();

  std::vector<double> cells;
  std::vector<char> seen;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::string> parts = split_line(line);
    if (parts.size() != n)
      throw std::invalid_argument("csv: ragged row " + std::to_string(rows + 1) + " has " +
                                  std::to_string(parts.size()) + " fields, expected " +
                                  std::to_string(n));
    for (std::size_t j = 0; j < n; ++j) {
      const std::string cell = trim(parts[j]);
      if (cell.empty() || cell == na_token) {
        cells.push_back(0.0);
        seen.push_back(0);
        continue;
      }
      double x = 0.0;
      const char* first = cell.data();
      const char* last = first + cell.size();
      if (*first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, x);
      if (ec != std::errc() || ptr != last || !std::isfinite(x))
        throw std::invalid_argument("csv: non-numeric cell '" + cell + "' at row " +
                                    std::to_string(rows + 1) + ", column " + names[j]);
      cells.push_back(x);
      seen.push_back(1);
    }
    ++rows;
  }
  if (rows == 0) throw std::invalid_argument("csv: no data rows");

  Eigen::MatrixXd values(rows, n);
  Mask mask(rows, n);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      values(i, j) = cells[i * n + j];
      mask(i, j) = seen[i * n + j] != 0;
    }
  for (std::size_t j = 0; j < n; ++j)
    if (!mask.col(j).any())
      throw std::invalid_argument("csv: column " + names[j] + " is entirely missing");
  return ObservedMatrix(std::move(values), std::move(mask), std::move(names));
}

ObservedMatrix load_csv(const std::string& path, const std::string& na_token) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), na_token);
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

void write_csv(const std::string& path, const Eigen::MatrixXd& values, const Mask& mask,
               const std::vector<std::string>& column_names, const std::string& na_token) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    if (j) out << ',';
    if (static_cast<Eigen::Index>(column_names.size()) == values.cols())
      out << column_names[j];
    else
      out << 'V' << (j + 1);
  }
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j) out << ',';
      out << (mask(i, j) ? format_double(values(i, j)) : na_token);
    }
    out << '\n';
  }
}

void write_csv(const std::string& path, const ObservedMatrix& data, const std::string& na_token) {
  write_csv(path, data.values(), data.mask(), data.column_names(), na_token);
}

double standardized_mse(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& reference,
                        std::span<const Entry> scope, const Eigen::VectorXd& column_scales) {
  if (scope.empty()) throw std::invalid_argument("standardized_mse: empty scope");
  double total = 0.0;
  for (const Entry& e : scope) {
    const double scale = column_scales(e.col);
    if (!(scale > 0.0)) throw std::invalid_argument("standardized_mse: nonpositive column scale");
    const double r = (estimate(e.row, e.col) - reference(e.row, e.col)) / scale;
    total += r * r;
  }
  return total / static_cast<double>(scope.size());
}

double standardized_mse(const Eigen::MatrixXd& estimate, const ObservedMatrix& reference,
                        std::span<const Entry> scope, const Eigen::VectorXd& column_scales) {
  for (const Entry& e : scope)
    if (!reference.observed(e.row, e.col))
      throw std::invalid_argument("standardized_mse: scope entry is not observed in reference");
  return standardized_mse(estimate, reference.values(), scope, column_scales);
}

Eigen::VectorXd column_stddevs(const ObservedMatrix& data) {
  Eigen::VectorXd out(data.cols());
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const auto v = data.column_values(j);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    out(j) = std::sqrt(ss / static_cast<double>(v.size()));
  }
  return out;
}

std::vector<Entry> FoldAssignment::members(int k) const {
  std::vector<Entry> out;
  for (std::size_t t = 0; t < entries.size(); ++t)
    if (fold[t] == k) out.push_back(entries[t]);
  return out;
}

std::vector<std::size_t> FoldAssignment::sizes() const {
  std::vector<std::size_t> out(static_cast<std::size_t>(folds), 0);
  for (int f : fold) ++out[static_cast<std::size_t>(f)];
  return out;
}

FoldAssignment split_folds(const ObservedMatrix& data, int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("split_folds: need at least 2 folds");
  FoldAssignment out;
  out.entries = data.observed_entries();
  if (static_cast<std::size_t>(folds) > out.entries.size())
    throw std::invalid_argument("split_folds: more folds than observed entries");
  out.folds = folds;
  out.seed = seed;

  std::vector<std::size_t> order(out.entries.size());
  for (std::size_t t = 0; t < order.size(); ++t) order[t] = t;
  Rng rng(seed);
  rng.shuffle(order);
  out.fold.assign(out.entries.size(), 0);
  for (std::size_t pos = 0; pos < order.size(); ++pos)
    out.fold[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(folds));
  return out;
}

}  // namespace xpca

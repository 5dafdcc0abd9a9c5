#include "xpca/objective.hpp"

#include "xpca/normal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace xpca {

BoundsMatrix::BoundsMatrix(Pattern pattern, std::vector<ZInterval> intervals)
    : pattern_(std::move(pattern)), intervals_(std::move(intervals)) {
  if (intervals_.size() != pattern_.nnz())
    throw std::invalid_argument("BoundsMatrix: interval count does not match pattern");
  for (const ZInterval& iv : intervals_)
    if (!(iv.lower < iv.upper)) throw std::invalid_argument("BoundsMatrix: degenerate interval");
}

namespace {

BoundsMatrix from_entries(Eigen::Index rows, Eigen::Index cols, std::span<const Entry> entries,
                          std::span<const ZInterval> intervals) {
  if (entries.size() != intervals.size())
    throw std::invalid_argument("BoundsMatrix: entries and intervals differ in length");
  Mask mask = Mask::Constant(rows, cols, false);
  Eigen::MatrixXi where = Eigen::MatrixXi::Constant(rows, cols, -1);
  for (std::size_t t = 0; t < entries.size(); ++t) {
    const Entry& e = entries[t];
    if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols)
      throw std::out_of_range("BoundsMatrix: entry outside matrix");
    if (mask(e.row, e.col)) throw std::invalid_argument("BoundsMatrix: duplicate entry");
    mask(e.row, e.col) = true;
    where(e.row, e.col) = static_cast<int>(t);
  }
  Pattern p = Pattern::from_mask(mask);
  std::vector<ZInterval> ordered(p.nnz());
  for (Eigen::Index i = 0; i < rows; ++i)
    for (std::size_t s = p.row_ptr[i]; s < p.row_ptr[i + 1]; ++s)
      ordered[s] = intervals[static_cast<std::size_t>(where(i, p.col_of[s]))];
  return BoundsMatrix(std::move(p), std::move(ordered));
}

}  // namespace

BoundsMatrix::BoundsMatrix(Eigen::Index rows, Eigen::Index cols, std::span<const Entry> entries,
                           std::span<const ZInterval> intervals)
    : BoundsMatrix(from_entries(rows, cols, entries, intervals)) {}

BoundsMatrix build_bounds(const ObservedMatrix& data, std::span<const Edf> edfs, double eps) {
  if (static_cast<Eigen::Index>(edfs.size()) != data.cols())
    throw std::invalid_argument("build_bounds: one EDF per column required");
  Pattern p = Pattern::from_mask(data.mask());
  std::vector<ZInterval> intervals(p.nnz());
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const Edf& edf = edfs[static_cast<std::size_t>(j)];
    // Intervals depend only on the support index; compute each once.
    std::vector<ZInterval> per_value(edf.size());
    for (std::size_t t = 0; t < edf.size(); ++t)
      per_value[t] = z_bounds(edf, edf.distinct()[t], eps);
    for (std::size_t c = p.col_ptr[j]; c < p.col_ptr[j + 1]; ++c) {
      const double x = data.value(p.row_of[c], j);
      const std::ptrdiff_t t = edf.index_of(x);
      if (t < 0) throw std::invalid_argument("build_bounds: value missing from column EDF");
      intervals[p.csr_slot[c]] = per_value[static_cast<std::size_t>(t)];
    }
  }
  return BoundsMatrix(std::move(p), std::move(intervals));
}

EntryTerms entry_terms(ZInterval iv, double theta, double sigma) {
  EntryTerms t;
  t.log_p = log_interval_prob(iv, theta, sigma);
  if (!std::isfinite(t.log_p)) {
    std::ostringstream msg;
    msg << "interval probability underflow: (" << iv.lower << ", " << iv.upper
        << "], theta=" << theta << ", sigma=" << sigma;
    throw UnderflowError({-1, -1}, msg.str());
  }
  if (std::isfinite(iv.upper)) {
    t.delta_r = iv.upper - theta;
    t.w_r = std::exp(std_normal_log_pdf(t.delta_r / sigma) - t.log_p);
  }
  if (std::isfinite(iv.lower)) {
    t.delta_l = iv.lower - theta;
    t.w_l = std::exp(std_normal_log_pdf(t.delta_l / sigma) - t.log_p);
  }
  return t;
}

namespace {

double dtheta_of(const EntryTerms& t, double sigma) { return (t.w_r - t.w_l) / sigma; }

double d2theta_of(const EntryTerms& t, double sigma) {
  const double a = (t.w_r - t.w_l) / sigma;
  return a * a + (t.delta_r * t.w_r - t.delta_l * t.w_l) / (sigma * sigma * sigma);
}

double dsigma_of(const EntryTerms& t, double sigma) {
  return (t.delta_r * t.w_r - t.delta_l * t.w_l) / (sigma * sigma);
}

double d2sigma_of(const EntryTerms& t, double sigma) {
  const double g = t.delta_r * t.w_r - t.delta_l * t.w_l;
  const double g3 = t.delta_r * t.delta_r * t.delta_r * t.w_r -
                    t.delta_l * t.delta_l * t.delta_l * t.w_l;
  const double s2 = sigma * sigma;
  const double s3 = s2 * sigma;
  return g * g / (s2 * s2) + g3 / (s3 * s2) - 2.0 * g / s3;
}

EntryTerms terms_at(ZInterval iv, double theta, double sigma, Eigen::Index i, Eigen::Index j) {
  try {
    return entry_terms(iv, theta, sigma);
  } catch (const UnderflowError& e) {
    throw UnderflowError({i, j}, e.what());
  }
}

double log_p_at(ZInterval iv, double theta, double sigma, Eigen::Index i, Eigen::Index j) {
  const double lp = log_interval_prob(iv, theta, sigma);
  if (!std::isfinite(lp)) {
    std::ostringstream msg;
    msg << "interval probability underflow at entry (" << i << ", " << j << ")";
    throw UnderflowError({i, j}, msg.str());
  }
  return lp;
}

// Pairs the row-major transposes so theta_ij is a contiguous dot product.
struct Transposed {
  Eigen::MatrixXd Ut;
  Eigen::MatrixXd Vt;
  explicit Transposed(const Factors& f) : Ut(f.U.transpose()), Vt(f.V.transpose()) {}
  double theta(Eigen::Index i, Eigen::Index j) const { return Ut.col(i).dot(Vt.col(j)); }
};

double ordered_sum(const std::vector<double>& parts) {
  double s = 0.0;
  for (double x : parts) s += x;
  return s;
}

void check_factors(const Factors& f, const BoundsMatrix& b) {
  if (f.U.rows() != b.rows() || f.V.rows() != b.cols() || f.U.cols() != f.V.cols())
    throw std::invalid_argument("factor shapes do not match the bounds matrix");
  if (!(f.sigma > 0.0)) throw std::domain_error("sigma must be positive");
}

}  // namespace

double entry_nll(ZInterval iv, double theta, double sigma) {
  return -entry_terms(iv, theta, sigma).log_p;
}

double entry_dtheta(ZInterval iv, double theta, double sigma) {
  return dtheta_of(entry_terms(iv, theta, sigma), sigma);
}

double entry_d2theta(ZInterval iv, double theta, double sigma) {
  return d2theta_of(entry_terms(iv, theta, sigma), sigma);
}

double nll(const Eigen::MatrixXd& theta, double sigma, const BoundsMatrix& bounds, Exec exec) {
  if (theta.rows() != bounds.rows() || theta.cols() != bounds.cols())
    throw std::invalid_argument("nll: theta shape does not match bounds");
  if (!(sigma > 0.0)) throw std::domain_error("nll: sigma must be positive");
  const Pattern& p = bounds.pattern();
  std::vector<double> rows(static_cast<std::size_t>(p.rows), 0.0);
  for_each_index(exec, p.rows, [&](std::ptrdiff_t i) {
    double acc = 0.0;
    for (std::size_t s = p.row_ptr[i]; s < p.row_ptr[i + 1]; ++s)
      acc -= log_p_at(bounds.interval(s), theta(i, p.col_of[s]), sigma, i, p.col_of[s]);
    rows[static_cast<std::size_t>(i)] = acc;
  });
  return ordered_sum(rows);
}

double nll(const Factors& f, const BoundsMatrix& bounds, Exec exec) {
  check_factors(f, bounds);
  const Transposed tr(f);
  const Pattern& p = bounds.pattern();
  std::vector<double> rows(static_cast<std::size_t>(p.rows), 0.0);
  for_each_index(exec, p.rows, [&](std::ptrdiff_t i) {
    double acc = 0.0;
    for (std::size_t s = p.row_ptr[i]; s < p.row_ptr[i + 1]; ++s) {
      const Eigen::Index j = p.col_of[s];
      acc -= log_p_at(bounds.interval(s), tr.theta(i, j), f.sigma, i, j);
    }
    rows[static_cast<std::size_t>(i)] = acc;
  });
  return ordered_sum(rows);
}

double row_nll(const Factors& f, const BoundsMatrix& bounds, Eigen::Index i,
               const Eigen::Ref<const Eigen::VectorXd>& u) {
  const Pattern& p = bounds.pattern();
  double acc = 0.0;
  for (std::size_t s = p.row_ptr[i]; s < p.row_ptr[i + 1]; ++s) {
    const Eigen::Index j = p.col_of[s];
    acc -= log_p_at(bounds.interval(s), f.V.row(j).dot(u), f.sigma, i, j);
  }
  return acc;
}

double col_nll(const Factors& f, const BoundsMatrix& bounds, Eigen::Index j,
               const Eigen::Ref<const Eigen::VectorXd>& v) {
  const Pattern& p = bounds.pattern();
  double acc = 0.0;
  for (std::size_t c = p.col_ptr[j]; c < p.col_ptr[j + 1]; ++c) {
    const Eigen::Index i = p.row_of[c];
    acc -= log_p_at(bounds.interval(p.csr_slot[c]), f.U.row(i).dot(v), f.sigma, i, j);
  }
  return acc;
}

DerivativeWorkspace evaluate_derivatives(const Factors& f, const BoundsMatrix& bounds, Exec exec) {
  check_factors(f, bounds);
  const Transposed tr(f);
  const Pattern& p = bounds.pattern();
  DerivativeWorkspace ws;
  ws.first.assign(p.nnz(), 0.0);
  ws.second.assign(p.nnz(), 0.0);
  const auto m = static_cast<std::size_t>(p.rows);
  std::vector<double> part_nll(m, 0.0), part_ds(m, 0.0), part_d2s(m, 0.0);
  for_each_index(exec, p.rows, [&](std::ptrdiff_t i) {
    double a = 0.0, b = 0.0, c = 0.0;
    for (std::size_t s = p.row_ptr[i]; s < p.row_ptr[i + 1]; ++s) {
      const Eigen::Index j = p.col_of[s];
      const EntryTerms t = terms_at(bounds.interval(s), tr.theta(i, j), f.sigma, i, j);
      ws.first[s] = dtheta_of(t, f.sigma);
      ws.second[s] = d2theta_of(t, f.sigma);
      a -= t.log_p;
      b += dsigma_of(t, f.sigma);
      c += d2sigma_of(t, f.sigma);
    }
    part_nll[static_cast<std::size_t>(i)] = a;
    part_ds[static_cast<std::size_t>(i)] = b;
    part_d2s[static_cast<std::size_t>(i)] = c;
  });
  ws.nll = ordered_sum(part_nll);
  ws.dsigma = ordered_sum(part_ds);
  ws.d2sigma = ordered_sum(part_d2s);
  return ws;
}

double grad_sigma(const Factors& f, const BoundsMatrix& bounds, Exec exec) {
  return evaluate_derivatives(f, bounds, exec).dsigma;
}

double hess_sigma(const Factors& f, const BoundsMatrix& bounds, Exec exec) {
  return evaluate_derivatives(f, bounds, exec).d2sigma;
}

FactorGradient grad_factors(const Factors& f, const BoundsMatrix& bounds, Exec exec) {
  const DerivativeWorkspace ws = evaluate_derivatives(f, bounds, exec);
  const Pattern& p = bounds.pattern();
  const Eigen::Index k = f.U.cols();
  FactorGradient g;
  g.dU = Eigen::MatrixXd::Zero(p.rows, k);
  g.dV = Eigen::MatrixXd::Zero(p.cols, k);
  g.dsigma = ws.dsigma;
  g.nll = ws.nll;
  for_each_index(exec, p.rows, [&](std::ptrdiff_t i) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(k);
    for (std::size_t s = p.row_ptr[i]; s < p.row_ptr[i + 1]; ++s)
      acc.noalias() += ws.first[s] * f.V.row(p.col_of[s]).transpose();
    g.dU.row(i) = acc.transpose();
  });
  for_each_index(exec, p.cols, [&](std::ptrdiff_t j) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(k);
    for (std::size_t c = p.col_ptr[j]; c < p.col_ptr[j + 1]; ++c)
      acc.noalias() += ws.first[p.csr_slot[c]] * f.U.row(p.row_of[c]).transpose();
    g.dV.row(j) = acc.transpose();
  });
  return g;
}

Eigen::MatrixXd row_hessian(const Factors& f, const BoundsMatrix& bounds, Side side,
                            Eigen::Index index) {
  check_factors(f, bounds);
  const Pattern& p = bounds.pattern();
  const Eigen::Index k = f.U.cols();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(k, k);
  if (side == Side::U) {
    const auto u = f.U.row(index);
    for (std::size_t s = p.row_ptr[index]; s < p.row_ptr[index + 1]; ++s) {
      const Eigen::Index j = p.col_of[s];
      const auto v = f.V.row(j);
      const double d2 = d2theta_of(terms_at(bounds.interval(s), u.dot(v), f.sigma, index, j),
                                   f.sigma);
      H.noalias() += d2 * v.transpose() * v;
    }
  } else {
    const auto v = f.V.row(index);
    for (std::size_t c = p.col_ptr[index]; c < p.col_ptr[index + 1]; ++c) {
      const Eigen::Index i = p.row_of[c];
      const auto u = f.U.row(i);
      const double d2 = d2theta_of(
          terms_at(bounds.interval(p.csr_slot[c]), u.dot(v), f.sigma, i, index), f.sigma);
      H.noalias() += d2 * u.transpose() * u;
    }
  }
  return H;
}

}  // namespace xpca

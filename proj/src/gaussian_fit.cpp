#include "xpca/gaussian_fit.hpp"

#include "xpca/normal.hpp"
#include "xpca/pattern.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace xpca {

StandardizedData standardize(const ObservedMatrix& data) {
  StandardizedData out;
  out.z.values = Eigen::MatrixXd::Zero(data.rows(), data.cols());
  out.z.mask = data.mask();
  out.moments.resize(static_cast<std::size_t>(data.cols()));
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const auto col = data.column_values(j);
    double mean = 0.0;
    for (double x : col) mean += x;
    mean /= static_cast<double>(col.size());
    double ss = 0.0;
    for (double x : col) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(col.size()));
    if (!(sd > 0.0))
      throw std::invalid_argument("standardize: column " + std::to_string(j) +
                                  " has zero standard deviation");
    out.moments[static_cast<std::size_t>(j)] = {mean, sd};
    for (Eigen::Index i = 0; i < data.rows(); ++i)
      if (data.observed(i, j)) out.z.values(i, j) = (data.value(i, j) - mean) / sd;
  }
  return out;
}

std::vector<double> coca_cumulative(const Edf& edf, TieRule ties) {
  if (ties == TieRule::Midpoint) return edf.cum_mid();
  std::vector<double> out(edf.size());
  const double denom = static_cast<double>(edf.observed()) + 1.0;
  std::size_t before = 0;
  for (std::size_t t = 0; t < edf.size(); ++t) {
    before += edf.counts()[t];
    out[t] = static_cast<double>(before) / denom;
  }
  return out;
}

CopulaData coca_transform(const ObservedMatrix& data, TieRule ties) {
  CopulaData out;
  out.z.values = Eigen::MatrixXd::Zero(data.rows(), data.cols());
  out.z.mask = data.mask();
  out.edfs.reserve(static_cast<std::size_t>(data.cols()));
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const auto col = data.column_values(j);
    Edf edf = fit_edf(col);
    const auto cum = coca_cumulative(edf, ties);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      if (!data.observed(i, j)) continue;
      const auto t = static_cast<std::size_t>(edf.index_of(data.value(i, j)));
      out.z.values(i, j) = std_normal_quantile(cum[t]);
    }
    out.edfs.push_back(std::move(edf));
  }
  return out;
}

double masked_sse(const ZMatrix& z, const Eigen::MatrixXd& U, const Eigen::MatrixXd& V) {
  double sse = 0.0;
  for (Eigen::Index i = 0; i < z.values.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < z.values.cols(); ++j) {
      if (!z.mask(i, j)) continue;
      const double r = z.values(i, j) - U.row(i).dot(V.row(j));
      row += r * r;
    }
    sse += row;
  }
  return sse;
}

namespace {

// Solves each target row against the fixed factor over its observed entries.
void solve_rows(const ZMatrix& z, const Pattern& p, bool by_row, const Eigen::MatrixXd& fixed,
                Eigen::MatrixXd& target, double ridge, Exec exec) {
  const Eigen::Index k = fixed.cols();
  const Eigen::Index count = by_row ? p.rows : p.cols;
  for_each_index(exec, count, [&](std::ptrdiff_t t) {
    Eigen::MatrixXd G = ridge * Eigen::MatrixXd::Identity(k, k);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    const auto& ptr = by_row ? p.row_ptr : p.col_ptr;
    for (std::size_t s = ptr[t]; s < ptr[t + 1]; ++s) {
      const Eigen::Index other = by_row ? p.col_of[s] : p.row_of[s];
      const double zv = by_row ? z.values(t, other) : z.values(other, t);
      const auto f = fixed.row(other);
      G.noalias() += f.transpose() * f;
      b.noalias() += zv * f.transpose();
    }
    target.row(t) = G.ldlt().solve(b).transpose();
  });
}

double sweep_with(const ZMatrix& z, const Pattern& p, Eigen::MatrixXd& U, Eigen::MatrixXd& V,
                  double ridge, Exec exec) {
  solve_rows(z, p, true, V, U, ridge, exec);
  solve_rows(z, p, false, U, V, ridge, exec);
  return masked_sse(z, U, V);
}

}  // namespace

double als_sweep(const ZMatrix& z, Eigen::MatrixXd& U, Eigen::MatrixXd& V, double ridge,
                 Exec exec) {
  return sweep_with(z, Pattern::from_mask(z.mask), U, V, ridge, exec);
}

void orthogonalize(Eigen::MatrixXd& U, Eigen::MatrixXd& V) {
  const Eigen::Index k = U.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qu(U);
  Eigen::HouseholderQR<Eigen::MatrixXd> qv(V);
  const Eigen::MatrixXd Qu = qu.householderQ() * Eigen::MatrixXd::Identity(U.rows(), k);
  const Eigen::MatrixXd Qv = qv.householderQ() * Eigen::MatrixXd::Identity(V.rows(), k);
  const Eigen::MatrixXd Ru = qu.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rv = qv.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Ru * Rv.transpose(),
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  U = Qu * svd.matrixU() * svd.singularValues().asDiagonal();
  V = Qv * svd.matrixV();
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::Index arg = 0;
    V.col(c).cwiseAbs().maxCoeff(&arg);
    if (V(arg, c) < 0.0) {
      V.col(c) *= -1.0;
      U.col(c) *= -1.0;
    }
  }
}

FactorModel orthogonalize(FactorModel model) {
  orthogonalize(model.U, model.V);
  return model;
}

FactorModel fit_gaussian(const ZMatrix& z, const GaussianFitOptions& opts) {
  const Eigen::Index m = z.values.rows();
  const Eigen::Index n = z.values.cols();
  if (opts.rank < 1 || opts.rank > std::min(m, n))
    throw std::invalid_argument("fit_gaussian: rank must be in [1, min(m, n)]");
  const Eigen::Index k = opts.rank;

  Eigen::MatrixXd filled = z.mask.select(z.values, 0.0);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(filled, Eigen::ComputeThinU | Eigen::ComputeThinV);

  FactorModel model;
  model.U = svd.matrixU().leftCols(k) * svd.singularValues().head(k).asDiagonal();
  model.V = svd.matrixV().leftCols(k);

  const bool complete = z.mask.all();
  double sse = masked_sse(z, model.U, model.V);
  model.info.optimizer = "svd";
  if (!complete || opts.force_iterative) {
    model.info.optimizer = "als";
    model.info.converged = false;
    const Pattern p = Pattern::from_mask(z.mask);
    for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
      const double next = sweep_with(z, p, model.U, model.V, opts.ridge, opts.exec);
      model.info.iterations = sweep;
      model.info.trace.push_back(next);
      const double change = std::abs(sse - next);
      sse = next;
      if (sse == 0.0 || change <= opts.tol_rel_sse * sse) {
        model.info.converged = true;
        break;
      }
    }
  } else {
    model.info.converged = true;
  }

  orthogonalize(model.U, model.V);
  model.info.objective = sse;
  model.sigma = std::sqrt(sse / static_cast<double>(z.mask.count()));
  return model;
}

FactorModel fit_pca(const ObservedMatrix& data, const GaussianFitOptions& opts) {
  StandardizedData s = standardize(data);
  FactorModel model = fit_gaussian(s.z, opts);
  model.method = Method::PCA;
  model.moments = std::move(s.moments);
  return model;
}

FactorModel fit_coca(const ObservedMatrix& data, const GaussianFitOptions& opts, TieRule ties) {
  CopulaData c = coca_transform(data, ties);
  FactorModel model = fit_gaussian(c.z, opts);
  model.method = Method::COCA;
  model.edfs = std::move(c.edfs);
  model.ties = ties;
  return model;
}

namespace {

void check_scope(const FactorModel& model, std::span<const Entry> scope) {
  for (const Entry& e : scope)
    if (e.row < 0 || e.row >= model.rows() || e.col < 0 || e.col >= model.cols())
      throw std::out_of_range("imputation scope entry outside the model");
}

}  // namespace

std::vector<double> pca_impute(const FactorModel& model, std::span<const Entry> scope) {
  if (model.method != Method::PCA) throw std::invalid_argument("pca_impute: not a PCA model");
  check_scope(model, scope);
  std::vector<double> out;
  out.reserve(scope.size());
  for (const Entry& e : scope) {
    const ColumnMoments& mom = model.moments[static_cast<std::size_t>(e.col)];
    out.push_back(model.theta(e.row, e.col) * mom.stddev + mom.mean);
  }
  return out;
}

std::vector<double> coca_impute(const FactorModel& model, std::span<const Entry> scope) {
  if (model.method != Method::COCA) throw std::invalid_argument("coca_impute: not a COCA model");
  check_scope(model, scope);
  std::vector<std::vector<double>> cums;
  cums.reserve(model.edfs.size());
  for (const Edf& e : model.edfs) cums.push_back(coca_cumulative(e, model.ties));
  std::vector<double> out;
  out.reserve(scope.size());
  for (const Entry& e : scope) {
    const auto j = static_cast<std::size_t>(e.col);
    out.push_back(step_inverse(model.edfs[j].distinct(), cums[j],
                               std_normal_cdf(model.theta(e.row, e.col))));
  }
  return out;
}

}  // namespace xpca

#include "xpca/xpca_fit.hpp"

#include "xpca/gaussian_fit.hpp"
#include "xpca/lbfgs.hpp"
#include "xpca/random.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace xpca {

std::string to_string(Optimizer o) { return o == Optimizer::LBFGS ? "lbfgs" : "bcd"; }

Optimizer parse_optimizer(const std::string& s) {
  if (s == "lbfgs") return Optimizer::LBFGS;
  if (s == "bcd") return Optimizer::BCD;
  throw std::invalid_argument("unknown optimizer '" + s + "' (expected lbfgs or bcd)");
}

void validate(const FitOptions& opts) {
  if (opts.rank < 1) throw std::invalid_argument("rank must be at least 1");
  if (!(opts.tol_rel_nll > 0.0)) throw std::invalid_argument("tol_rel_nll must be positive");
  if (!(opts.sigma_floor > 0.0)) throw std::invalid_argument("sigma_floor must be positive");
  if (opts.max_iterations < 0) throw std::invalid_argument("max_iterations must be nonnegative");
  if (opts.lbfgs_memory < 1) throw std::invalid_argument("lbfgs_memory must be at least 1");
}

int iteration_budget(const FitOptions& opts) {
  if (opts.max_iterations > 0) return opts.max_iterations;
  return opts.optimizer == Optimizer::BCD ? 500 : 2000;
}

XpcaProblem prepare_problem(const ObservedMatrix& data) {
  std::vector<Edf> edfs;
  edfs.reserve(static_cast<std::size_t>(data.cols()));
  for (Eigen::Index j = 0; j < data.cols(); ++j) edfs.push_back(fit_edf(data.column_values(j)));
  const double eps = global_epsilon(edfs);
  BoundsMatrix bounds = build_bounds(data, edfs, eps);
  return XpcaProblem{std::move(edfs), eps, std::move(bounds)};
}

Factors initial_factors(const ObservedMatrix& data, const FitOptions& opts) {
  validate(opts);
  if (opts.rank > std::min(data.rows(), data.cols()))
    throw std::invalid_argument("rank must not exceed min(rows, cols)");
  Factors f;
  if (opts.init == InitMethod::Random) {
    Rng rng(opts.seed);
    const double scale = std::pow(static_cast<double>(opts.rank), -0.25);
    f.U.resize(data.rows(), opts.rank);
    f.V.resize(data.cols(), opts.rank);
    for (Eigen::Index c = 0; c < opts.rank; ++c)
      for (Eigen::Index i = 0; i < data.rows(); ++i) f.U(i, c) = scale * rng.normal();
    for (Eigen::Index c = 0; c < opts.rank; ++c)
      for (Eigen::Index j = 0; j < data.cols(); ++j) f.V(j, c) = scale * rng.normal();
    f.sigma = 1.0;
    return f;
  }
  GaussianFitOptions g;
  g.rank = opts.rank;
  g.exec = opts.exec;
  FactorModel coca = fit_coca(data, g, TieRule::Midpoint);
  f.U = std::move(coca.U);
  f.V = std::move(coca.V);
  f.sigma = std::clamp(coca.sigma, opts.sigma_floor, 1.0);
  return f;
}

double stationarity(const FactorGradient& g, double sigma, double sigma_floor) {
  double m = 0.0;
  if (g.dU.size() > 0) m = std::max(m, g.dU.cwiseAbs().maxCoeff());
  if (g.dV.size() > 0) m = std::max(m, g.dV.cwiseAbs().maxCoeff());
  const bool pinned = sigma <= sigma_floor * (1.0 + 1e-9) && g.dsigma > 0.0;
  if (!pinned) m = std::max(m, std::abs(sigma * g.dsigma));
  return m;
}

double stationarity(const Factors& f, const BoundsMatrix& bounds, double sigma_floor, Exec exec) {
  return stationarity(grad_factors(f, bounds, exec), f.sigma, sigma_floor);
}

bool is_stationary(double measure, double nll) { return measure < 1e-5 * (1.0 + std::abs(nll)); }

namespace {

constexpr int kMaxHalvings = 30;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct BlockOutcome {
  int halvings = 0;
  bool skipped = false;
};

double block_nll(const Factors& f, const BoundsMatrix& b, Side side, Eigen::Index idx,
                 const Eigen::VectorXd& x) {
  try {
    return side == Side::U ? row_nll(f, b, idx, x) : col_nll(f, b, idx, x);
  } catch (const UnderflowError&) {
    return kInf;
  }
}

// One damped Newton step on a single row of U or V; writes the result to `out`.
BlockOutcome newton_block(const Factors& f, const BoundsMatrix& b, Side side, Eigen::Index idx,
                          Eigen::VectorXd& out) {
  const Pattern& p = b.pattern();
  const Eigen::MatrixXd& fixed = side == Side::U ? f.V : f.U;
  const Eigen::Index k = fixed.cols();
  const Eigen::VectorXd x = side == Side::U ? f.U.row(idx).transpose() : f.V.row(idx).transpose();
  out = x;

  Eigen::VectorXd g = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(k, k);
  const std::size_t begin = side == Side::U ? p.row_ptr[idx] : p.col_ptr[idx];
  const std::size_t end = side == Side::U ? p.row_ptr[idx + 1] : p.col_ptr[idx + 1];
  if (begin == end) return {};
  for (std::size_t t = begin; t < end; ++t) {
    const Eigen::Index other = side == Side::U ? p.col_of[t] : p.row_of[t];
    const std::size_t slot = side == Side::U ? t : p.csr_slot[t];
    const auto w = fixed.row(other);
    const double th = w.dot(x);
    EntryTerms et;
    try {
      et = entry_terms(b.interval(slot), th, f.sigma);
    } catch (const UnderflowError&) {
      return {0, true};
    }
    const double d1 = (et.w_r - et.w_l) / f.sigma;
    const double d2 = d1 * d1 + (et.delta_r * et.w_r - et.delta_l * et.w_l) /
                                    (f.sigma * f.sigma * f.sigma);
    g.noalias() += d1 * w.transpose();
    H.noalias() += d2 * w.transpose() * w;
  }
  const double base = block_nll(f, b, side, idx, x);

  const double trace = H.trace();
  double lambda = (trace > 0.0 && std::isfinite(trace)) ? 1e-8 * trace / static_cast<double>(k)
                                                        : 1e-8;
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (int attempt = 0; attempt < 200; ++attempt) {
    llt.compute(H + lambda * Eigen::MatrixXd::Identity(k, k));
    if (llt.info() == Eigen::Success) break;
    lambda *= 2.0;
  }
  if (llt.info() != Eigen::Success) return {0, true};
  const Eigen::VectorXd step = llt.solve(g);

  double alpha = 1.0;
  for (int h = 0; h <= kMaxHalvings; ++h) {
    Eigen::VectorXd cand = x - alpha * step;
    if (block_nll(f, b, side, idx, cand) <= base) {
      out = std::move(cand);
      return {h, false};
    }
    alpha *= 0.5;
  }
  return {kMaxHalvings, true};
}

void update_side(Factors& f, const BoundsMatrix& b, Side side, Exec exec, SweepStats& stats) {
  const Eigen::Index count = side == Side::U ? f.U.rows() : f.V.rows();
  std::vector<BlockOutcome> outcomes(static_cast<std::size_t>(count));
  Eigen::MatrixXd next(count, f.U.cols());
  for_each_index(exec, count, [&](std::ptrdiff_t idx) {
    Eigen::VectorXd row;
    outcomes[static_cast<std::size_t>(idx)] = newton_block(f, b, side, idx, row);
    next.row(idx) = row.transpose();
  });
  (side == Side::U ? f.U : f.V) = std::move(next);
  for (const BlockOutcome& o : outcomes) {
    stats.halvings += o.halvings;
    if (o.skipped) ++stats.skipped_blocks;
  }
}

double nll_or_inf(const Factors& f, const BoundsMatrix& b, Exec exec) {
  try {
    return nll(f, b, exec);
  } catch (const UnderflowError&) {
    return kInf;
  }
}

// Returns the NLL at the accepted sigma.
double update_sigma(Factors& f, const BoundsMatrix& b, const FitOptions& opts, SweepStats& stats) {
  const DerivativeWorkspace ws = evaluate_derivatives(f, b, opts.exec);
  const double g = ws.dsigma;
  const double h = ws.d2sigma;
  if (g == 0.0 || !std::isfinite(g)) return ws.nll;
  double step;
  if (h > 0.0 && std::isfinite(h)) {
    step = -g / h;
    stats.sigma_newton = true;
  } else {
    step = -std::copysign(0.5 * f.sigma, g);
  }
  const double start = f.sigma;
  double alpha = 1.0;
  for (int t = 0; t <= kMaxHalvings; ++t) {
    Factors cand{f.U, f.V, std::max(opts.sigma_floor, start + alpha * step)};
    if (cand.sigma == start) break;
    const double val = nll_or_inf(cand, b, opts.exec);
    if (val <= ws.nll) {
      f.sigma = cand.sigma;
      return val;
    }
    alpha *= 0.5;
  }
  return ws.nll;
}

void log_progress(const FitOptions& opts, const char* tag, int iter, double value) {
  if (opts.verbosity > 0)
    std::cerr << "[xpca " << tag << "] iteration " << iter << " nll " << value << '\n';
}

}  // namespace

SweepStats bcd_sweep(Factors& f, const BoundsMatrix& bounds, const FitOptions& opts) {
  SweepStats stats;
  stats.nll_before = nll(f, bounds, opts.exec);
  const Factors saved = f;
  update_side(f, bounds, Side::U, opts.exec, stats);
  update_side(f, bounds, Side::V, opts.exec, stats);
  stats.nll_after = update_sigma(f, bounds, opts, stats);
  if (!(stats.nll_after <= stats.nll_before)) {
    f = saved;
    stats.nll_after = stats.nll_before;
    stats.reverted = true;
  }
  if (opts.verbosity > 1 && stats.skipped_blocks > 0)
    std::cerr << "[xpca bcd] " << stats.skipped_blocks << " blocks skipped\n";
  return stats;
}

OptimizeReport bcd_fit(Factors& f, const BoundsMatrix& bounds, const FitOptions& opts) {
  validate(opts);
  OptimizeReport rep;
  f.sigma = std::max(f.sigma, opts.sigma_floor);
  rep.nll = nll(f, bounds, opts.exec);
  rep.trace.push_back(rep.nll);
  const int budget = opts.max_iterations > 0 ? opts.max_iterations : 500;
  for (int sweep = 1; sweep <= budget; ++sweep) {
    const double prev = rep.nll;
    const SweepStats s = bcd_sweep(f, bounds, opts);
    rep.nll = s.nll_after;
    rep.iterations = sweep;
    rep.trace.push_back(rep.nll);
    log_progress(opts, "bcd", sweep, rep.nll);
    if (is_stationary(stationarity(f, bounds, opts.sigma_floor, opts.exec), rep.nll)) {
      rep.converged = true;
      break;
    }
    if (std::abs(prev - rep.nll) <= opts.tol_rel_nll * std::max(1.0, std::abs(rep.nll))) break;
  }
  rep.evaluations = rep.iterations;
  return rep;
}

OptimizeReport lbfgs_fit(Factors& f, const BoundsMatrix& bounds, const FitOptions& opts) {
  validate(opts);
  const Eigen::Index m = f.U.rows(), n = f.V.rows(), k = f.U.cols();
  const Eigen::Index nu = m * k, nv = n * k;
  const double floor = opts.sigma_floor;

  Eigen::VectorXd x0(nu + nv + 1);
  x0.head(nu) = Eigen::Map<const Eigen::VectorXd>(f.U.data(), nu);
  x0.segment(nu, nv) = Eigen::Map<const Eigen::VectorXd>(f.V.data(), nv);
  x0(nu + nv) = std::log(std::max(f.sigma - floor, 1e-3 * floor));

  auto unpack = [&](const Eigen::VectorXd& x) {
    Factors t;
    t.U = Eigen::Map<const Eigen::MatrixXd>(x.data(), m, k);
    t.V = Eigen::Map<const Eigen::MatrixXd>(x.data() + nu, n, k);
    t.sigma = floor + std::exp(x(nu + nv));
    return t;
  };

  const GradientFunction fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) -> double {
    const Factors t = unpack(x);
    if (!std::isfinite(t.sigma)) return kInf;
    try {
      const FactorGradient g = grad_factors(t, bounds, opts.exec);
      grad.head(nu) = Eigen::Map<const Eigen::VectorXd>(g.dU.data(), nu);
      grad.segment(nu, nv) = Eigen::Map<const Eigen::VectorXd>(g.dV.data(), nv);
      grad(nu + nv) = g.dsigma * (t.sigma - floor);
      return g.nll;
    } catch (const UnderflowError&) {
      return kInf;
    }
  };

  int iter = 0;
  const StopTest stop = [&](const Eigen::VectorXd& x, double fx, const Eigen::VectorXd& grad) {
    log_progress(opts, "lbfgs", iter++, fx);
    const double excess = std::exp(x(nu + nv));
    const double sigma = floor + excess;
    double measure = grad.head(nu + nv).cwiseAbs().maxCoeff();
    const double gs = grad(nu + nv);
    const bool pinned = excess <= 1e-6 * sigma && gs > 0.0;
    if (!pinned) measure = std::max(measure, std::abs(gs * sigma / excess));
    return is_stationary(measure, fx);
  };

  LbfgsOptions lo;
  lo.memory = opts.lbfgs_memory;
  lo.max_evaluations = opts.max_iterations > 0 ? opts.max_iterations : 2000;
  lo.tol_rel_f = opts.tol_rel_nll;
  const double start_nll = nll_or_inf(unpack(x0), bounds, opts.exec);
  const LbfgsResult r = minimize_lbfgs(fn, x0, lo, stop);

  OptimizeReport rep;
  rep.iterations = r.iterations;
  rep.evaluations = r.evaluations;
  rep.converged = r.converged;
  rep.line_search_failed = r.line_search_failed;
  rep.nll = r.f;
  rep.trace.reserve(r.trace.size() + 1);
  rep.trace.push_back(start_nll);
  rep.trace.insert(rep.trace.end(), r.trace.begin(), r.trace.end());
  if (opts.verbosity > 0 && r.line_search_failed) std::cerr << "[xpca lbfgs] " << r.message << '\n';
  if (std::isfinite(r.f)) f = unpack(r.x);
  return rep;
}

FactorModel fit_xpca(const XpcaProblem& problem, Factors init, const FitOptions& opts) {
  validate(opts);
  const BoundsMatrix& b = problem.bounds;
  if (init.U.rows() != b.rows() || init.V.rows() != b.cols() || init.U.cols() != opts.rank ||
      init.V.cols() != opts.rank)
    throw std::invalid_argument("fit_xpca: initial factors do not match data and rank");
  Factors f = std::move(init);
  f.sigma = std::max(f.sigma, opts.sigma_floor);

  FactorModel model;
  model.method = Method::XPCA;
  OptimizeReport rep;
  if (opts.optimizer == Optimizer::LBFGS) {
    rep = lbfgs_fit(f, b, opts);
    model.info.optimizer = "lbfgs";
    if (rep.line_search_failed && !rep.converged) {
      const OptimizeReport more = bcd_fit(f, b, opts);
      model.info.fallback_used = true;
      model.info.optimizer = "lbfgs+bcd";
      rep.iterations += more.iterations;
      rep.converged = more.converged;
      rep.nll = more.nll;
      rep.trace.insert(rep.trace.end(), more.trace.begin() + 1, more.trace.end());
    }
  } else {
    rep = bcd_fit(f, b, opts);
    model.info.optimizer = "bcd";
  }

  const double before = nll(f, b, opts.exec);
  orthogonalize(f.U, f.V);
  const double after = nll(f, b, opts.exec);
  if (!(std::abs(after - before) <= 1e-8 * (1.0 + std::abs(before))))
    throw std::logic_error("fit_xpca: orthogonalization changed the NLL");

  model.U = std::move(f.U);
  model.V = std::move(f.V);
  model.sigma = f.sigma;
  model.edfs = problem.edfs;
  model.epsilon = problem.epsilon;
  model.info.iterations = rep.iterations;
  model.info.objective = after;
  model.info.trace = std::move(rep.trace);
  model.info.converged =
      is_stationary(stationarity(Factors{model.U, model.V, model.sigma}, b, opts.sigma_floor,
                                 opts.exec),
                    after);
  return model;
}

FactorModel fit_xpca(const ObservedMatrix& data, const FitOptions& opts) {
  validate(opts);
  const XpcaProblem problem = prepare_problem(data);
  return fit_xpca(problem, initial_factors(data, opts), opts);
}

FactorModel fit_model(const ObservedMatrix& data, Method method, const FitOptions& opts,
                      TieRule ties) {
  if (method == Method::XPCA) return fit_xpca(data, opts);
  validate(opts);
  GaussianFitOptions g;
  g.rank = opts.rank;
  g.exec = opts.exec;
  return method == Method::PCA ? fit_pca(data, g) : fit_coca(data, g, ties);
}

}  // namespace xpca

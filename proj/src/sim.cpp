#include "xpca/sim.hpp"

#include "xpca/gaussian_fit.hpp"
#include "xpca/normal.hpp"
#include "xpca/random.hpp"

#include <Eigen/Eigenvalues>

#include <charconv>
#include <cmath>
#include <algorithm>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>

namespace xpca {

void MarginalSpec::validate() const {
  for (const ColumnMarginal& c : columns) {
    if (c.kind == MarginalKind::Exponential && !(c.param > 0.0))
      throw std::invalid_argument("exponential rate must be positive");
    if (c.kind == MarginalKind::Binary && !(c.param > 0.0 && c.param < 1.0))
      throw std::invalid_argument("binary probability must lie in (0, 1)");
  }
}

MarginalSpec MarginalSpec::gaussian(Eigen::Index n) {
  return {std::vector<ColumnMarginal>(static_cast<std::size_t>(n))};
}

MarginalSpec MarginalSpec::exponential(Eigen::Index n, double rate) {
  return {std::vector<ColumnMarginal>(static_cast<std::size_t>(n),
                                      {MarginalKind::Exponential, rate})};
}

MarginalSpec MarginalSpec::binary(Eigen::Index n, double p) {
  return {std::vector<ColumnMarginal>(static_cast<std::size_t>(n), {MarginalKind::Binary, p})};
}

MarginalSpec MarginalSpec::mixed(Eigen::Index n, double p) {
  MarginalSpec s = gaussian(n);
  for (Eigen::Index j = 0; j < n / 2; ++j)
    s.columns[static_cast<std::size_t>(j)] = {MarginalKind::Binary, p};
  return s;
}

MarginalSpec make_spec(const std::string& name, Eigen::Index n) {
  if (name == "gaussian") return MarginalSpec::gaussian(n);
  if (name == "exponential") return MarginalSpec::exponential(n);
  if (name == "binary") return MarginalSpec::binary(n);
  if (name == "mixed") return MarginalSpec::mixed(n);
  throw std::invalid_argument("unknown marginal spec '" + name +
                              "' (expected gaussian, exponential, binary or mixed)");
}

namespace {

// Gauss-Hermite rule for E[f(Y)], Y ~ N(0, 1): nodes sqrt(2) x_i, weights w_i / sqrt(pi).
struct HermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

const HermiteRule& hermite_rule() {
  static const HermiteRule rule = [] {
    constexpr int n = 60;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) J(i, i - 1) = J(i - 1, i) = std::sqrt(i / 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    HermiteRule r;
    for (int i = 0; i < n; ++i) {
      r.nodes.push_back(std::sqrt(2.0) * es.eigenvalues()(i));
      const double v0 = es.eigenvectors()(0, i);
      r.weights.push_back(v0 * v0);
    }
    return r;
  }();
  return rule;
}

double push_through(const ColumnMarginal& c, double z) {
  switch (c.kind) {
    case MarginalKind::Gaussian: return z;
    case MarginalKind::Exponential: return -std_normal_log_cdf(-z) / c.param;
    case MarginalKind::Binary: return z > std_normal_quantile(1.0 - c.param) ? 1.0 : 0.0;
  }
  return z;
}

}  // namespace

double marginal_mean(const ColumnMarginal& c, double theta, double sigma) {
  switch (c.kind) {
    case MarginalKind::Gaussian: return theta;
    case MarginalKind::Binary:
      return std_normal_cdf((theta - std_normal_quantile(1.0 - c.param)) / sigma);
    case MarginalKind::Exponential: {
      const HermiteRule& r = hermite_rule();
      double acc = 0.0;
      for (std::size_t t = 0; t < r.nodes.size(); ++t)
        acc += r.weights[t] * push_through(c, theta + sigma * r.nodes[t]);
      return acc;
    }
  }
  return theta;
}

SimulatedData generate(Eigen::Index m, Eigen::Index n, int rank, double sigma2,
                       const MarginalSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (static_cast<Eigen::Index>(spec.columns.size()) != n)
    throw std::invalid_argument("generate: marginal spec must have one entry per column");
  if (m < 2 || n < 2) throw std::invalid_argument("generate: need at least 2 rows and columns");
  if (rank < 1 || rank > std::min(m, n))
    throw std::invalid_argument("generate: rank must be in [1, min(m, n)]");
  if (!(sigma2 > 0.0 && sigma2 < 1.0))
    throw std::invalid_argument("generate: sigma2 must lie in (0, 1)");

  Rng rng(seed);
  Eigen::MatrixXd U(m, rank), V(n, rank);
  for (Eigen::Index c = 0; c < rank; ++c)
    for (Eigen::Index i = 0; i < m; ++i) U(i, c) = rng.normal();
  for (Eigen::Index c = 0; c < rank; ++c)
    for (Eigen::Index j = 0; j < n; ++j) V(j, c) = rng.normal();
  const double sigma = std::sqrt(sigma2);

  Eigen::MatrixXd theta = std::sqrt((1.0 - sigma2) / rank) * (U * V.transpose());
  Eigen::MatrixXd z(m, n), x(m, n), mean(m, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const ColumnMarginal& c = spec.columns[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < m; ++i) {
      z(i, j) = theta(i, j) + sigma * rng.normal();
      x(i, j) = push_through(c, z(i, j));
      mean(i, j) = marginal_mean(c, theta(i, j), sigma);
    }
  }
  return SimulatedData{ObservedMatrix(std::move(x)), std::move(theta), std::move(z),
                       std::move(mean)};
}

std::vector<Entry> holdout_entries(Eigen::Index m, Eigen::Index n, double frac,
                                   std::uint64_t seed) {
  if (!(frac > 0.0 && frac < 1.0)) throw std::invalid_argument("holdout fraction must lie in (0, 1)");
  std::vector<Entry> all;
  all.reserve(static_cast<std::size_t>(m * n));
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < m; ++i) all.push_back({i, j});
  Rng rng(seed);
  rng.shuffle(all);
  all.resize(static_cast<std::size_t>(std::llround(frac * static_cast<double>(m * n))));
  return all;
}

void validate(const ScenarioConfig& cfg) {
  if (cfg.sizes.empty()) throw std::invalid_argument("scenario: no sizes given");
  for (int s : cfg.sizes)
    if (s < 2) throw std::invalid_argument("scenario: sizes must be at least 2");
  if (cfg.reps < 1) throw std::invalid_argument("scenario: reps must be at least 1");
  if (cfg.rank < 1) throw std::invalid_argument("scenario: rank must be at least 1");
  if (cfg.methods.empty()) throw std::invalid_argument("scenario: no methods given");
  if (!(cfg.holdout_frac > 0.0 && cfg.holdout_frac < 1.0))
    throw std::invalid_argument("scenario: holdout fraction must lie in (0, 1)");
  if (!(cfg.sigma2 > 0.0 && cfg.sigma2 < 1.0))
    throw std::invalid_argument("scenario: sigma2 must lie in (0, 1)");
  if (!supports(Method::XPCA, cfg.xpca_estimator))
    throw std::invalid_argument("scenario: invalid XPCA estimator");
  make_spec(cfg.spec, 2).validate();
  validate(cfg.xpca);
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  validate(cfg);
  ScenarioResult res;
  for (std::size_t s = 0; s < cfg.sizes.size(); ++s) {
    const int size = cfg.sizes[s];
    for (int rep = 0; rep < cfg.reps; ++rep) {
      const std::uint64_t rep_seed =
          derive_seed(derive_seed(cfg.seed, s), static_cast<std::uint64_t>(rep));
      res.seeds.push_back(rep_seed);
      auto fail_all = [&](const std::string& msg) {
        for (Method m : cfg.methods) res.failures.push_back({size, rep, to_string(m), msg});
      };
      std::optional<SimulatedData> sim;
      std::optional<ObservedMatrix> train;
      std::vector<Entry> hold;
      try {
        sim.emplace(generate(size, size, cfg.rank, cfg.sigma2, make_spec(cfg.spec, size), rep_seed));
        hold = holdout_entries(size, size, cfg.holdout_frac, derive_seed(rep_seed, 1));
        train.emplace(sim->data.without(hold));
      } catch (const std::exception& e) {
        fail_all(e.what());
        continue;
      }
      const std::vector<Entry> in_sample = train->observed_entries();
      const Eigen::VectorXd scales = column_stddevs(*train);
      std::vector<Entry> scope = in_sample;
      scope.insert(scope.end(), hold.begin(), hold.end());

      for (Method method : cfg.methods) {
        try {
          FitOptions opts = cfg.xpca;
          opts.rank = cfg.rank;
          opts.exec = cfg.exec;
          const FactorModel model = fit_model(*train, method, opts);
          const Estimator est = method == Method::XPCA ? cfg.xpca_estimator : Estimator::Auto;
          const std::vector<double> values = impute(model, scope, est, cfg.exec);
          Eigen::MatrixXd E = Eigen::MatrixXd::Zero(size, size);
          for (std::size_t t = 0; t < scope.size(); ++t) E(scope[t].row, scope[t].col) = values[t];
          const Eigen::MatrixXd& observed = sim->data.values();
          res.rows.push_back({size, rep, method, "observed", "in_sample",
                              standardized_mse(E, observed, in_sample, scales)});
          res.rows.push_back({size, rep, method, "observed", "holdout",
                              standardized_mse(E, observed, hold, scales)});
          res.rows.push_back({size, rep, method, "underlying", "in_sample",
                              standardized_mse(E, sim->underlying_mean, in_sample, scales)});
          res.rows.push_back({size, rep, method, "underlying", "holdout",
                              standardized_mse(E, sim->underlying_mean, hold, scales)});
        } catch (const std::exception& e) {
          res.failures.push_back({size, rep, to_string(method), e.what()});
        }
      }
    }
  }
  return res;
}

void write_scenario_csv(std::ostream& os, const ScenarioResult& result) {
  os << "size,rep,method,metric,split,mse\n";
  for (const ScenarioRow& r : result.rows)
    os << r.size << ',' << r.rep << ',' << to_string(r.method) << ',' << r.metric << ','
       << r.split << ',' << format_double(r.mse) << '\n';
}

namespace {

Eigen::VectorXd column_means(const ObservedMatrix& data) {
  Eigen::VectorXd out(data.cols());
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const auto v = data.column_values(j);
    double s = 0.0;
    for (double x : v) s += x;
    out(j) = s / static_cast<double>(v.size());
  }
  return out;
}

double squared_error(const ObservedMatrix& data, std::span<const Entry> scope,
                     std::span<const double> estimates, const Eigen::VectorXd& scales) {
  double acc = 0.0;
  for (std::size_t t = 0; t < scope.size(); ++t) {
    const double r = (estimates[t] - data.value(scope[t].row, scope[t].col)) / scales(scope[t].col);
    acc += r * r;
  }
  return acc;
}

std::vector<double> mean_estimates(const ObservedMatrix& train, std::span<const Entry> scope) {
  const Eigen::VectorXd means = column_means(train);
  std::vector<double> out;
  out.reserve(scope.size());
  for (const Entry& e : scope) out.push_back(means(e.col));
  return out;
}

}  // namespace

TieExperimentResult tie_method_experiment(std::uint64_t seed, Eigen::Index m, Eigen::Index n,
                                          int folds, int rank, Exec exec) {
  const SimulatedData sim = generate(m, n, rank, 0.25, MarginalSpec::mixed(n), seed);
  const FoldAssignment fa = split_folds(sim.data, folds, derive_seed(seed, 2));
  const Eigen::VectorXd scales = column_stddevs(sim.data);
  GaussianFitOptions g;
  g.rank = rank;
  g.exec = exec;
  double mid = 0.0, max = 0.0, base = 0.0;
  std::size_t count = 0;
  for (int k = 0; k < folds; ++k) {
    const std::vector<Entry> test = fa.members(k);
    const ObservedMatrix train = sim.data.without(test);
    mid += squared_error(sim.data, test, coca_impute(fit_coca(train, g, TieRule::Midpoint), test),
                         scales);
    max += squared_error(sim.data, test, coca_impute(fit_coca(train, g, TieRule::Maximum), test),
                         scales);
    base += squared_error(sim.data, test, mean_estimates(train, test), scales);
    count += test.size();
  }
  const double c = static_cast<double>(count);
  return {mid / c, max / c, base / c};
}

std::vector<CvRow> cross_validate(const ObservedMatrix& data, const CvConfig& cfg) {
  if (cfg.ranks.empty()) throw std::invalid_argument("cv: no ranks given");
  if (cfg.methods.empty()) throw std::invalid_argument("cv: no methods given");
  for (int r : cfg.ranks)
    if (r < 1 || r > std::min(data.rows(), data.cols()))
      throw std::invalid_argument("cv: rank must be in [1, min(rows, cols)]");
  if (!supports(Method::XPCA, cfg.xpca_estimator))
    throw std::invalid_argument("cv: invalid XPCA estimator");
  validate(cfg.xpca);

  const FoldAssignment fa = split_folds(data, cfg.folds, cfg.seed);
  const Eigen::VectorXd scales = column_stddevs(data);
  std::map<std::pair<int, Method>, double> sse;
  double base = 0.0;
  std::size_t count = 0;
  for (int k = 0; k < cfg.folds; ++k) {
    const std::vector<Entry> test = fa.members(k);
    const ObservedMatrix train = data.without(test);
    base += squared_error(data, test, mean_estimates(train, test), scales);
    count += test.size();
    for (int r : cfg.ranks)
      for (Method method : cfg.methods) {
        FitOptions opts = cfg.xpca;
        opts.rank = r;
        opts.exec = cfg.exec;
        const FactorModel model = fit_model(train, method, opts);
        const Estimator est = method == Method::XPCA ? cfg.xpca_estimator : Estimator::Auto;
        sse[{r, method}] += squared_error(data, test, impute(model, test, est, cfg.exec), scales);
      }
  }
  const double c = static_cast<double>(count);
  std::vector<CvRow> rows;
  rows.push_back({0, "column_mean", base / c});
  for (int r : cfg.ranks)
    for (Method method : cfg.methods) rows.push_back({r, to_string(method), sse[{r, method}] / c});
  return rows;
}

void write_cv_csv(std::ostream& os, const std::vector<CvRow>& rows) {
  os << "rank,method,mse\n";
  for (const CvRow& r : rows) os << r.rank << ',' << r.method << ',' << format_double(r.mse) << '\n';
}

namespace {

int parse_int(std::string_view s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
  return v;
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    out.push_back(text.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const std::string& tok : split_commas(text)) {
    const std::size_t dots = tok.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_int(tok));
      continue;
    }
    const int lo = parse_int(std::string_view(tok).substr(0, dots));
    const int hi = parse_int(std::string_view(tok).substr(dots + 2));
    if (hi < lo) throw std::invalid_argument("empty range '" + tok + "'");
    for (int v = lo; v <= hi; ++v) out.push_back(v);
  }
  return out;
}

std::vector<Method> parse_method_list(const std::string& text) {
  std::vector<Method> out;
  for (const std::string& tok : split_commas(text)) out.push_back(parse_method(tok));
  return out;
}

}  // namespace xpca

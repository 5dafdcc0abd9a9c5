// xpca: fit, impute, simulate and cross-validate low-rank copula models.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.
// Thread count follows OMP_NUM_THREADS.

#include "xpca/gaussian_fit.hpp"
#include "xpca/impute.hpp"
#include "xpca/matrix.hpp"
#include "xpca/model_io.hpp"
#include "xpca/sim.hpp"
#include "xpca/xpca_fit.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace {

using namespace xpca;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Writes to a file, or to stdout for "-".
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

template <class Fn>
auto as_usage(Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::string column_label(const std::vector<std::string>& names, Eigen::Index j) {
  if (j < static_cast<Eigen::Index>(names.size())) return names[static_cast<std::size_t>(j)];
  return std::to_string(j);
}

Eigen::Index column_index(const std::vector<std::string>& names, Eigen::Index cols,
                          const std::string& token) {
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == token) return static_cast<Eigen::Index>(j);
  Eigen::Index j = -1;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), j);
  if (ec != std::errc() || ptr != token.data() + token.size() || j < 0 || j >= cols)
    throw std::runtime_error("unknown column '" + token + "'");
  return j;
}

// Cell list: header line, then "row,column" with 0-based rows and a column
// name or 0-based index.
std::vector<Entry> read_cells(const std::string& path, const ModelFile& mf) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open cell list '" + path + "'");
  std::vector<Entry> cells;
  std::string line;
  std::getline(in, line);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected row,column");
    Eigen::Index row = -1;
    const std::string rtok = line.substr(0, comma);
    const auto [ptr, ec] = std::from_chars(rtok.data(), rtok.data() + rtok.size(), row);
    if (ec != std::errc() || ptr != rtok.data() + rtok.size() || row < 0 ||
        row >= mf.model.rows())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad row '" + rtok + "'");
    cells.push_back(
        {row, column_index(mf.column_names, mf.model.cols(), line.substr(comma + 1))});
  }
  return cells;
}

struct FitArgs {
  std::string input, output, method = "xpca", optimizer = "lbfgs", ties = "midpoint", na = "NA";
  int rank = 1, max_iterations = 0, lbfgs_memory = 10, verbose = 0;
  double tol = 1e-8, sigma_floor = 1e-4;
  std::uint64_t seed = 0;
};

int cmd_fit(const FitArgs& a) {
  const ObservedMatrix data = load_csv(a.input, a.na);
  FitOptions opts;
  const Method method = as_usage([&] { return parse_method(a.method); });
  const TieRule ties = as_usage([&] { return parse_tie_rule(a.ties); });
  opts.optimizer = as_usage([&] { return parse_optimizer(a.optimizer); });
  opts.rank = a.rank;
  opts.max_iterations = a.max_iterations;
  opts.tol_rel_nll = a.tol;
  opts.sigma_floor = a.sigma_floor;
  opts.seed = a.seed;
  opts.lbfgs_memory = a.lbfgs_memory;
  opts.verbosity = a.verbose;
  as_usage([&] { validate(opts); return 0; });
  if (a.rank > std::min(data.rows(), data.cols()))
    throw UsageError("--rank must not exceed min(rows, cols) = " +
                     std::to_string(std::min(data.rows(), data.cols())));

  ModelFile mf;
  mf.model = fit_model(data, method, opts, ties);
  mf.column_names = data.column_names();
  mf.missing = data.missing_entries();
  save_model(a.output, mf);

  const FitInfo& info = mf.model.info;
  std::cout << "method " << to_string(method) << "\n"
            << "rank " << a.rank << "\n"
            << (method == Method::XPCA ? "nll " : "sse ") << format_double(info.objective) << "\n"
            << "iterations " << info.iterations << "\n"
            << "optimizer " << info.optimizer << "\n"
            << "converged " << (info.converged ? "yes" : "no") << "\n"
            << "sigma " << format_double(mf.model.sigma) << "\n";
  if (!info.converged) std::cerr << "warning: optimizer stopped before reaching its tolerance\n";
  return 0;
}

struct ImputeArgs {
  std::string model, output = "-", estimator = "auto", cells, distributions, input, completed,
              na = "NA";
};

int cmd_impute(const ImputeArgs& a) {
  const ModelFile mf = load_model(a.model);
  const Estimator est = as_usage([&] { return parse_estimator(a.estimator); });
  if (!supports(mf.model.method, est))
    throw UsageError("estimator '" + a.estimator + "' is not defined for " +
                     to_string(mf.model.method) + " models");
  if (!a.distributions.empty() && mf.model.method != Method::XPCA)
    throw UsageError("--distributions requires an XPCA model");
  if (!a.completed.empty() && a.input.empty())
    throw UsageError("--completed requires --input");

  const std::vector<Entry> cells = a.cells.empty() ? mf.missing : read_cells(a.cells, mf);
  const std::vector<double> est_values = impute(mf.model, cells, est);

  Sink out(a.output);
  out.stream() << "row,column,estimate\n";
  for (std::size_t t = 0; t < cells.size(); ++t)
    out.stream() << cells[t].row << ',' << column_label(mf.column_names, cells[t].col) << ','
                 << format_double(est_values[t]) << '\n';

  if (!a.distributions.empty()) {
    Sink dist(a.distributions);
    dist.stream() << "row,column,value,probability\n";
    for (const Entry& e : cells) {
      const EntryDistribution d = entry_distribution(mf.model, e.row, e.col);
      for (std::size_t t = 0; t < d.support.size(); ++t)
        dist.stream() << e.row << ',' << column_label(mf.column_names, e.col) << ','
                      << format_double(d.support[t]) << ',' << format_double(d.probs[t]) << '\n';
    }
  }

  if (!a.completed.empty()) {
    const ObservedMatrix data = load_csv(a.input, a.na);
    if (data.rows() != mf.model.rows() || data.cols() != mf.model.cols())
      throw std::runtime_error("--input shape does not match the model");
    Eigen::MatrixXd filled = data.values();
    Mask all = Mask::Constant(data.rows(), data.cols(), true);
    for (std::size_t t = 0; t < cells.size(); ++t)
      if (!data.observed(cells[t].row, cells[t].col))
        filled(cells[t].row, cells[t].col) = est_values[t];
    for (Eigen::Index i = 0; i < data.rows(); ++i)
      for (Eigen::Index j = 0; j < data.cols(); ++j)
        if (std::isnan(filled(i, j))) all(i, j) = false;
    write_csv(a.completed, filled, all, data.column_names(), a.na);
  }
  return 0;
}

struct SimArgs {
  std::string spec = "mixed", sizes = "50,100", methods = "pca,coca,xpca", output = "-",
              estimator = "mean", optimizer = "lbfgs";
  int reps = 8, rank = 3;
  double sigma2 = 0.25, holdout = 0.5;
  std::uint64_t seed = 1;
};

int cmd_simulate(const SimArgs& a) {
  ScenarioConfig cfg;
  cfg.spec = a.spec;
  cfg.sizes = as_usage([&] { return parse_int_list(a.sizes); });
  cfg.methods = as_usage([&] { return parse_method_list(a.methods); });
  cfg.xpca_estimator = as_usage([&] { return parse_estimator(a.estimator); });
  cfg.xpca.optimizer = as_usage([&] { return parse_optimizer(a.optimizer); });
  cfg.reps = a.reps;
  cfg.rank = a.rank;
  cfg.sigma2 = a.sigma2;
  cfg.holdout_frac = a.holdout;
  cfg.seed = a.seed;
  as_usage([&] { validate(cfg); return 0; });
  const ScenarioResult res = run_scenario(cfg);
  Sink out(a.output);
  write_scenario_csv(out.stream(), res);
  for (const ScenarioFailure& f : res.failures)
    std::cerr << "warning: size " << f.size << " rep " << f.rep << " " << f.method << ": "
              << f.message << "\n";
  return 0;
}

struct CvArgs {
  std::string input, ranks = "1", methods = "pca,coca,xpca", output = "-",
              estimator = "mean-interp", optimizer = "lbfgs", na = "NA";
  int folds = 20;
  std::uint64_t seed = 1;
};

int cmd_cv(const CvArgs& a) {
  CvConfig cfg;
  cfg.folds = a.folds;
  cfg.ranks = as_usage([&] { return parse_int_list(a.ranks); });
  cfg.methods = as_usage([&] { return parse_method_list(a.methods); });
  cfg.xpca_estimator = as_usage([&] { return parse_estimator(a.estimator); });
  cfg.xpca.optimizer = as_usage([&] { return parse_optimizer(a.optimizer); });
  cfg.seed = a.seed;
  const ObservedMatrix data = load_csv(a.input, a.na);
  if (cfg.folds < 2 || static_cast<std::size_t>(cfg.folds) > data.observed_count())
    throw UsageError("--folds must lie in [2, number of observed cells]");
  const std::vector<CvRow> rows = as_usage([&] { return cross_validate(data, cfg); });
  Sink out(a.output);
  write_cv_csv(out.stream(), rows);
  return 0;
}

struct TiesArgs {
  std::string seeds = "1..5", output = "-";
  int size = 100, folds = 20, rank = 3;
};

int cmd_ties(const TiesArgs& a) {
  const std::vector<int> seeds = as_usage([&] { return parse_int_list(a.seeds); });
  Sink out(a.output);
  out.stream() << "seed,mse_midpoint,mse_maximum,mse_column_mean\n";
  for (int s : seeds) {
    const TieExperimentResult r =
        tie_method_experiment(static_cast<std::uint64_t>(s), a.size, a.size, a.folds, a.rank);
    out.stream() << s << ',' << format_double(r.mse_mid) << ',' << format_double(r.mse_max) << ','
                 << format_double(r.mse_column_mean) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank copula factorization (PCA, COCA, XPCA) for mixed data"};
  app.require_subcommand(1);

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit a model and save it");
  fit->add_option("--input,-i", fa.input, "Data CSV with a header row")->required();
  fit->add_option("--output,-o", fa.output, "Model file to write")->required();
  fit->add_option("--method", fa.method, "pca, coca or xpca");
  fit->add_option("--rank,-k", fa.rank, "Number of components")->check(CLI::PositiveNumber);
  fit->add_option("--optimizer", fa.optimizer, "lbfgs or bcd (xpca)");
  fit->add_option("--max-iterations", fa.max_iterations,
                  "Sweeps (bcd) or evaluations (lbfgs); 0 for the default")
      ->check(CLI::NonNegativeNumber);
  fit->add_option("--tol", fa.tol, "Relative NLL change tolerance")->check(CLI::PositiveNumber);
  fit->add_option("--sigma-floor", fa.sigma_floor, "Lower bound on sigma")
      ->check(CLI::PositiveNumber);
  fit->add_option("--seed", fa.seed, "Seed");
  fit->add_option("--lbfgs-memory", fa.lbfgs_memory, "L-BFGS history length")
      ->check(CLI::PositiveNumber);
  fit->add_option("--ties", fa.ties, "COCA tie rule: midpoint or maximum");
  fit->add_option("--na", fa.na, "Token for missing cells");
  fit->add_flag("--verbose,-v", fa.verbose, "Log optimizer progress to stderr");

  ImputeArgs ia;
  auto* imp = app.add_subcommand("impute", "Impute cells from a saved model");
  imp->add_option("--model,-m", ia.model, "Model file")->required();
  imp->add_option("--output,-o", ia.output, "Estimates CSV (default stdout)");
  imp->add_option("--estimator", ia.estimator, "auto, median, mean or mean-interp");
  imp->add_option("--cells", ia.cells, "CSV of row,column cells (default: missing cells)");
  imp->add_option("--distributions", ia.distributions,
                  "Also write per-cell value probabilities (xpca)");
  imp->add_option("--input", ia.input, "Original data, needed for --completed");
  imp->add_option("--completed", ia.completed, "Write the input with imputed cells filled in");
  imp->add_option("--na", ia.na, "Token for missing cells");

  SimArgs sa;
  auto* sim = app.add_subcommand("simulate", "Run the simulation scenarios");
  sim->add_option("--spec", sa.spec, "gaussian, exponential, binary or mixed");
  sim->add_option("--sizes", sa.sizes, "Matrix sizes, e.g. 50,100 or 50..60");
  sim->add_option("--reps", sa.reps, "Replications per size")->check(CLI::PositiveNumber);
  sim->add_option("--rank", sa.rank, "Generating and fitted rank")->check(CLI::PositiveNumber);
  sim->add_option("--sigma2", sa.sigma2, "Noise variance in (0, 1)");
  sim->add_option("--holdout", sa.holdout, "Fraction of cells held out");
  sim->add_option("--methods", sa.methods, "Comma list of pca, coca, xpca");
  sim->add_option("--estimator", sa.estimator, "XPCA estimator");
  sim->add_option("--optimizer", sa.optimizer, "lbfgs or bcd");
  sim->add_option("--seed", sa.seed, "Master seed");
  sim->add_option("--output,-o", sa.output, "Table CSV (default stdout)");

  CvArgs ca;
  auto* cv = app.add_subcommand("cv", "K-fold cross-validation on a data file");
  cv->add_option("--input,-i", ca.input, "Data CSV")->required();
  cv->add_option("--folds", ca.folds, "Number of folds");
  cv->add_option("--ranks", ca.ranks, "Ranks, e.g. 1..10");
  cv->add_option("--methods", ca.methods, "Comma list of pca, coca, xpca");
  cv->add_option("--estimator", ca.estimator, "XPCA estimator");
  cv->add_option("--optimizer", ca.optimizer, "lbfgs or bcd");
  cv->add_option("--seed", ca.seed, "Fold assignment seed");
  cv->add_option("--na", ca.na, "Token for missing cells");
  cv->add_option("--output,-o", ca.output, "Table CSV (default stdout)");

  TiesArgs ta;
  auto* ties = app.add_subcommand("ties", "COCA midpoint versus maximum tie ranks");
  ties->add_option("--seeds", ta.seeds, "Seeds, e.g. 1..5");
  ties->add_option("--size", ta.size, "Rows and columns")->check(CLI::PositiveNumber);
  ties->add_option("--folds", ta.folds, "Number of folds")->check(CLI::PositiveNumber);
  ties->add_option("--rank", ta.rank, "COCA rank")->check(CLI::PositiveNumber);
  ties->add_option("--output,-o", ta.output, "Table CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*fit) return cmd_fit(fa);
    if (*imp) return cmd_impute(ia);
    if (*sim) return cmd_simulate(sa);
    if (*cv) return cmd_cv(ca);
    if (*ties) return cmd_ties(ta);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

#pragma once

#include "xpca/impute.hpp"
#include "xpca/matrix.hpp"
#include "xpca/model.hpp"
#include "xpca/xpca_fit.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace xpca {

enum class MarginalKind { Gaussian, Exponential, Binary };

// One column's marginal. `param` is the rate for Exponential and the
// probability of a one for Binary; Gaussian ignores it.
struct ColumnMarginal {
  MarginalKind kind = MarginalKind::Gaussian;
  double param = 0.0;
};

struct MarginalSpec {
  std::vector<ColumnMarginal> columns;

  void validate() const;
  static MarginalSpec gaussian(Eigen::Index n);
  static MarginalSpec exponential(Eigen::Index n, double rate = 1.0);
  static MarginalSpec binary(Eigen::Index n, double p = 0.5);
  // First half binary, second half Gaussian.
  static MarginalSpec mixed(Eigen::Index n, double p = 0.5);
};

// "gaussian", "exponential", "binary" or "mixed".
MarginalSpec make_spec(const std::string& name, Eigen::Index n);

struct SimulatedData {
  ObservedMatrix data;
  Eigen::MatrixXd theta;            // low-rank latent mean
  Eigen::MatrixXd z;                // theta plus noise
  Eigen::MatrixXd underlying_mean;  // E[x | theta] in data units
};

/// Draws U, V with i.i.d. N(0, 1) entries, scales U V^T so each entry has
/// variance 1 - sigma2, adds N(0, sigma2) noise and pushes each column
/// through its marginal. Requires 0 < sigma2 < 1.
SimulatedData generate(Eigen::Index m, Eigen::Index n, int rank, double sigma2,
                       const MarginalSpec& spec, std::uint64_t seed);

// E[x | theta] for a latent N(theta, sigma^2) pushed through `marginal`.
double marginal_mean(const ColumnMarginal& marginal, double theta, double sigma);

struct ScenarioConfig {
  std::vector<int> sizes{50, 100};
  std::string spec = "mixed";
  double holdout_frac = 0.5;
  int reps = 8;
  int rank = 3;
  double sigma2 = 0.25;
  std::vector<Method> methods{Method::PCA, Method::COCA, Method::XPCA};
  std::uint64_t seed = 1;
  FitOptions xpca;              // rank and exec are overridden
  Estimator xpca_estimator = Estimator::Mean;
  Exec exec = Exec::Parallel;
};

struct ScenarioRow {
  int size = 0;
  int rep = 0;
  Method method = Method::PCA;
  std::string metric;  // observed or underlying
  std::string split;   // in_sample or holdout
  double mse = 0.0;
};

struct ScenarioFailure {
  int size = 0;
  int rep = 0;
  std::string method;
  std::string message;
};

struct ScenarioResult {
  std::vector<ScenarioRow> rows;
  std::vector<ScenarioFailure> failures;
  std::vector<std::uint64_t> seeds;  // per (size, rep), in row order
};

void validate(const ScenarioConfig& cfg);
ScenarioResult run_scenario(const ScenarioConfig& cfg);
void write_scenario_csv(std::ostream& os, const ScenarioResult& result);

// Random split of all m*n cells into holdout and training parts.
std::vector<Entry> holdout_entries(Eigen::Index m, Eigen::Index n, double frac,
                                   std::uint64_t seed);

struct TieExperimentResult {
  double mse_mid = 0.0;
  double mse_max = 0.0;
  double mse_column_mean = 0.0;
};

/// COCA with midpoint versus maximum ties on m x n mixed data, scored by
/// K-fold cross-validation in standardized units.
TieExperimentResult tie_method_experiment(std::uint64_t seed, Eigen::Index m = 100,
                                          Eigen::Index n = 100, int folds = 20, int rank = 3,
                                          Exec exec = Exec::Parallel);

struct CvConfig {
  int folds = 20;
  std::vector<int> ranks{1};
  std::vector<Method> methods{Method::PCA, Method::COCA, Method::XPCA};
  std::uint64_t seed = 1;
  FitOptions xpca;
  Estimator xpca_estimator = Estimator::MeanInterp;
  Exec exec = Exec::Parallel;
};

struct CvRow {
  int rank = 0;           // 0 for the column-mean baseline
  std::string method;     // pca, coca, xpca or column_mean
  double mse = 0.0;
};

/// Pooled held-out standardized MSE per method and rank. Scales are the
/// population standard deviations of the full observed data.
std::vector<CvRow> cross_validate(const ObservedMatrix& data, const CvConfig& cfg);
void write_cv_csv(std::ostream& os, const std::vector<CvRow>& rows);

// Parses "1,2,5" and ranges such as "1..10".
std::vector<int> parse_int_list(const std::string& text);
std::vector<Method> parse_method_list(const std::string& text);

}  // namespace xpca

#pragma once

#include "xpca/exec.hpp"
#include "xpca/matrix.hpp"
#include "xpca/model.hpp"
#include "xpca/objective.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace xpca {

enum class Optimizer { LBFGS, BCD };
enum class InitMethod { Coca, Random };

std::string to_string(Optimizer o);
Optimizer parse_optimizer(const std::string& s);

struct FitOptions {
  int rank = 1;
  Optimizer optimizer = Optimizer::LBFGS;
  int max_iterations = 0;  // 0: 500 sweeps for BCD, 2000 evaluations for LBFGS
  double tol_rel_nll = 1e-8;
  double sigma_floor = 1e-4;
  std::uint64_t seed = 0;  // only used by InitMethod::Random
  int lbfgs_memory = 10;
  int verbosity = 0;       // >0 logs progress to stderr
  InitMethod init = InitMethod::Coca;
  Exec exec = Exec::Parallel;
};

void validate(const FitOptions& opts);
int iteration_budget(const FitOptions& opts);

// Marginals and latent intervals of a data matrix, shared by every fit.
struct XpcaProblem {
  std::vector<Edf> edfs;
  double epsilon = 0.0;
  BoundsMatrix bounds;
};

XpcaProblem prepare_problem(const ObservedMatrix& data);

Factors initial_factors(const ObservedMatrix& data, const FitOptions& opts);

// Max-norm of the gradient over (U, V, log sigma). The sigma component is
// zeroed when sigma sits on the floor and the gradient pushes it lower.
double stationarity(const FactorGradient& g, double sigma, double sigma_floor);
double stationarity(const Factors& f, const BoundsMatrix& bounds, double sigma_floor,
                    Exec exec = Exec::Parallel);
bool is_stationary(double measure, double nll);

struct SweepStats {
  double nll_before = 0.0;
  double nll_after = 0.0;
  int skipped_blocks = 0;  // rows or columns with no acceptable step
  int halvings = 0;
  bool sigma_newton = false;
  bool reverted = false;
};

/// One block coordinate descent sweep: a damped Newton step on every row of
/// U, then every row of V, then a one-dimensional sigma update. Each block's
/// step is halved until its NLL does not increase.
SweepStats bcd_sweep(Factors& f, const BoundsMatrix& bounds, const FitOptions& opts);

struct OptimizeReport {
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  bool line_search_failed = false;
  double nll = 0.0;
  std::vector<double> trace;  // NLL at the start, then after each iteration
};

OptimizeReport bcd_fit(Factors& f, const BoundsMatrix& bounds, const FitOptions& opts);

// Quasi-Newton over (U, V, s) with sigma = sigma_floor + exp(s).
OptimizeReport lbfgs_fit(Factors& f, const BoundsMatrix& bounds, const FitOptions& opts);

/// Fits an XPCA model. LBFGS falls back to BCD after a line-search failure.
/// The factors are orthogonalized last; info.trace holds the NLL at the
/// start and after every iteration.
FactorModel fit_xpca(const ObservedMatrix& data, const FitOptions& opts);
FactorModel fit_xpca(const XpcaProblem& problem, Factors init, const FitOptions& opts);

// Any of the three methods. PCA and COCA use only rank and exec from opts.
FactorModel fit_model(const ObservedMatrix& data, Method method, const FitOptions& opts,
                      TieRule ties = TieRule::Midpoint);

}  // namespace xpca

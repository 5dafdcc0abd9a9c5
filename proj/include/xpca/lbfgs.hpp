#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace xpca {

struct LbfgsOptions {
  int memory = 10;
  int max_evaluations = 2000;
  double tol_rel_f = 1e-8;
  int stall_iterations = 5;  // consecutive small changes before giving up
  double c1 = 1e-4;  // sufficient decrease
  double c2 = 0.9;   // curvature
  int max_line_search = 30;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  Eigen::VectorXd gradient;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;          // stop_test accepted the final point
  bool line_search_failed = false;
  std::vector<double> trace;       // f after each accepted iteration
  std::string message;
};

// Returns f(x) and writes the gradient. A non-finite return marks x as
// outside the domain; the line search then shortens the step.
using GradientFunction = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;
using StopTest =
    std::function<bool(const Eigen::VectorXd& x, double f, const Eigen::VectorXd& grad)>;

/// Limited-memory BFGS with a strong-Wolfe bracketing line search
/// (cubic interpolation in the zoom phase).
LbfgsResult minimize_lbfgs(const GradientFunction& fn, Eigen::VectorXd x0,
                           const LbfgsOptions& opts, const StopTest& stop);

}  // namespace xpca

#pragma once

#include "xpca/marginals.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace xpca {

enum class Method { PCA, COCA, XPCA };

// Rank used for tied values in the COCA transform. Both rules divide by
// m_j + 1 so that every transformed value stays finite.
enum class TieRule { Midpoint, Maximum };

std::string to_string(Method m);
Method parse_method(const std::string& s);
std::string to_string(TieRule t);
TieRule parse_tie_rule(const std::string& s);

struct ColumnMoments {
  double mean = 0.0;
  double stddev = 1.0;
};

struct FitInfo {
  int iterations = 0;
  double objective = 0.0;  // SSE for PCA/COCA, NLL for XPCA
  bool converged = false;
  std::string optimizer;
  bool fallback_used = false;
  std::vector<double> trace;  // objective after each iteration
};

/// A fitted low-rank Gaussian-copula factorization Theta = U V^T.
///
/// PCA models carry per-column moments; COCA and XPCA carry per-column EDFs,
/// so imputation never needs the original data.
struct FactorModel {
  Method method = Method::PCA;
  Eigen::MatrixXd U;
  Eigen::MatrixXd V;
  double sigma = 0.0;
  std::vector<ColumnMoments> moments;
  std::vector<Edf> edfs;
  TieRule ties = TieRule::Midpoint;
  double epsilon = 0.0;
  FitInfo info;

  Eigen::Index rows() const { return U.rows(); }
  Eigen::Index cols() const { return V.rows(); }
  Eigen::Index rank() const { return U.cols(); }
  double theta(Eigen::Index i, Eigen::Index j) const { return U.row(i).dot(V.row(j)); }
  Eigen::MatrixXd theta() const { return U * V.transpose(); }
};

}  // namespace xpca

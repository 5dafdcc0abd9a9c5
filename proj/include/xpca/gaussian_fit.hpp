#pragma once

#include "xpca/exec.hpp"
#include "xpca/matrix.hpp"
#include "xpca/model.hpp"

#include <span>
#include <vector>

namespace xpca {

// Latent z-values on the observed entries of a data matrix.
struct ZMatrix {
  Eigen::MatrixXd values;
  Mask mask;
};

struct StandardizedData {
  ZMatrix z;
  std::vector<ColumnMoments> moments;
};

struct CopulaData {
  ZMatrix z;
  std::vector<Edf> edfs;
};

// Column z-scores with the population (1/m_j) standard deviation.
StandardizedData standardize(const ObservedMatrix& data);

// z = Phi^{-1}(rank / (m_j + 1)) per the chosen tie rule; Midpoint is the
// standard COCA transform.
CopulaData coca_transform(const ObservedMatrix& data, TieRule ties = TieRule::Midpoint);

// Per-support-value cumulative probabilities used by the COCA transform.
std::vector<double> coca_cumulative(const Edf& edf, TieRule ties);

struct GaussianFitOptions {
  int rank = 1;
  int max_sweeps = 500;
  double tol_rel_sse = 1e-9;
  double ridge = 1e-8;
  // Use alternating least squares even when no entry is missing.
  bool force_iterative = false;
  Exec exec = Exec::Parallel;
};

/// Minimizes the masked sum of squared errors over rank-k factors.
///
/// Complete data goes through the truncated SVD. Otherwise alternating least
/// squares starts from the SVD of the zero-filled matrix and sweeps rows then
/// columns until the relative SSE change drops below tol_rel_sse. The result
/// is orthogonalized; sigma is the MLE sqrt(SSE / |Omega|). The returned
/// model's method and marginals are left for the caller to fill in.
FactorModel fit_gaussian(const ZMatrix& z, const GaussianFitOptions& opts);

double masked_sse(const ZMatrix& z, const Eigen::MatrixXd& U, const Eigen::MatrixXd& V);

// One ALS sweep: every row of U, then every row of V. Returns the new SSE.
double als_sweep(const ZMatrix& z, Eigen::MatrixXd& U, Eigen::MatrixXd& V, double ridge,
                 Exec exec);

/// Rotates (U, V) so V has orthonormal columns and U's columns have
/// nonincreasing norm, keeping U V^T fixed. Each component's sign is chosen
/// so the largest-magnitude entry of its V column is positive.
void orthogonalize(Eigen::MatrixXd& U, Eigen::MatrixXd& V);
FactorModel orthogonalize(FactorModel model);

FactorModel fit_pca(const ObservedMatrix& data, const GaussianFitOptions& opts);
FactorModel fit_coca(const ObservedMatrix& data, const GaussianFitOptions& opts,
                     TieRule ties = TieRule::Midpoint);

std::vector<double> pca_impute(const FactorModel& model, std::span<const Entry> scope);
std::vector<double> coca_impute(const FactorModel& model, std::span<const Entry> scope);

}  // namespace xpca

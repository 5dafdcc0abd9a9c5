#pragma once

#include "xpca/exec.hpp"
#include "xpca/marginals.hpp"
#include "xpca/matrix.hpp"
#include "xpca/pattern.hpp"

#include <span>
#include <stdexcept>
#include <vector>

namespace xpca {

// An entry's interval probability is zero even in log space.
class UnderflowError : public std::runtime_error {
 public:
  UnderflowError(Entry entry, const std::string& what)
      : std::runtime_error(what), entry_(entry) {}
  Entry entry() const { return entry_; }

 private:
  Entry entry_;
};

struct Factors {
  Eigen::MatrixXd U;
  Eigen::MatrixXd V;
  double sigma = 1.0;
};

/// Latent interval (l_ij, r_ij] for every observed entry, stored in CSR order.
class BoundsMatrix {
 public:
  BoundsMatrix(Pattern pattern, std::vector<ZInterval> intervals);
  BoundsMatrix(Eigen::Index rows, Eigen::Index cols, std::span<const Entry> entries,
               std::span<const ZInterval> intervals);

  const Pattern& pattern() const { return pattern_; }
  Eigen::Index rows() const { return pattern_.rows; }
  Eigen::Index cols() const { return pattern_.cols; }
  std::size_t nnz() const { return intervals_.size(); }
  const ZInterval& interval(std::size_t slot) const { return intervals_[slot]; }
  const std::vector<ZInterval>& intervals() const { return intervals_; }

 private:
  Pattern pattern_;
  std::vector<ZInterval> intervals_;
};

BoundsMatrix build_bounds(const ObservedMatrix& data, std::span<const Edf> edfs, double eps);

/// Per-entry quantities shared by all derivative formulas.
///
/// w_r = phi(r*)/p and w_l = phi(l*)/p are formed in log space so they stay
/// finite when p underflows; both are zero at an infinite endpoint, which
/// also zeroes the delta * phi products there.
struct EntryTerms {
  double log_p = 0.0;
  double w_r = 0.0;
  double w_l = 0.0;
  double delta_r = 0.0;  // r - theta (0 when r is infinite)
  double delta_l = 0.0;  // l - theta (0 when l is infinite)
};

EntryTerms entry_terms(ZInterval iv, double theta, double sigma);

double entry_nll(ZInterval iv, double theta, double sigma);
double entry_dtheta(ZInterval iv, double theta, double sigma);
double entry_d2theta(ZInterval iv, double theta, double sigma);

double nll(const Eigen::MatrixXd& theta, double sigma, const BoundsMatrix& bounds,
           Exec exec = Exec::Parallel);
double nll(const Factors& f, const BoundsMatrix& bounds, Exec exec = Exec::Parallel);

// NLL of row i (or column j) alone for a candidate factor row.
double row_nll(const Factors& f, const BoundsMatrix& bounds, Eigen::Index i,
               const Eigen::Ref<const Eigen::VectorXd>& u);
double col_nll(const Factors& f, const BoundsMatrix& bounds, Eigen::Index j,
               const Eigen::Ref<const Eigen::VectorXd>& v);

/// First and second theta-derivatives on every observed entry (CSR order)
/// plus the sigma derivatives, all from one pass over the entries.
struct DerivativeWorkspace {
  std::vector<double> first;   // A on the observed entries
  std::vector<double> second;  // diagonal second derivatives
  double nll = 0.0;
  double dsigma = 0.0;
  double d2sigma = 0.0;
};

DerivativeWorkspace evaluate_derivatives(const Factors& f, const BoundsMatrix& bounds,
                                         Exec exec = Exec::Parallel);

double grad_sigma(const Factors& f, const BoundsMatrix& bounds, Exec exec = Exec::Parallel);
double hess_sigma(const Factors& f, const BoundsMatrix& bounds, Exec exec = Exec::Parallel);

struct FactorGradient {
  Eigen::MatrixXd dU;  // A V
  Eigen::MatrixXd dV;  // A^T U
  double dsigma = 0.0;
  double nll = 0.0;
};

FactorGradient grad_factors(const Factors& f, const BoundsMatrix& bounds,
                            Exec exec = Exec::Parallel);

enum class Side { U, V };

// V^T B V for a row of U, or U^T C U for a row of V.
Eigen::MatrixXd row_hessian(const Factors& f, const BoundsMatrix& bounds, Side side,
                            Eigen::Index index);

}  // namespace xpca

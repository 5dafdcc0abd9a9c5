#include "xpca/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace xpca {

namespace {

struct Point {
  double alpha = 0.0;
  double f = 0.0;
  double slope = 0.0;  // directional derivative
  Eigen::VectorXd grad;
};

class LineSearch {
 public:
  LineSearch(const GradientFunction& fn, const Eigen::VectorXd& x, const Eigen::VectorXd& d,
             const Point& origin, const LbfgsOptions& opts, int& evaluations, int budget)
      : fn_(fn), x_(x), d_(d), origin_(origin), opts_(opts), evals_(evaluations),
        budget_(budget) {}

  // Returns true with `out` holding an acceptable point.
  bool run(double alpha0, Point& out) {
    Point prev = origin_;
    double alpha = alpha0;
    for (int it = 0; it < opts_.max_line_search; ++it) {
      if (evals_ >= budget_) return fallback(prev, out);
      Point cur = probe(alpha);
      if (!std::isfinite(cur.f) || !armijo(cur) || (it > 0 && cur.f >= prev.f))
        return zoom(prev, cur, out);
      if (std::abs(cur.slope) <= -opts_.c2 * origin_.slope) {
        out = std::move(cur);
        return true;
      }
      if (cur.slope >= 0.0) return zoom(cur, prev, out);
      prev = std::move(cur);
      alpha *= 2.0;
    }
    return fallback(prev, out);
  }

 private:
  Point probe(double alpha) {
    Point p;
    p.alpha = alpha;
    p.grad.resize(x_.size());
    ++evals_;
    p.f = fn_(x_ + alpha * d_, p.grad);
    p.slope = std::isfinite(p.f) ? p.grad.dot(d_) : std::numeric_limits<double>::quiet_NaN();
    return p;
  }

  bool armijo(const Point& p) const {
    return p.f <= origin_.f + opts_.c1 * p.alpha * origin_.slope;
  }

  static double interpolate(const Point& lo, const Point& hi) {
    const double a = lo.alpha, b = hi.alpha;
    double trial = 0.5 * (a + b);
    if (std::isfinite(hi.f) && std::isfinite(hi.slope)) {
      const double d1 = lo.slope + hi.slope - 3.0 * (lo.f - hi.f) / (a - b);
      const double disc = d1 * d1 - lo.slope * hi.slope;
      if (disc >= 0.0) {
        const double d2 = std::copysign(std::sqrt(disc), b - a);
        const double denom = hi.slope - lo.slope + 2.0 * d2;
        if (denom != 0.0) trial = b - (b - a) * (hi.slope + d2 - d1) / denom;
      }
    }
    const double lo_edge = std::min(a, b) + 0.1 * std::abs(b - a);
    const double hi_edge = std::max(a, b) - 0.1 * std::abs(b - a);
    if (!std::isfinite(trial) || trial < lo_edge || trial > hi_edge) trial = 0.5 * (a + b);
    return trial;
  }

  bool zoom(Point lo, Point hi, Point& out) {
    for (int it = 0; it < opts_.max_line_search; ++it) {
      if (evals_ >= budget_) break;
      if (std::abs(hi.alpha - lo.alpha) <= 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
      Point cur = probe(interpolate(lo, hi));
      if (!std::isfinite(cur.f) || !armijo(cur) || cur.f >= lo.f) {
        hi = std::move(cur);
        continue;
      }
      if (std::abs(cur.slope) <= -opts_.c2 * origin_.slope) {
        out = std::move(cur);
        return true;
      }
      if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
      lo = std::move(cur);
    }
    return fallback(lo, out);
  }

  // Out of budget or bracket collapsed: keep a point with sufficient decrease.
  bool fallback(const Point& best, Point& out) {
    if (best.alpha > 0.0 && std::isfinite(best.f) && best.f < origin_.f) {
      out = best;
      return true;
    }
    return false;
  }

  const GradientFunction& fn_;
  const Eigen::VectorXd& x_;
  const Eigen::VectorXd& d_;
  const Point& origin_;
  const LbfgsOptions& opts_;
  int& evals_;
  int budget_;
};

}  // namespace

LbfgsResult minimize_lbfgs(const GradientFunction& fn, Eigen::VectorXd x0,
                           const LbfgsOptions& opts, const StopTest& stop) {
  LbfgsResult res;
  res.x = std::move(x0);
  res.gradient.resize(res.x.size());
  res.f = fn(res.x, res.gradient);
  res.evaluations = 1;
  if (!std::isfinite(res.f)) {
    res.line_search_failed = true;
    res.message = "objective not finite at the starting point";
    return res;
  }
  if (stop(res.x, res.f, res.gradient)) {
    res.converged = true;
    res.message = "starting point satisfies the stopping test";
    return res;
  }

  std::deque<Eigen::VectorXd> S, Y;
  std::deque<double> rho;
  Eigen::VectorXd d(res.x.size());
  std::vector<double> alpha_buf(static_cast<std::size_t>(opts.memory));
  int stalled = 0;

  while (res.evaluations < opts.max_evaluations) {
    // Two-loop recursion for d = -H g.
    d = -res.gradient;
    const std::size_t mem = S.size();
    for (std::size_t t = mem; t-- > 0;) {
      alpha_buf[t] = rho[t] * S[t].dot(d);
      d.noalias() -= alpha_buf[t] * Y[t];
    }
    if (mem > 0) d *= S.back().dot(Y.back()) / Y.back().squaredNorm();
    for (std::size_t t = 0; t < mem; ++t) {
      const double beta = rho[t] * Y[t].dot(d);
      d.noalias() += (alpha_buf[t] - beta) * S[t];
    }
    double slope = res.gradient.dot(d);
    if (!(slope < 0.0)) {
      S.clear();
      Y.clear();
      rho.clear();
      d = -res.gradient;
      slope = -res.gradient.squaredNorm();
    }
    const double alpha0 = (mem == 0) ? std::min(1.0, 1.0 / res.gradient.lpNorm<Eigen::Infinity>())
                                     : 1.0;

    Point origin;
    origin.f = res.f;
    origin.slope = slope;
    Point next;
    LineSearch ls(fn, res.x, d, origin, opts, res.evaluations, opts.max_evaluations);
    if (!ls.run(alpha0, next)) {
      res.line_search_failed = true;
      res.message = "line search failed to find an acceptable step";
      return res;
    }

    Eigen::VectorXd s = next.alpha * d;
    Eigen::VectorXd y = next.grad - res.gradient;
    const double f_old = res.f;
    res.x += s;
    res.f = next.f;
    res.gradient = std::move(next.grad);
    ++res.iterations;
    res.trace.push_back(res.f);

    const double sy = s.dot(y);
    if (sy > 1e-12 * y.squaredNorm()) {
      if (static_cast<int>(S.size()) == opts.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
    }

    if (stop(res.x, res.f, res.gradient)) {
      res.converged = true;
      res.message = "stopping test satisfied";
      return res;
    }
    const bool small =
        std::abs(f_old - res.f) <= opts.tol_rel_f * std::max({1.0, std::abs(f_old), std::abs(res.f)});
    stalled = small ? stalled + 1 : 0;
    if (stalled >= opts.stall_iterations) {
      res.message = "relative objective change below tolerance";
      return res;
    }
  }
  res.message = "evaluation budget exhausted";
  return res;
}

}  // namespace xpca

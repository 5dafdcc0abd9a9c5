#pragma once

namespace xpca {

/// Half-open interval (lower, upper] of the latent z-scale. Either endpoint
/// may be infinite; lower < upper is required wherever one is consumed.
struct ZInterval {
  double lower;
  double upper;
};

double std_normal_pdf(double x);
double std_normal_log_pdf(double x);
double std_normal_cdf(double x);

// log Phi(x), accurate far into the lower tail where Phi itself underflows.
double std_normal_log_cdf(double x);

// Phi^{-1}(p) for p in [0, 1]; returns -inf at 0 and +inf at 1.
double std_normal_quantile(double p);

/// log( Phi((upper - theta)/sigma) - Phi((lower - theta)/sigma) ).
///
/// Both-tails-on-one-side intervals are evaluated in log space relative to
/// the endpoint nearer the mean, so the result stays finite and accurate
/// when the two CDF values would round to the same double.
double log_interval_prob(ZInterval iv, double theta, double sigma);

// log(1 - exp(d)) for d <= 0.
double log1mexp(double d);

}  // namespace xpca

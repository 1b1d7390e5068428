#pragma once

// Special functions shared by the region-probability and sampling code.

#include <span>

namespace bnq {

double log_gamma(double x);
double log_beta(double a, double b);

/// log(exp(d) - 1) for d > 0, accurate for d near zero and for large d.
double log_expm1(double d);
/// log(1 - exp(x)) for x <= 0.
double log1m_exp(double x);
double log_sum_exp(std::span<const double> v);

/// log of the regularized incomplete beta I_x(a,b) and of its complement 1 - I_x(a,b).
/// The tail on the near side of the mean is evaluated by continued fraction and
/// the other is derived from it, so both logs are accurate far into either tail.
struct LogIncompleteBeta {
  double log_lower;
  double log_upper;
};

LogIncompleteBeta log_incomplete_beta(double x, double a, double b);
double incomplete_beta(double x, double a, double b);

double log_binomial_pmf(long k, long n, double p);
double binomial_pmf(long k, long n, double p);
/// Pr(X <= k), X ~ Binomial(n, p); 0 for k < 0 and 1 for k >= n.
double binomial_cdf(long k, long n, double p);

double normal_cdf(double x);
double normal_quantile(double p);

}  // namespace bnq

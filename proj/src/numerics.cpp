#include "bnq/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/normal.hpp>

namespace bnq {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kMaxFractionTerms = 200000;
constexpr double kFractionEps = 1e-16;
constexpr double kTiny = 1e-300;

// Modified Lentz evaluation of the continued fraction for I_x(a,b); valid
// (fast converging) for x < (a+1)/(a+b+2).
double beta_fraction(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxFractionTerms; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kFractionEps) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge (a=" + std::to_string(a) +
                           ", b=" + std::to_string(b) + ", x=" + std::to_string(x) + ")");
}
}  // namespace

double log_gamma(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

double log_beta(double a, double b) { return log_gamma(a) + log_gamma(b) - log_gamma(a + b); }

double log_expm1(double d) {
  if (!(d > 0.0)) {
    if (d == 0.0) return kNegInf;
    throw std::domain_error("log_expm1: argument must be positive");
  }
  if (d > 36.0) return d + std::log1p(-std::exp(-d));
  return std::log(std::expm1(d));
}

double log1m_exp(double x) {
  if (x > 0.0) throw std::domain_error("log1m_exp: argument must be <= 0");
  if (x == 0.0) return kNegInf;
  return x > -M_LN2 ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x));
}

double log_sum_exp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  if (std::isinf(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

LogIncompleteBeta log_incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw std::domain_error("incomplete beta: shape parameters must be positive and finite");
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("incomplete beta: x outside [0,1]");
  if (x == 0.0) return {kNegInf, 0.0};
  if (x == 1.0) return {0.0, kNegInf};
  const double log_kernel = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    const double lower = log_kernel - std::log(a) + std::log(beta_fraction(x, a, b));
    return {lower, log1m_exp(std::min(lower, 0.0))};
  }
  const double upper = log_kernel - std::log(b) + std::log(beta_fraction(1.0 - x, b, a));
  return {log1m_exp(std::min(upper, 0.0)), upper};
}

double incomplete_beta(double x, double a, double b) { return std::exp(log_incomplete_beta(x, a, b).log_lower); }

double log_binomial_pmf(long k, long n, double p) {
  if (k < 0 || k > n) return kNegInf;
  const double log_choose = log_gamma(n + 1.0) - log_gamma(k + 1.0) - log_gamma(n - k + 1.0);
  const double a = k == 0 ? 0.0 : k * std::log(p);
  const double b = k == n ? 0.0 : (n - k) * std::log1p(-p);
  return log_choose + a + b;
}

double binomial_pmf(long k, long n, double p) { return std::exp(log_binomial_pmf(k, n, p)); }

double binomial_cdf(long k, long n, double p) {
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  // Pr(X <= k) = I_{1-p}(n-k, k+1)
  return incomplete_beta(1.0 - p, static_cast<double>(n - k), static_cast<double>(k + 1));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / M_SQRT2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must lie in (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

}  // namespace bnq

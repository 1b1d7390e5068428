#include "bnq/dirichlet_regions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "bnq/numerics.hpp"

namespace bnq {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMaxConcentration = 1e10;

// Beta parameters (alpha_k^+, alpha_J^+ - alpha_k^+) of the cumulative sums
// theta_k^+ for k = 1..J-1, with the right parameter taken from a suffix sum.
struct CumulativeShapes {
  std::vector<double> left;
  std::vector<double> right;
};

CumulativeShapes cumulative_shapes(const DirichletParams& alpha) {
  const std::size_t J = alpha.size();
  if (J < 2) throw std::invalid_argument("Dirichlet parameters need at least two entries");
  const double total = alpha.total();
  if (!std::isfinite(total) || total > kMaxConcentration)
    throw std::overflow_error("Dirichlet concentration total " + std::to_string(total) +
                              " is beyond the supported range (1e10)");
  CumulativeShapes s{std::vector<double>(J - 1), std::vector<double>(J - 1)};
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < J; ++k) {
    acc += alpha[k];
    s.left[k] = acc;
  }
  acc = 0.0;
  for (std::size_t k = J - 1; k-- > 0;) {
    acc += alpha[k + 1];
    s.right[k] = acc;
  }
  return s;
}
}  // namespace

CountVector::CountVector(std::vector<std::int64_t> counts) : n_(std::move(counts)) {
  for (auto n : n_)
    if (n < 0) throw std::invalid_argument("CountVector: counts must be nonnegative");
}

std::int64_t CountVector::total() const noexcept { return std::accumulate(n_.begin(), n_.end(), std::int64_t{0}); }

DirichletParams::DirichletParams(std::vector<double> alpha) : alpha_(std::move(alpha)) {
  for (double a : alpha_)
    if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("DirichletParams: entries must be positive and finite");
}

DirichletParams DirichletParams::uniform(std::size_t size, double value) {
  return DirichletParams(std::vector<double>(size, value));
}

double DirichletParams::total() const noexcept { return std::accumulate(alpha_.begin(), alpha_.end(), 0.0); }

DirichletParams DirichletParams::plus(const CountVector& counts) const {
  if (counts.size() != alpha_.size()) throw std::invalid_argument("DirichletParams::plus: size mismatch");
  std::vector<double> out(alpha_);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += static_cast<double>(counts[j]);
  return DirichletParams(std::move(out));
}

RegionProbs region_probs(const DirichletParams& alpha, QuantileLevel tau) {
  const auto shapes = cumulative_shapes(alpha);
  const std::size_t J = alpha.size();
  // cdf[k] = Pr(theta_k^+ < tau) with cdf[0] = 1 and cdf[J] = 0.
  std::vector<double> cdf(J + 1);
  cdf[0] = 1.0;
  cdf[J] = 0.0;
  for (std::size_t k = 1; k < J; ++k) cdf[k] = incomplete_beta(tau.value(), shapes.left[k - 1], shapes.right[k - 1]);
  RegionProbs out{std::vector<double>(J), std::vector<double>(J)};
  for (std::size_t k = 0; k < J; ++k) {
    out.c[k] = std::max(cdf[k] - cdf[k + 1], kRegionProbFloor);
    out.log_c[k] = std::log(out.c[k]);
  }
  return out;
}

RegionProbs log_region_probs(const DirichletParams& alpha, QuantileLevel tau) {
  const auto shapes = cumulative_shapes(alpha);
  const std::size_t J = alpha.size();
  // log B_k (lower) and log(1 - B_k) (upper) for k = 0..J.
  std::vector<double> lower(J + 1);
  std::vector<double> upper(J + 1);
  lower[0] = 0.0;
  upper[0] = kNegInf;
  lower[J] = kNegInf;
  upper[J] = 0.0;
  for (std::size_t k = 1; k < J; ++k) {
    const auto ib = log_incomplete_beta(tau.value(), shapes.left[k - 1], shapes.right[k - 1]);
    lower[k] = ib.log_lower;
    upper[k] = ib.log_upper;
  }

  // c_k = B_{k-1} - B_k, written as B_k {exp(log B_{k-1} - log B_k) - 1}.
  // When B_{k-1} is above 1/2 the same identity is applied to the upper tails,
  // c_k = Q_k - Q_{k-1}, so the subtraction never cancels near 1.
  const auto gap = [](double log_big, double log_small, std::size_t k) {
    if (log_small == kNegInf) return log_big;
    const double d = log_big - log_small;
    if (!(d > 0.0))
      throw std::runtime_error("log_region_probs: cumulative Beta CDFs not strictly monotone at region " +
                               std::to_string(k) + " (parameters numerically unstable)");
    return log_small + log_expm1(d);
  };

  RegionProbs out{std::vector<double>(J), std::vector<double>(J)};
  for (std::size_t k = 0; k < J; ++k) {
    if (lower[k] <= -M_LN2) {
      out.log_c[k] = gap(lower[k], lower[k + 1], k);
    } else {
      out.log_c[k] = gap(upper[k + 1], upper[k], k);
    }
    out.c[k] = std::max(std::exp(out.log_c[k]), kRegionProbFloor);
  }
  return out;
}

RegionProbs small_alpha_region_probs(const CountVector& counts, QuantileLevel tau) {
  const std::int64_t n = counts.total();
  if (n < 1) throw std::invalid_argument("small_alpha_region_probs: need at least one observation");
  const std::size_t J = counts.size();
  RegionProbs out{std::vector<double>(J, 0.0), std::vector<double>(J, kNegInf)};
  std::int64_t start = 0;
  for (std::size_t k = 0; k < J; ++k) {
    const std::int64_t stop = start + counts[k];
    std::vector<double> terms;
    for (std::int64_t j = start; j < stop; ++j) terms.push_back(log_binomial_pmf(j, n - 1, tau.value()));
    if (!terms.empty()) {
      out.log_c[k] = log_sum_exp(terms);
      out.c[k] = std::exp(out.log_c[k]);
    }
    start = stop;
  }
  return out;
}

std::vector<double> empirical_quantile_pmf(std::size_t sample_size, QuantileLevel tau) {
  if (sample_size < 1) throw std::invalid_argument("empirical_quantile_pmf: sample size must be >= 1");
  const auto J = static_cast<long>(sample_size);
  const long rank = static_cast<long>(std::ceil(tau.value() * static_cast<double>(J) - 1e-12)) - 1;
  std::vector<double> pmf(sample_size);
  for (long j = 1; j <= J; ++j) {
    const double p_lo = static_cast<double>(j - 1) / static_cast<double>(J);
    const double p_hi = static_cast<double>(j) / static_cast<double>(J);
    pmf[static_cast<std::size_t>(j - 1)] = binomial_cdf(rank, J, p_lo) - binomial_cdf(rank, J, p_hi);
  }
  return pmf;
}

}  // namespace bnq

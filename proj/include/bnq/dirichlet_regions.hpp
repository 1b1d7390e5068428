#pragma once

// Prior probabilities c_k(alpha) = Pr(theta in A_k) for theta ~ Dirichlet(alpha),
// their log-space evaluation, their vanishing-concentration limits, and the
// sampling distribution of the empirical quantile.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bnq/quantile_core.hpp"

namespace bnq {

/// Observation counts n_j per support point.
class CountVector {
 public:
  CountVector() = default;
  explicit CountVector(std::size_t size) : n_(size, 0) {}
  explicit CountVector(std::vector<std::int64_t> counts);

  std::size_t size() const noexcept { return n_.size(); }
  std::int64_t operator[](std::size_t j) const noexcept { return n_[j]; }
  std::int64_t& operator[](std::size_t j) noexcept { return n_[j]; }
  std::span<const std::int64_t> counts() const noexcept { return n_; }
  std::int64_t total() const noexcept;

  friend bool operator==(const CountVector&, const CountVector&) = default;

 private:
  std::vector<std::int64_t> n_;
};

/// Dirichlet concentration vector, every entry positive and finite.
class DirichletParams {
 public:
  explicit DirichletParams(std::vector<double> alpha);
  static DirichletParams uniform(std::size_t size, double value);

  std::size_t size() const noexcept { return alpha_.size(); }
  double operator[](std::size_t j) const noexcept { return alpha_[j]; }
  std::span<const double> values() const noexcept { return alpha_; }
  double total() const noexcept;

  /// alpha + n
  DirichletParams plus(const CountVector& counts) const;

 private:
  std::vector<double> alpha_;
};

struct RegionProbs {
  std::vector<double> c;
  std::vector<double> log_c;
};

/// Smallest linear-space region probability; the log value is kept unfloored.
inline constexpr double kRegionProbFloor = 1e-300;

/// c_k as differences of Beta CDFs of the cumulative sums theta_k^+.
RegionProbs region_probs(const DirichletParams& alpha, QuantileLevel tau);

/// Same quantity evaluated entirely on the log scale; stable for concentrations
/// in the hundreds and beyond. Throws std::runtime_error if the cumulative CDFs
/// fail to be monotone.
RegionProbs log_region_probs(const DirichletParams& alpha, QuantileLevel tau);

/// Limit of c_k(alpha + n) as a uniform alpha decreases to zero: binomial
/// Binomial(n - 1, tau) mass over the ranks owned by support point k.
RegionProbs small_alpha_region_probs(const CountVector& counts, QuantileLevel tau);

/// Limit of c_k(alpha) itself under the same decay.
inline double small_alpha_prior_limit(std::size_t support_size) { return 1.0 / static_cast<double>(support_size); }

/// Pr(empirical tau-quantile = j-th order statistic) for a sample of J distinct values.
std::vector<double> empirical_quantile_pmf(std::size_t sample_size, QuantileLevel tau);

}  // namespace bnq

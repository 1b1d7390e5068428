#pragma once

// Check loss, the expected-loss objective and the quantile map for a
// distribution on a known finite support.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace bnq {

/// Sorted, strictly increasing set of outcome values s_1 < ... < s_J (J >= 2).
class Support {
 public:
  explicit Support(std::vector<double> values);

  /// Equally spaced grid lo, lo + step, ..., up to hi (inclusive within 1e-9 * step).
  static Support grid(double lo, double hi, double step);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t j) const noexcept { return values_[j]; }
  std::span<const double> values() const noexcept { return values_; }

  /// Index of the support point closest to x (ties go to the lower point).
  std::size_t nearest(double x) const noexcept;
  /// Index of x if it is a support point (within tol), else npos.
  std::size_t find(double x, double tol = 1e-9) const noexcept;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<double> values_;
};

/// Quantile level tau in the open interval (0, 1).
class QuantileLevel {
 public:
  explicit QuantileLevel(double tau);
  double value() const noexcept { return tau_; }

 private:
  double tau_;
};

/// Probability vector over the support, stored full length (theta_J included).
class SimplexPoint {
 public:
  /// Normalizes `probs`; throws if any entry is negative or non-finite or the sum is zero.
  explicit SimplexPoint(std::vector<double> probs);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t j) const noexcept { return probs_[j]; }
  std::span<const double> probs() const noexcept { return probs_; }
  bool interior() const noexcept;

 private:
  std::vector<double> probs_;
};

/// Zero-based index k of the region A_k = {theta : sum_{j<k} theta_j < tau < sum_{j<=k} theta_j}.
struct RegionIndex {
  std::size_t k = 0;
  friend bool operator==(RegionIndex, RegionIndex) = default;
};

/// Raised when a cumulative sum of theta equals tau within kTieTolerance,
/// i.e. theta sits on the measure-zero boundary between two regions.
class NonUniqueQuantile : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr double kTieTolerance = 1e-12;

double check_loss(double e, QuantileLevel tau);

double objective_psi(double b, const SimplexPoint& theta, const Support& support, QuantileLevel tau);

struct QuantileResult {
  double beta;
  RegionIndex region;
};

/// Single cumulative-sum scan; throws NonUniqueQuantile on a tie.
QuantileResult quantile_of(const SimplexPoint& theta, const Support& support, QuantileLevel tau);

/// Region index only, for raw probability spans (used in sampler hot paths).
RegionIndex region_of(std::span<const double> theta, QuantileLevel tau);

/// Strict A_k membership predicate.
bool in_region(std::span<const double> theta, QuantileLevel tau, RegionIndex region);

enum class Direction { kDown = -1, kUp = 1 };

/// One-sided derivative of objective_psi at b in direction v.
double directional_derivative(double b, const SimplexPoint& theta, const Support& support,
                              QuantileLevel tau, Direction v);

}  // namespace bnq

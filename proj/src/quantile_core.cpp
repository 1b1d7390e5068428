#include "bnq/quantile_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace bnq {

Support::Support(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) throw std::invalid_argument("Support: need at least two points");
  for (std::size_t j = 0; j < values_.size(); ++j) {
    if (!std::isfinite(values_[j])) throw std::invalid_argument("Support: non-finite value");
    if (j > 0 && !(values_[j - 1] < values_[j]))
      throw std::invalid_argument("Support: values must be strictly increasing");
  }
}

Support Support::grid(double lo, double hi, double step) {
  if (!(step > 0) || !(hi > lo)) throw std::invalid_argument("Support::grid: need lo < hi, step > 0");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> v(count);
  for (std::size_t j = 0; j < count; ++j) v[j] = lo + step * static_cast<double>(j);
  return Support(std::move(v));
}

std::size_t Support::nearest(double x) const noexcept {
  auto it = std::lower_bound(values_.begin(), values_.end(), x);
  if (it == values_.begin()) return 0;
  if (it == values_.end()) return values_.size() - 1;
  const auto hi = static_cast<std::size_t>(it - values_.begin());
  return (x - values_[hi - 1] <= values_[hi] - x) ? hi - 1 : hi;
}

std::size_t Support::find(double x, double tol) const noexcept {
  const std::size_t j = nearest(x);
  return std::abs(values_[j] - x) <= tol ? j : npos;
}

QuantileLevel::QuantileLevel(double tau) : tau_(tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("QuantileLevel: tau must lie in (0,1)");
}

SimplexPoint::SimplexPoint(std::vector<double> probs) : probs_(std::move(probs)) {
  double total = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0) throw std::invalid_argument("SimplexPoint: entries must be finite and >= 0");
    total += p;
  }
  if (!(total > 0.0)) throw std::invalid_argument("SimplexPoint: zero total mass");
  for (double& p : probs_) p /= total;
}

bool SimplexPoint::interior() const noexcept {
  return std::all_of(probs_.begin(), probs_.end(), [](double p) { return p > 0.0; });
}

double check_loss(double e, QuantileLevel tau) {
  if (!std::isfinite(e)) throw std::invalid_argument("check_loss: non-finite residual");
  const double t = tau.value();
  return e < 0.0 ? -e * (1.0 - t) : e * t;
}

namespace {
void require_aligned(const SimplexPoint& theta, const Support& support) {
  if (theta.size() != support.size())
    throw std::invalid_argument("theta has " + std::to_string(theta.size()) + " entries, support has " +
                                std::to_string(support.size()));
}
}  // namespace

double objective_psi(double b, const SimplexPoint& theta, const Support& support, QuantileLevel tau) {
  require_aligned(theta, support);
  if (!std::isfinite(b)) throw std::invalid_argument("objective_psi: non-finite b");
  double psi = 0.0;
  for (std::size_t j = 0; j < support.size(); ++j) psi += theta[j] * check_loss(support[j] - b, tau);
  return psi;
}

RegionIndex region_of(std::span<const double> theta, QuantileLevel tau) {
  const double t = tau.value();
  double cum = 0.0;
  for (std::size_t k = 0; k + 1 < theta.size(); ++k) {
    cum += theta[k];
    if (std::abs(cum - t) <= kTieTolerance)
      throw NonUniqueQuantile("cumulative probability equals tau at index " + std::to_string(k));
    if (cum > t) return RegionIndex{k};
  }
  return RegionIndex{theta.size() - 1};
}

bool in_region(std::span<const double> theta, QuantileLevel tau, RegionIndex region) {
  if (region.k >= theta.size()) return false;
  double below = 0.0;
  for (std::size_t j = 0; j < region.k; ++j) below += theta[j];
  const double upto = below + theta[region.k];
  return below < tau.value() && tau.value() < upto;
}

QuantileResult quantile_of(const SimplexPoint& theta, const Support& support, QuantileLevel tau) {
  require_aligned(theta, support);
  const RegionIndex r = region_of(theta.probs(), tau);
  return {support[r.k], r};
}

double directional_derivative(double b, const SimplexPoint& theta, const Support& support,
                              QuantileLevel tau, Direction v) {
  require_aligned(theta, support);
  const double t = tau.value();
  const double dir = static_cast<double>(static_cast<int>(v));
  double d = 0.0;
  for (std::size_t j = 0; j < support.size(); ++j) {
    const double s = support[j];
    if (s < b) {
      d += (1.0 - t) * theta[j] * dir;
    } else if (s > b) {
      d -= t * theta[j] * dir;
    } else {
      d += theta[j] * check_loss(-dir, tau);
    }
  }
  return d;
}

}  // namespace bnq

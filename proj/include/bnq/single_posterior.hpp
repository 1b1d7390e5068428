#pragma once

// Exact posterior of a single population's quantile under a Dirichlet base
// measure and an arbitrary prior pmf on the support.

#include <cstdint>
#include <span>
#include <vector>

#include "bnq/dirichlet_regions.hpp"
#include "bnq/quantile_core.hpp"
#include "bnq/random.hpp"

namespace bnq {

/// Quantile level plus a strictly positive prior pmf b over the support.
class QuantileSpec {
 public:
  QuantileSpec(QuantileLevel tau, std::vector<double> prior_b);

  QuantileLevel tau() const noexcept { return tau_; }
  std::span<const double> prior() const noexcept { return prior_; }
  std::size_t size() const noexcept { return prior_.size(); }

 private:
  QuantileLevel tau_;
  std::vector<double> prior_;
};

struct PosteriorBeta {
  std::vector<double> pmf;
  /// log C(alpha, n) = log sum_k b_k c_k(alpha + n) / c_k(alpha)
  double log_norm_const = 0.0;
};

PosteriorBeta posterior_beta(const QuantileSpec& spec, const DirichletParams& alpha, const CountVector& counts);

/// Normalizes log b_k + log c_k(alpha + n) - log c_k(alpha) given the three
/// log vectors; for callers that cache log c(alpha).
PosteriorBeta posterior_from_logs(std::span<const double> log_prior, std::span<const double> log_c_posterior,
                                  std::span<const double> log_c_prior);

struct PosteriorSummary {
  double mean = 0.0;
  std::vector<double> quantiles;
};

/// Mean and left-closed quantiles Q_q = min{s_k : CDF(s_k) >= q} of a pmf on the support.
PosteriorSummary posterior_summary(std::span<const double> pmf, const Support& support,
                                   std::span<const double> levels = {});
inline PosteriorSummary posterior_summary(const PosteriorBeta& post, const Support& support,
                                          std::span<const double> levels = {}) {
  return posterior_summary(post.pmf, support, levels);
}

struct AcceptStats {
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  double rate() const noexcept {
    return proposals == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
  }
};

struct ThetaDraw {
  SimplexPoint theta;
  double beta;
  RegionIndex region;
};

/// Draws theta | data by proposing from Dirichlet(alpha + n) and accepting with
/// probability (b_k / c_k(alpha)) / max_j (b_j / c_j(alpha)), k = k(theta).
class PosteriorThetaSampler {
 public:
  PosteriorThetaSampler(const QuantileSpec& spec, const DirichletParams& alpha, const CountVector& counts,
                        const Support& support);

  ThetaDraw draw(Rng& rng);
  const AcceptStats& stats() const noexcept { return stats_; }
  /// Acceptance probability for a proposal falling in region k.
  double acceptance_probability(RegionIndex k) const;

  static constexpr std::uint64_t kStarvationWindow = 100000;
  static constexpr double kStarvationRate = 1e-4;

 private:
  QuantileLevel tau_;
  Support support_;
  DirichletParams posterior_alpha_;
  std::vector<double> log_accept_;
  AcceptStats stats_;
};

struct ThetaPosteriorSample {
  ThetaDraw draw;
  AcceptStats stats;
};

ThetaPosteriorSample sample_theta_posterior(const QuantileSpec& spec, const DirichletParams& alpha,
                                            const CountVector& counts, const Support& support, Rng& rng);

/// Kernel-weight approximation to the posterior of the quantile when the
/// support is the (tie-free, sorted) data and the concentration vanishes.
class CheapPosterior {
 public:
  CheapPosterior(std::span<const double> sorted_data, const QuantileSpec& spec);

  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return variance_; }
  std::span<const double> weights() const noexcept { return weights_; }
  /// F(x) = sum_j w*_j 1(s_j <= x)
  double cdf(double x) const;

 private:
  std::vector<double> data_;
  std::vector<double> weights_;
  double mean_ = 0.0;
  double variance_ = 0.0;
};

/// Unnormalized Gaussian rank kernel exp{-J((k-1)/(J-1) - tau)^2 / (2 tau (1-tau))}, k = 1..J.
std::vector<double> cheap_kernel_weights(std::size_t J, QuantileLevel tau);

inline CheapPosterior cheap_posterior(std::span<const double> sorted_data, const QuantileSpec& spec) {
  return CheapPosterior(sorted_data, spec);
}

}  // namespace bnq

#pragma once

// Prior builders, frequentist baselines for a sample quantile, and the Monte
// Carlo harness comparing them against the discrete Bayesian estimators.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bnq/dirichlet_regions.hpp"
#include "bnq/quantile_core.hpp"
#include "bnq/random.hpp"

namespace bnq {

/// Pr(beta = s_k) proportional to exp(-decay |s_k - center|).
std::vector<double> build_discrete_prior(const Support& support, double center, double decay);

enum class CricketVariant { kMedian, kPerTau };

struct CricketPriorConfig {
  double alpha_mass = 4.0;     // sum of the shaped part of alpha
  double alpha_decay = 0.03;   // alpha~_j proportional to exp(-decay s_j)
  double lambda_mass = 5.0;    // sum of the shaped part of lambda
  double lambda_center = 15.0;
  double lambda_scale = 15.0;
};

struct CricketPriors {
  DirichletParams alpha;
  std::vector<double> lambda;
};

/// alpha_j = mass * alpha~_j + 1/J and lambda_j = lambda~_j + 1/J with a Gaussian
/// lambda~ shape. The per-tau variant centres the shape at center + scale * Phi^{-1}(tau).
CricketPriors build_cricket_priors(const Support& support, QuantileLevel tau, CricketVariant variant,
                                   const CricketPriorConfig& config = {});

/// Lower empirical quantile z_(ceil(tau n)) of an unsorted sample.
double sample_quantile(std::span<const double> data, QuantileLevel tau);

/// 0.9 min(sd, IQR / 1.34) n^(-1/5)
double silverman_bandwidth(std::span<const double> data);
double gaussian_kde(std::span<const double> data, double x, double bandwidth);

struct Interval {
  double point;
  double lo;
  double hi;
};

/// Sample quantile with the normal-approximation interval using a kernel
/// density estimate of f at the sample quantile.
Interval clt_interval(std::span<const double> data, QuantileLevel tau, double level = 0.95);

/// Percentile bootstrap; the point estimate is the mean of the resampled quantiles.
Interval bootstrap_interval(std::span<const double> data, QuantileLevel tau, std::size_t resamples, double level,
                            Rng& rng);

enum class Estimator { kClt, kBoot, kDiscrete, kData };
std::string to_string(Estimator e);
Estimator estimator_from_string(const std::string& name);

struct McConfig {
  double tau = 0.5;
  std::size_t n = 40;
  std::size_t replications = 2000;
  std::uint64_t seed = 1;
  std::vector<Estimator> estimators{Estimator::kClt, Estimator::kBoot, Estimator::kDiscrete, Estimator::kData};
  double prior_decay = 0.1;
  /// Offset gamma_tau of the prior centre from the true quantile; defaults to
  /// the preset for tau in {0.5, 0.9} when unset.
  std::optional<double> prior_offset;
  std::size_t grid_size = 1000;
  double grid_lo = -10.0;
  double grid_hi = 40.0;
  std::size_t bootstrap_resamples = 1000;
  double level = 0.95;
};

/// Preset prior offsets: 2.333 at tau = 0.5 and 6.032 at tau = 0.9.
std::optional<double> preset_prior_offset(double tau);

struct McRow {
  Estimator estimator;
  std::size_t n;
  double tau;
  double bias;
  double sqrt_n_se;
  double rmse;
  double coverage;
  std::size_t failures;
};

/// True tau-quantile of -log(chi^2_1).
double neg_log_chisq_quantile(double tau);
/// Density of -log(chi^2_1) at x.
double neg_log_chisq_density(double x);

std::vector<McRow> run_monte_carlo(const McConfig& config);

}  // namespace bnq

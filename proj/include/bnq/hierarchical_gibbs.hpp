#pragma once

// Hierarchical quantile model: subpopulation quantiles beta_i drawn iid from
// a shared pmf pi on the support, pi ~ Dirichlet(lambda), and theta^(i) | beta_i
// a Dirichlet(alpha) truncated to the region of beta_i. Right-censored
// observations are handled by data augmentation.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bnq/dirichlet_regions.hpp"
#include "bnq/quantile_core.hpp"
#include "bnq/random.hpp"

namespace bnq {

struct SubpopData {
  std::string id;
  /// Fully observed counts per support point.
  CountVector counts;
  /// Zero-based support indices l_i of right-censored observations (U_i >= s_{l_i}).
  std::vector<std::size_t> censor_lows;
};

struct MixingPmf {
  std::vector<double> pi;
};

struct HyperParams {
  DirichletParams alpha;
  std::vector<double> lambda;
};

struct HierarchyDraw {
  /// Support index of beta_i for every subpopulation.
  std::vector<std::size_t> beta;
  MixingPmf pi;
  /// Imputed support indices, aligned with each subpopulation's censor_lows.
  std::vector<std::vector<std::size_t>> imputed;
  std::uint64_t iteration = 0;
};

struct GibbsSchedule {
  std::uint64_t burn_in = 1000;
  std::uint64_t kept = 5000;
  std::uint64_t thin = 1;
};

struct GibbsChain {
  std::vector<HierarchyDraw> draws;

  /// Frequencies of beta_i over the kept draws.
  std::vector<double> beta_pmf(std::size_t subpop, std::size_t support_size) const;
  /// Posterior mean of pi.
  std::vector<double> mixing_mean() const;
};

/// Alternates beta_i | D_i, pi (exact enumeration) and pi | beta.
/// Every subpopulation draws from its own stream keyed by its id; pi uses a
/// separate stream, so reordering subpopulations permutes the beta chains only.
GibbsChain gibbs_hierarchical(std::span<const SubpopData> data, const HyperParams& hp, QuantileLevel tau,
                              const GibbsSchedule& schedule, std::uint64_t seed);

/// Per sweep and subpopulation, draw theta ~ D_J(alpha + n, k(beta_i))
/// from the observed counts, impute each censored value from theta restricted to
/// its upper tail, redraw beta_i given observed plus imputed counts, then pi.
GibbsChain gibbs_censored(std::span<const SubpopData> data, const HyperParams& hp, QuantileLevel tau,
                          const GibbsSchedule& schedule, std::uint64_t seed);

/// Independent categorical draws of U_i from theta renormalized to {l_i, ..., J}.
std::vector<std::size_t> impute_censored(std::span<const double> theta, std::span<const std::size_t> censor_lows,
                                         Rng& rng);

/// Censored Bayesian bootstrap: theta* ~ Dirichlet(alpha + n), U | theta*, theta ~ Dirichlet(alpha + n + n'),
/// beta = t(theta). Returns support indices of the draws.
std::vector<std::size_t> bootstrap_censored(const SubpopData& data, const DirichletParams& alpha,
                                            QuantileLevel tau, std::size_t draws, Rng& rng);

struct NaiveDiagnostic {
  std::vector<std::size_t> beta;
  /// imputed[m][i]: value index of censored observation i at kept draw m.
  std::vector<std::vector<std::size_t>> imputed;
  std::vector<std::optional<double>> imputed_lag1;
  std::optional<double> beta_lag1;
};

/// Plain theta | U / U | theta alternation. Mixes pathologically when a censored
/// value's legal range holds no observed data; kept only as a diagnostic.
NaiveDiagnostic naive_gibbs_diagnostic(const SubpopData& data, const DirichletParams& alpha, QuantileLevel tau,
                                       const GibbsSchedule& schedule, Rng& rng);

/// Lag-1 sample autocorrelation; empty for fewer than three points or a constant series.
std::optional<double> lag1_autocorrelation(std::span<const double> series);

/// Lag-1 autocorrelation of every imputed value of one subpopulation along a chain.
std::vector<std::optional<double>> imputed_lag1(const GibbsChain& chain, std::size_t subpop);

/// Lower empirical tau-quantile index of a count vector, z_(ceil(tau n)); nullopt if empty.
std::optional<std::size_t> empirical_quantile_index(const CountVector& counts, QuantileLevel tau);

}  // namespace bnq

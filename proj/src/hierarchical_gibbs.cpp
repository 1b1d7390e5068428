#include "bnq/hierarchical_gibbs.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "bnq/numerics.hpp"
#include "bnq/truncated_samplers.hpp"

namespace bnq {

namespace {

constexpr double kMinTailMass = 1e-300;
constexpr std::size_t kRatioCacheLimit = 4096;

void validate_schedule(const GibbsSchedule& s) {
  if (s.kept == 0) throw std::invalid_argument("Gibbs schedule keeps no draws");
  if (s.thin == 0) throw std::invalid_argument("Gibbs schedule thin must be >= 1");
}

void validate_subpop(const SubpopData& d, std::size_t J) {
  if (d.counts.size() != J)
    throw std::invalid_argument("subpopulation '" + d.id + "': counts not aligned to the support");
  for (auto l : d.censor_lows)
    if (l >= J) throw std::invalid_argument("subpopulation '" + d.id + "': censoring index out of range");
}

std::size_t impute_one_log(std::span<const double> log_theta, std::size_t low, Rng& rng) {
  return low + categorical_log(rng, log_theta.subspan(low));
}

// Per-subpopulation state of the hierarchical sampler.
struct SubpopState {
  const SubpopData* data;
  Rng rng;
  DirichletParams observed_alpha;  // alpha + n_obs
  std::size_t beta;
  std::vector<std::size_t> imputed;
  std::map<std::vector<std::int64_t>, std::vector<double>> ratio_cache;
};

class HierarchicalSampler {
 public:
  HierarchicalSampler(std::span<const SubpopData> data, const HyperParams& hp, QuantileLevel tau, std::uint64_t seed,
                      bool augment)
      : hp_(hp), tau_(tau), augment_(augment), pi_rng_(make_stream(seed, 0)) {
    const std::size_t J = hp.alpha.size();
    if (data.empty()) throw std::invalid_argument("hierarchical sampler needs at least one subpopulation");
    if (hp.lambda.size() != J) throw std::invalid_argument("lambda must be aligned to the support");
    for (double l : hp.lambda)
      if (!(l > 0.0) || !std::isfinite(l)) throw std::invalid_argument("lambda entries must be positive");
    std::set<std::string> ids;
    for (const auto& d : data) {
      validate_subpop(d, J);
      if (!ids.insert(d.id).second) throw std::invalid_argument("duplicate subpopulation id '" + d.id + "'");
    }
    prior_log_c_ = log_region_probs(hp.alpha, tau).log_c;

    double lambda_total = 0.0;
    for (double l : hp.lambda) lambda_total += l;
    log_pi_.resize(J);
    for (std::size_t j = 0; j < J; ++j) log_pi_[j] = std::log(hp.lambda[j] / lambda_total);

    states_.reserve(data.size());
    for (const auto& d : data) {
      SubpopState s{&d, make_stream(seed, stable_hash(d.id)), hp.alpha.plus(d.counts), 0, d.censor_lows, {}};
      s.beta = empirical_quantile_index(d.counts, tau).value_or((J - 1) / 2);
      states_.push_back(std::move(s));
    }
  }

  void sweep() {
    const std::size_t J = hp_.alpha.size();
    std::vector<double> nu(J, 0.0);
    for (auto& s : states_) {
      if (augment_ && !s.data->censor_lows.empty()) augment(s);
      const auto& ratio = log_ratio(s);
      std::vector<double> logw(J);
      for (std::size_t k = 0; k < J; ++k) logw[k] = log_pi_[k] + ratio[k];
      s.beta = categorical_log(s.rng, logw);
      nu[s.beta] += 1.0;
    }
    for (std::size_t j = 0; j < J; ++j) nu[j] += hp_.lambda[j];
    log_pi_ = log_dirichlet_variate(pi_rng_, nu);
  }

  HierarchyDraw snapshot(std::uint64_t iteration) const {
    HierarchyDraw d;
    d.iteration = iteration;
    d.beta.reserve(states_.size());
    d.imputed.reserve(states_.size());
    for (const auto& s : states_) {
      d.beta.push_back(s.beta);
      d.imputed.push_back(s.imputed);
    }
    d.pi.pi.resize(log_pi_.size());
    for (std::size_t j = 0; j < log_pi_.size(); ++j) d.pi.pi[j] = std::exp(log_pi_[j]);
    return d;
  }

 private:
  // Given A_k, the split of the mass above s_k is Dirichlet(alpha_{k+1..J})
  // independently of everything else, so it is redrawn on the log scale: the
  // block total comes out of a subtraction and can round to zero.
  void augment(SubpopState& s) {
    const std::size_t J = hp_.alpha.size();
    const std::size_t k = s.beta;
    try {
      const auto theta = sample_constrained_dirichlet({s.observed_alpha, RegionIndex{k}, tau_}, s.rng);
      std::vector<double> log_theta(J);
      std::vector<double> upper;
      for (std::size_t j = 0; j <= k; ++j) log_theta[j] = std::log(theta[j]);
      if (k + 1 < J) {
        double total = 0.0;
        for (std::size_t j = k + 1; j < J; ++j) total += theta[j];
        upper = log_dirichlet_variate(s.rng, s.observed_alpha.values().subspan(k + 1));
        for (std::size_t j = k + 1; j < J; ++j) log_theta[j] = std::log(total) + upper[j - k - 1];
      }
      for (std::size_t c = 0; c < s.imputed.size(); ++c) {
        const auto low = s.data->censor_lows[c];
        s.imputed[c] = low > k ? low + categorical_log(s.rng, std::span<const double>(upper).subspan(low - k - 1))
                               : impute_one_log(log_theta, low, s.rng);
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("subpopulation '" + s.data->id + "': " + e.what());
    }
  }

  // log c_k(alpha + n_obs + n') - log c_k(alpha), cached by the imputed counts n'.
  const std::vector<double>& log_ratio(SubpopState& s) {
    const std::size_t J = hp_.alpha.size();
    std::vector<std::int64_t> extra(J, 0);
    for (auto u : s.imputed) ++extra[u];
    auto it = s.ratio_cache.find(extra);
    if (it != s.ratio_cache.end()) return it->second;
    if (s.ratio_cache.size() >= kRatioCacheLimit) s.ratio_cache.clear();
    auto total = s.data->counts;
    for (std::size_t j = 0; j < J; ++j) total[j] += extra[j];
    auto log_c = log_region_probs(hp_.alpha.plus(total), tau_).log_c;
    for (std::size_t k = 0; k < J; ++k) log_c[k] -= prior_log_c_[k];
    return s.ratio_cache.emplace(std::move(extra), std::move(log_c)).first->second;
  }

  const HyperParams& hp_;
  QuantileLevel tau_;
  bool augment_;
  Rng pi_rng_;
  std::vector<double> prior_log_c_;
  std::vector<double> log_pi_;
  std::vector<SubpopState> states_;
};

GibbsChain run_chain(HierarchicalSampler& sampler, const GibbsSchedule& schedule) {
  validate_schedule(schedule);
  GibbsChain chain;
  chain.draws.reserve(schedule.kept);
  const std::uint64_t total = schedule.burn_in + schedule.kept * schedule.thin;
  for (std::uint64_t t = 1; t <= total; ++t) {
    sampler.sweep();
    if (t > schedule.burn_in && (t - schedule.burn_in) % schedule.thin == 0) chain.draws.push_back(sampler.snapshot(t));
  }
  return chain;
}

}  // namespace

std::vector<double> GibbsChain::beta_pmf(std::size_t subpop, std::size_t support_size) const {
  std::vector<double> pmf(support_size, 0.0);
  if (draws.empty()) return pmf;
  for (const auto& d : draws) pmf.at(d.beta.at(subpop)) += 1.0;
  for (double& p : pmf) p /= static_cast<double>(draws.size());
  return pmf;
}

std::vector<double> GibbsChain::mixing_mean() const {
  if (draws.empty()) return {};
  std::vector<double> mean(draws.front().pi.pi.size(), 0.0);
  for (const auto& d : draws)
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += d.pi.pi[j];
  for (double& m : mean) m /= static_cast<double>(draws.size());
  return mean;
}

GibbsChain gibbs_hierarchical(std::span<const SubpopData> data, const HyperParams& hp, QuantileLevel tau,
                              const GibbsSchedule& schedule, std::uint64_t seed) {
  for (const auto& d : data)
    if (!d.censor_lows.empty())
      throw std::invalid_argument("gibbs_hierarchical: subpopulation '" + d.id +
                                  "' has censored observations; use gibbs_censored");
  validate_schedule(schedule);
  HierarchicalSampler sampler(data, hp, tau, seed, false);
  return run_chain(sampler, schedule);
}

GibbsChain gibbs_censored(std::span<const SubpopData> data, const HyperParams& hp, QuantileLevel tau,
                          const GibbsSchedule& schedule, std::uint64_t seed) {
  validate_schedule(schedule);
  HierarchicalSampler sampler(data, hp, tau, seed, true);
  return run_chain(sampler, schedule);
}

std::vector<std::size_t> impute_censored(std::span<const double> theta, std::span<const std::size_t> censor_lows,
                                         Rng& rng) {
  std::vector<std::size_t> out;
  out.reserve(censor_lows.size());
  for (auto low : censor_lows) {
    if (low >= theta.size()) throw std::invalid_argument("impute_censored: censoring index out of range");
    const auto tail = theta.subspan(low);
    double mass = 0.0;
    for (double t : tail) mass += t;
    if (!(mass >= kMinTailMass))
      throw std::runtime_error("impute_censored: tail mass above index " + std::to_string(low) + " is below 1e-300");
    out.push_back(low + categorical(rng, tail));
  }
  return out;
}

std::vector<std::size_t> bootstrap_censored(const SubpopData& data, const DirichletParams& alpha, QuantileLevel tau,
                                            std::size_t draws, Rng& rng) {
  const std::size_t J = alpha.size();
  validate_subpop(data, J);
  if (draws < 1) throw std::invalid_argument("bootstrap_censored: draws must be >= 1");
  const auto observed = alpha.plus(data.counts);
  std::vector<std::size_t> out;
  out.reserve(draws);
  while (out.size() < draws) {
    const auto log_star = log_dirichlet_variate(rng, observed.values());
    std::vector<double> a(observed.values().begin(), observed.values().end());
    for (auto low : data.censor_lows) a[impute_one_log(log_star, low, rng)] += 1.0;
    const auto theta = dirichlet_variate(rng, a);
    try {
      out.push_back(region_of(theta, tau).k);
    } catch (const NonUniqueQuantile&) {
      // measure-zero tie: redo the whole recipe
    }
  }
  return out;
}

NaiveDiagnostic naive_gibbs_diagnostic(const SubpopData& data, const DirichletParams& alpha, QuantileLevel tau,
                                       const GibbsSchedule& schedule, Rng& rng) {
  const std::size_t J = alpha.size();
  validate_subpop(data, J);
  validate_schedule(schedule);
  const auto observed = alpha.plus(data.counts);
  std::vector<std::size_t> u(data.censor_lows.begin(), data.censor_lows.end());

  NaiveDiagnostic out;
  const std::uint64_t total = schedule.burn_in + schedule.kept * schedule.thin;
  for (std::uint64_t t = 1; t <= total; ++t) {
    std::vector<double> a(observed.values().begin(), observed.values().end());
    for (auto v : u) a[v] += 1.0;
    std::size_t beta = 0;
    std::vector<double> log_theta;
    for (;;) {
      log_theta = log_dirichlet_variate(rng, a);
      std::vector<double> theta(J);
      for (std::size_t j = 0; j < J; ++j) theta[j] = std::exp(log_theta[j]);
      try {
        beta = region_of(theta, tau).k;
        break;
      } catch (const NonUniqueQuantile&) {
      }
    }
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = impute_one_log(log_theta, data.censor_lows[i], rng);
    if (t > schedule.burn_in && (t - schedule.burn_in) % schedule.thin == 0) {
      out.beta.push_back(beta);
      out.imputed.push_back(u);
    }
  }

  std::vector<double> series(out.beta.begin(), out.beta.end());
  out.beta_lag1 = lag1_autocorrelation(series);
  for (std::size_t i = 0; i < u.size(); ++i) {
    for (std::size_t m = 0; m < out.imputed.size(); ++m) series[m] = static_cast<double>(out.imputed[m][i]);
    out.imputed_lag1.push_back(lag1_autocorrelation(series));
  }
  return out;
}

std::optional<double> lag1_autocorrelation(std::span<const double> series) {
  if (series.size() < 3) return std::nullopt;
  double mean = 0.0;
  for (double x : series) mean += x;
  mean /= static_cast<double>(series.size());
  double c0 = 0.0;
  double c1 = 0.0;
  for (std::size_t t = 0; t < series.size(); ++t) {
    const double d = series[t] - mean;
    c0 += d * d;
    if (t + 1 < series.size()) c1 += d * (series[t + 1] - mean);
  }
  if (c0 == 0.0) return std::nullopt;
  return c1 / c0;
}

std::vector<std::optional<double>> imputed_lag1(const GibbsChain& chain, std::size_t subpop) {
  std::vector<std::optional<double>> out;
  if (chain.draws.empty()) return out;
  const std::size_t m = chain.draws.front().imputed.at(subpop).size();
  std::vector<double> series(chain.draws.size());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t t = 0; t < chain.draws.size(); ++t)
      series[t] = static_cast<double>(chain.draws[t].imputed[subpop][i]);
    out.push_back(lag1_autocorrelation(series));
  }
  return out;
}

std::optional<std::size_t> empirical_quantile_index(const CountVector& counts, QuantileLevel tau) {
  const std::int64_t n = counts.total();
  if (n == 0) return std::nullopt;
  const auto rank = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(tau.value() * static_cast<double>(n) - 1e-12)));
  std::int64_t cum = 0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    cum += counts[j];
    if (cum >= rank) return j;
  }
  return counts.size() - 1;
}

}  // namespace bnq

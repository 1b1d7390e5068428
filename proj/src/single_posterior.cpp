#include "bnq/single_posterior.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "bnq/numerics.hpp"

namespace bnq {

QuantileSpec::QuantileSpec(QuantileLevel tau, std::vector<double> prior_b) : tau_(tau), prior_(std::move(prior_b)) {
  if (prior_.size() < 2) throw std::invalid_argument("QuantileSpec: prior needs at least two atoms");
  double total = 0.0;
  for (double b : prior_) {
    if (!(b > 0.0) || !std::isfinite(b)) throw std::invalid_argument("QuantileSpec: prior mass must be positive on every atom");
    total += b;
  }
  if (std::abs(total - 1.0) > 1e-12)
    for (double& b : prior_) b /= total;
}

PosteriorBeta posterior_from_logs(std::span<const double> log_prior, std::span<const double> log_c_posterior,
                                  std::span<const double> log_c_prior) {
  const std::size_t J = log_prior.size();
  if (log_c_posterior.size() != J || log_c_prior.size() != J)
    throw std::invalid_argument("posterior_from_logs: size mismatch");
  std::vector<double> logs(J);
  for (std::size_t k = 0; k < J; ++k) logs[k] = log_prior[k] + log_c_posterior[k] - log_c_prior[k];
  const double norm = log_sum_exp(logs);
  if (!std::isfinite(norm)) throw std::runtime_error("posterior_from_logs: normalizing constant is not finite");
  PosteriorBeta post{std::vector<double>(J), norm};
  for (std::size_t k = 0; k < J; ++k) post.pmf[k] = std::exp(logs[k] - norm);
  return post;
}

PosteriorBeta posterior_beta(const QuantileSpec& spec, const DirichletParams& alpha, const CountVector& counts) {
  if (alpha.size() != spec.size() || counts.size() != spec.size())
    throw std::invalid_argument("posterior_beta: prior, alpha and counts must share the support");
  if (counts.total() == 0) {
    const auto prior = spec.prior();
    return PosteriorBeta{std::vector<double>(prior.begin(), prior.end()), 0.0};
  }
  const auto prior_c = log_region_probs(alpha, spec.tau());
  const auto post_c = log_region_probs(alpha.plus(counts), spec.tau());
  std::vector<double> log_b(spec.size());
  for (std::size_t k = 0; k < log_b.size(); ++k) log_b[k] = std::log(spec.prior()[k]);
  return posterior_from_logs(log_b, post_c.log_c, prior_c.log_c);
}

PosteriorSummary posterior_summary(std::span<const double> pmf, const Support& support,
                                   std::span<const double> levels) {
  if (pmf.size() != support.size()) throw std::invalid_argument("posterior_summary: pmf/support size mismatch");
  PosteriorSummary out;
  for (std::size_t k = 0; k < pmf.size(); ++k) out.mean += pmf[k] * support[k];
  out.quantiles.reserve(levels.size());
  for (double q : levels) {
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("posterior_summary: level outside [0,1]");
    double cdf = 0.0;
    std::size_t pick = pmf.size() - 1;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
      cdf += pmf[k];
      if (cdf >= q - 1e-12) {
        pick = k;
        break;
      }
    }
    out.quantiles.push_back(support[pick]);
  }
  return out;
}

PosteriorThetaSampler::PosteriorThetaSampler(const QuantileSpec& spec, const DirichletParams& alpha,
                                             const CountVector& counts, const Support& support)
    : tau_(spec.tau()), support_(support), posterior_alpha_(alpha.plus(counts)) {
  if (alpha.size() != spec.size() || support.size() != spec.size())
    throw std::invalid_argument("PosteriorThetaSampler: size mismatch");
  const auto prior_c = log_region_probs(alpha, tau_);
  log_accept_.resize(spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) log_accept_[k] = std::log(spec.prior()[k]) - prior_c.log_c[k];
  const double top = *std::max_element(log_accept_.begin(), log_accept_.end());
  for (double& v : log_accept_) v -= top;
}

double PosteriorThetaSampler::acceptance_probability(RegionIndex k) const { return std::exp(log_accept_.at(k.k)); }

ThetaDraw PosteriorThetaSampler::draw(Rng& rng) {
  for (;;) {
    auto theta = dirichlet_variate(rng, posterior_alpha_.values());
    ++stats_.proposals;
    RegionIndex k;
    try {
      k = region_of(theta, tau_);
    } catch (const NonUniqueQuantile&) {
      continue;
    }
    const double log_accept = log_accept_[k.k];
    if (log_accept >= 0.0 || std::log(uniform_open(rng)) < log_accept) {
      ++stats_.accepted;
      return ThetaDraw{SimplexPoint(std::move(theta)), support_[k.k], k};
    }
    if (stats_.proposals >= kStarvationWindow && stats_.rate() < kStarvationRate)
      throw std::runtime_error("sample_theta_posterior: acceptance rate " + std::to_string(stats_.rate()) +
                               " after " + std::to_string(stats_.proposals) +
                               " proposals; the prior on the quantile is far from c(alpha), use a flatter prior");
  }
}

ThetaPosteriorSample sample_theta_posterior(const QuantileSpec& spec, const DirichletParams& alpha,
                                            const CountVector& counts, const Support& support, Rng& rng) {
  PosteriorThetaSampler sampler(spec, alpha, counts, support);
  auto d = sampler.draw(rng);
  return ThetaPosteriorSample{std::move(d), sampler.stats()};
}

std::vector<double> cheap_kernel_weights(std::size_t J, QuantileLevel tau) {
  if (J < 2) throw std::invalid_argument("cheap_kernel_weights: need J >= 2");
  const double t = tau.value();
  std::vector<double> w(J);
  for (std::size_t k = 0; k < J; ++k) {
    const double r = static_cast<double>(k) / static_cast<double>(J - 1) - t;
    w[k] = std::exp(-static_cast<double>(J) * r * r / (2.0 * t * (1.0 - t)));
  }
  return w;
}

CheapPosterior::CheapPosterior(std::span<const double> sorted_data, const QuantileSpec& spec)
    : data_(sorted_data.begin(), sorted_data.end()) {
  const std::size_t J = data_.size();
  if (J < 2) throw std::invalid_argument("cheap_posterior: need at least two data points");
  if (spec.size() != J) throw std::invalid_argument("cheap_posterior: prior must be aligned to the data points");
  for (std::size_t j = 1; j < J; ++j) {
    if (data_[j] == data_[j - 1]) throw std::invalid_argument("cheap_posterior: data contain ties");
    if (data_[j] < data_[j - 1]) throw std::invalid_argument("cheap_posterior: data must be sorted");
  }
  weights_ = cheap_kernel_weights(J, spec.tau());
  double total = 0.0;
  for (std::size_t k = 0; k < J; ++k) {
    weights_[k] *= spec.prior()[k];
    total += weights_[k];
  }
  for (double& w : weights_) w /= total;
  for (std::size_t k = 0; k < J; ++k) mean_ += weights_[k] * data_[k];
  for (std::size_t k = 0; k < J; ++k) variance_ += weights_[k] * (data_[k] - mean_) * (data_[k] - mean_);
}

double CheapPosterior::cdf(double x) const {
  double f = 0.0;
  for (std::size_t k = 0; k < data_.size() && data_[k] <= x; ++k) f += weights_[k];
  return f;
}

}  // namespace bnq

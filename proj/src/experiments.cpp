#include "bnq/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "bnq/numerics.hpp"
#include "bnq/single_posterior.hpp"

namespace bnq {

namespace {

std::vector<double> normalized_from_logs(std::vector<double> logs, double mass) {
  const double norm = log_sum_exp(logs);
  for (double& v : logs) v = mass * std::exp(v - norm);
  return logs;
}

double lower_quantile_sorted(std::span<const double> sorted, double q) {
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-12));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

}  // namespace

std::vector<double> build_discrete_prior(const Support& support, double center, double decay) {
  if (!(decay > 0.0)) throw std::invalid_argument("build_discrete_prior: decay must be positive");
  std::vector<double> logs(support.size());
  for (std::size_t k = 0; k < logs.size(); ++k) logs[k] = -decay * std::abs(support[k] - center);
  return normalized_from_logs(std::move(logs), 1.0);
}

CricketPriors build_cricket_priors(const Support& support, QuantileLevel tau, CricketVariant variant,
                                   const CricketPriorConfig& config) {
  const std::size_t J = support.size();
  const double base = 1.0 / static_cast<double>(J);
  std::vector<double> alpha_logs(J);
  for (std::size_t j = 0; j < J; ++j) alpha_logs[j] = -config.alpha_decay * support[j];
  auto alpha = normalized_from_logs(std::move(alpha_logs), config.alpha_mass);
  for (double& a : alpha) a += base;

  double center = config.lambda_center;
  if (variant == CricketVariant::kPerTau) center += config.lambda_scale * normal_quantile(tau.value());
  std::vector<double> lambda_logs(J);
  for (std::size_t j = 0; j < J; ++j) {
    const double z = (support[j] - center) / config.lambda_scale;
    lambda_logs[j] = -0.5 * z * z;
  }
  auto lambda = normalized_from_logs(std::move(lambda_logs), config.lambda_mass);
  for (double& l : lambda) l += base;
  return CricketPriors{DirichletParams(std::move(alpha)), std::move(lambda)};
}

double sample_quantile(std::span<const double> data, QuantileLevel tau) {
  if (data.empty()) throw std::invalid_argument("sample_quantile: empty sample");
  std::vector<double> v(data.begin(), data.end());
  auto rank = static_cast<std::size_t>(std::ceil(tau.value() * static_cast<double>(v.size()) - 1e-12));
  rank = std::clamp<std::size_t>(rank, 1, v.size());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(rank - 1), v.end());
  return v[rank - 1];
}

double silverman_bandwidth(std::span<const double> data) {
  const std::size_t n = data.size();
  if (n < 2) throw std::invalid_argument("silverman_bandwidth: need n >= 2");
  double mean = 0.0;
  for (double x : data) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : data) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = lower_quantile_sorted(sorted, 0.75) - lower_quantile_sorted(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  // A zero IQR with positive sd would zero the bandwidth; fall back to sd.
  if (!(spread > 0.0)) spread = sd;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

double gaussian_kde(std::span<const double> data, double x, double bandwidth) {
  double s = 0.0;
  for (double d : data) {
    const double z = (x - d) / bandwidth;
    s += std::exp(-0.5 * z * z);
  }
  return s / (static_cast<double>(data.size()) * bandwidth * std::sqrt(2.0 * M_PI));
}

Interval clt_interval(std::span<const double> data, QuantileLevel tau, double level) {
  if (data.size() < 2) throw std::invalid_argument("clt_interval: need n >= 2");
  const double h = silverman_bandwidth(data);
  if (!(h > 0.0)) throw std::domain_error("clt_interval: zero bandwidth (constant data)");
  const double point = sample_quantile(data, tau);
  const double f = gaussian_kde(data, point, h);
  const double t = tau.value();
  const double se = std::sqrt(t * (1.0 - t)) / (f * std::sqrt(static_cast<double>(data.size())));
  const double z = normal_quantile(0.5 + level / 2.0);
  return {point, point - z * se, point + z * se};
}

Interval bootstrap_interval(std::span<const double> data, QuantileLevel tau, std::size_t resamples, double level,
                            Rng& rng) {
  if (resamples < 100) throw std::invalid_argument("bootstrap_interval: need at least 100 resamples");
  if (data.empty()) throw std::invalid_argument("bootstrap_interval: empty sample");
  const std::size_t n = data.size();
  auto rank = static_cast<std::size_t>(std::ceil(tau.value() * static_cast<double>(n) - 1e-12));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::vector<double> buffer(n);
  std::vector<double> stats(resamples);
  for (std::size_t b = 0; b < resamples; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      auto idx = static_cast<std::size_t>(uniform_open(rng) * static_cast<double>(n));
      buffer[i] = data[std::min(idx, n - 1)];
    }
    std::nth_element(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(rank - 1), buffer.end());
    stats[b] = buffer[rank - 1];
  }
  double mean = 0.0;
  for (double s : stats) mean += s;
  mean /= static_cast<double>(resamples);
  std::sort(stats.begin(), stats.end());
  const double tail = (1.0 - level) / 2.0;
  return {mean, lower_quantile_sorted(stats, tail), lower_quantile_sorted(stats, 1.0 - tail)};
}

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::kClt:
      return "CLT";
    case Estimator::kBoot:
      return "Boot";
    case Estimator::kDiscrete:
      return "Discrete";
    case Estimator::kData:
      return "Data";
  }
  return "?";
}

Estimator estimator_from_string(const std::string& name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "clt") return Estimator::kClt;
  if (lower == "boot" || lower == "bootstrap") return Estimator::kBoot;
  if (lower == "discrete") return Estimator::kDiscrete;
  if (lower == "data") return Estimator::kData;
  throw std::invalid_argument("unknown estimator '" + name + "'");
}

std::optional<double> preset_prior_offset(double tau) {
  if (std::abs(tau - 0.5) < 1e-12) return 2.333;
  if (std::abs(tau - 0.9) < 1e-12) return 6.032;
  return std::nullopt;
}

double neg_log_chisq_quantile(double tau) {
  const double z = normal_quantile(0.5 + (1.0 - tau) / 2.0);  // chi^2_1 quantile at 1 - tau is z^2
  return -std::log(z * z);
}

double neg_log_chisq_density(double x) {
  return std::exp(-0.5 * x - 0.5 * std::exp(-x)) / std::sqrt(2.0 * M_PI);
}

namespace {

struct Accumulator {
  std::vector<double> estimates;
  std::size_t covered = 0;
  std::size_t failures = 0;

  void add(const Interval& iv, double truth) {
    estimates.push_back(iv.point);
    if (iv.lo <= truth && truth <= iv.hi) ++covered;
  }

  McRow finish(Estimator e, std::size_t n, double tau, double truth) const {
    McRow row{e, n, tau, 0.0, 0.0, 0.0, 0.0, failures};
    if (estimates.empty()) return row;
    const auto count = static_cast<double>(estimates.size());
    double mean = 0.0;
    for (double v : estimates) mean += v;
    mean /= count;
    double var = 0.0;
    double mse = 0.0;
    for (double v : estimates) {
      var += (v - mean) * (v - mean);
      mse += (v - truth) * (v - truth);
    }
    var /= count;
    mse /= count;
    row.bias = mean - truth;
    row.sqrt_n_se = std::sqrt(var) * std::sqrt(static_cast<double>(n));
    row.rmse = std::sqrt(mse);
    row.coverage = static_cast<double>(covered) / count;
    return row;
  }
};

Interval bayes_interval(std::span<const double> pmf, const Support& support, double level) {
  const double tail = (1.0 - level) / 2.0;
  const std::vector<double> levels{tail, 1.0 - tail};
  const auto s = posterior_summary(pmf, support, levels);
  return {s.mean, s.quantiles[0], s.quantiles[1]};
}

}  // namespace

std::vector<McRow> run_monte_carlo(const McConfig& config) {
  if (config.replications < 1) throw std::invalid_argument("run_monte_carlo: need at least one replication");
  if (config.estimators.empty()) throw std::invalid_argument("run_monte_carlo: no estimators requested");
  if (config.n < 2) throw std::invalid_argument("run_monte_carlo: sample size must be >= 2");
  const QuantileLevel tau(config.tau);
  const double truth = neg_log_chisq_quantile(config.tau);
  const auto offset = config.prior_offset ? config.prior_offset : preset_prior_offset(config.tau);
  const auto wants = [&](Estimator e) {
    return std::find(config.estimators.begin(), config.estimators.end(), e) != config.estimators.end();
  };
  if ((wants(Estimator::kDiscrete) || wants(Estimator::kData)) && !offset)
    throw std::invalid_argument("run_monte_carlo: no preset prior offset for tau; set prior_offset explicitly");
  const double center = truth + offset.value_or(0.0);

  // Discrete estimator: fixed grid, alpha = 1/J, prior and log c(alpha) shared by all replications.
  std::optional<Support> grid;
  std::optional<DirichletParams> grid_alpha;
  std::vector<double> grid_log_prior;
  std::vector<double> grid_log_c;
  if (wants(Estimator::kDiscrete)) {
    const std::size_t J = config.grid_size;
    std::vector<double> s(J);
    for (std::size_t j = 0; j < J; ++j)
      s[j] = config.grid_lo + (config.grid_hi - config.grid_lo) * static_cast<double>(j) / static_cast<double>(J - 1);
    grid.emplace(std::move(s));
    grid_alpha.emplace(DirichletParams::uniform(J, 1.0 / static_cast<double>(J)));
    for (double b : build_discrete_prior(*grid, center, config.prior_decay)) grid_log_prior.push_back(std::log(b));
    grid_log_c = log_region_probs(*grid_alpha, tau).log_c;
  }

  std::map<Estimator, Accumulator> acc;
  for (auto e : config.estimators) acc[e];
  std::vector<double> z(config.n);
  for (std::size_t r = 0; r < config.replications; ++r) {
    Rng rng = make_stream(config.seed, 2 * r);
    for (double& x : z) {
      const double g = standard_normal(rng);
      x = -std::log(g * g);
    }
    for (auto e : config.estimators) {
      auto& a = acc[e];
      try {
        switch (e) {
          case Estimator::kClt:
            a.add(clt_interval(z, tau, config.level), truth);
            break;
          case Estimator::kBoot: {
            Rng boot_rng = make_stream(config.seed, 2 * r + 1);
            a.add(bootstrap_interval(z, tau, config.bootstrap_resamples, config.level, boot_rng), truth);
            break;
          }
          case Estimator::kDiscrete: {
            CountVector counts(grid->size());
            for (double x : z) ++counts[grid->nearest(x)];
            const auto post_c = log_region_probs(grid_alpha->plus(counts), tau);
            const auto post = posterior_from_logs(grid_log_prior, post_c.log_c, grid_log_c);
            a.add(bayes_interval(post.pmf, *grid, config.level), truth);
            break;
          }
          case Estimator::kData: {
            std::vector<double> sorted(z);
            std::sort(sorted.begin(), sorted.end());
            std::vector<double> values;
            std::vector<std::int64_t> n;
            for (double x : sorted) {
              if (values.empty() || x != values.back()) {
                values.push_back(x);
                n.push_back(0);
              }
              ++n.back();
            }
            const Support support(values);
            const auto J = support.size();
            const auto alpha = DirichletParams::uniform(J, 1.0 / static_cast<double>(J));
            const QuantileSpec spec(tau, build_discrete_prior(support, center, config.prior_decay));
            const auto post = posterior_beta(spec, alpha, CountVector(std::move(n)));
            a.add(bayes_interval(post.pmf, support, config.level), truth);
            break;
          }
        }
      } catch (const std::exception&) {
        ++a.failures;
      }
    }
  }

  std::vector<McRow> rows;
  for (auto e : config.estimators) rows.push_back(acc[e].finish(e, config.n, config.tau, truth));
  return rows;
}

}  // namespace bnq

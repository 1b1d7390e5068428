#include "bnq/random.hpp"

#include <cmath>
#include <stdexcept>

#include "bnq/numerics.hpp"

namespace bnq {

namespace {
std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed ^ (0xD1B54A32D192ED03ULL * (stream + 1));
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(state)), static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state)), static_cast<std::uint32_t>(splitmix64(state))};
  return Rng(seq);
}

std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

double uniform_open(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double standard_normal(Rng& rng) {
  // Box-Muller without caching so each call consumes a fixed amount of the stream.
  const double u1 = uniform_open(rng);
  const double u2 = uniform_open(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double exponential(Rng& rng) { return -std::log(uniform_open(rng)); }

double log_gamma_variate(Rng& rng, double shape) {
  if (!(shape > 0.0) || !std::isfinite(shape)) throw std::domain_error("gamma variate: shape must be positive");
  if (shape < 1.0) {
    // G(a) = G(a+1) * U^(1/a)
    return log_gamma_variate(rng, shape + 1.0) + std::log(uniform_open(rng)) / shape;
  }
  // Marsaglia & Tsang (2000).
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = standard_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_open(rng);
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return std::log(d) + std::log(v);
  }
}

double beta_variate(Rng& rng, double a, double b) {
  const double la = log_gamma_variate(rng, a);
  const double lb = log_gamma_variate(rng, b);
  // a / (a + b) computed as 1 / (1 + exp(lb - la))
  return 1.0 / (1.0 + std::exp(lb - la));
}

std::vector<double> log_dirichlet_variate(Rng& rng, std::span<const double> alpha) {
  std::vector<double> logs(alpha.size());
  for (std::size_t j = 0; j < alpha.size(); ++j) logs[j] = log_gamma_variate(rng, alpha[j]);
  const double norm = log_sum_exp(logs);
  for (double& x : logs) x -= norm;
  return logs;
}

std::vector<double> dirichlet_variate(Rng& rng, std::span<const double> alpha) {
  auto v = log_dirichlet_variate(rng, alpha);
  for (double& x : v) x = std::exp(x);
  return v;
}

std::size_t categorical(Rng& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0) || !std::isfinite(total)) throw std::domain_error("categorical: weights must have positive finite sum");
  double u = uniform_open(rng) * total;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    u -= weights[j];
    if (u < 0.0) return j;
  }
  // Rounding left a sliver; return the last index with positive weight.
  for (std::size_t j = weights.size(); j-- > 0;)
    if (weights[j] > 0.0) return j;
  return weights.size() - 1;
}

std::size_t categorical_log(Rng& rng, std::span<const double> log_weights) {
  const double norm = log_sum_exp(log_weights);
  std::vector<double> w(log_weights.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = std::exp(log_weights[j] - norm);
  return categorical(rng, w);
}

}  // namespace bnq

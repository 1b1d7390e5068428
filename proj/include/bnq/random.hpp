#pragma once

// Seeded generator streams and the elementary variates used by the samplers.
// Gamma variates are produced on the log scale so Dirichlet draws with very
// small concentrations (1/J for J in the thousands) do not underflow to 0/0.

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace bnq {

using Rng = std::mt19937_64;

/// Independent stream `stream` derived from a master seed (splitmix64 mixing).
Rng make_stream(std::uint64_t seed, std::uint64_t stream);
/// FNV-1a; stable across platforms, used to key per-subpopulation streams by label.
std::uint64_t stable_hash(std::string_view s);

/// Uniform on the open interval (0, 1).
double uniform_open(Rng& rng);
double standard_normal(Rng& rng);
double exponential(Rng& rng);

/// log of a Gamma(shape, 1) variate.
double log_gamma_variate(Rng& rng, double shape);
double beta_variate(Rng& rng, double a, double b);
std::vector<double> dirichlet_variate(Rng& rng, std::span<const double> alpha);
/// Dirichlet draw returned as log probabilities (normalized on the log scale).
std::vector<double> log_dirichlet_variate(Rng& rng, std::span<const double> alpha);
/// Index drawn with probability proportional to weights (need not be normalized).
std::size_t categorical(Rng& rng, std::span<const double> weights);
/// Same, with weights given as logs.
std::size_t categorical_log(Rng& rng, std::span<const double> log_weights);

}  // namespace bnq

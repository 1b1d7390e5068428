#pragma once

// Exact samplers for Beta laws truncated to an interval and for the Dirichlet
// law truncated to a quantile region A_k.

#include <cstdint>
#include <vector>

#include "bnq/dirichlet_regions.hpp"
#include "bnq/quantile_core.hpp"
#include "bnq/random.hpp"

namespace bnq {

/// Beta(a, b) restricted to (lower, upper), 0 <= lower < upper <= 1.
struct TruncatedBetaParams {
  double a;
  double b;
  double lower = 0.0;
  double upper = 1.0;

  void validate() const;
};

// Four rejection schemes, named by which shape parameters exceed one.
// Shapes equal to one are treated as "small".
enum class TruncatedBetaCase {
  kUntruncated,
  kBothSmall,   // a <= 1, b <= 1, upper < 1: log-scale power proposal
  kSmallLarge,  // a <= 1, b > 1, lower > 0: (1 - x)^(b-1) proposal
  kLargeSmall,  // a > 1, b <= 1: naive filter or (1 - x)^(b-1) proposal
  kBothLarge,   // a > 1, b > 1, mean < upper: naive filter or exponential tangent proposal
};

struct TruncatedBetaRoute {
  TruncatedBetaCase which;
  /// Sample 1 - X with X ~ Beta(b, a) truncated to (1 - upper, 1 - lower).
  bool reflected;
  /// Case-local parameters after the reflection.
  TruncatedBetaParams params;
};

TruncatedBetaRoute route_truncated_beta(const TruncatedBetaParams& p);

/// For kLargeSmall and kBothLarge: whether plain Beta draws filtered to the
/// interval are used instead of the tailored proposal.
bool uses_naive_filter(const TruncatedBetaRoute& route);

inline constexpr std::uint64_t kMaxRejectionIterations = 1000000;

double sample_truncated_beta(const TruncatedBetaParams& p, Rng& rng);

struct TruncatedDirichletSpec {
  DirichletParams alpha;
  RegionIndex region;
  QuantileLevel tau;
};

/// Regions with prior probability below this are refused.
inline constexpr double kMinRegionProb = 1e-12;

/// Dirichlet(alpha) conditioned on A_k for J = 3.
std::vector<double> sample_constrained_dirichlet3(const TruncatedDirichletSpec& spec, Rng& rng);

/// Dirichlet(alpha) conditioned on A_k for any J >= 2, by aggregation to three blocks.
std::vector<double> sample_constrained_dirichlet(const TruncatedDirichletSpec& spec, Rng& rng);

}  // namespace bnq

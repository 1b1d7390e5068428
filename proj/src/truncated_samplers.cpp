#include "bnq/truncated_samplers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "bnq/numerics.hpp"

namespace bnq {

namespace {

[[noreturn]] void starve(const char* what, const TruncatedBetaParams& p) {
  throw std::runtime_error(std::string("truncated beta sampler starved in ") + what + " (a=" + std::to_string(p.a) +
                           ", b=" + std::to_string(p.b) + ", L=" + std::to_string(p.lower) +
                           ", U=" + std::to_string(p.upper) + ")");
}

double naive_filter(const TruncatedBetaParams& p, Rng& rng, const char* what) {
  for (std::uint64_t i = 0; i < kMaxRejectionIterations; ++i) {
    const double x = beta_variate(rng, p.a, p.b);
    if (p.lower <= x && x <= p.upper) return x;
  }
  starve(what, p);
}

// Draw from density proportional to (1 - x)^(b-1) on (L, U) by inversion.
double one_minus_power_proposal(const TruncatedBetaParams& p, double u) {
  const double q = std::exp(p.b * (std::log1p(-p.upper) - std::log1p(-p.lower)));  // ((1-U)/(1-L))^b
  const double one_minus = (1.0 - p.lower) * std::pow(1.0 - (1.0 - q) * u, 1.0 / p.b);
  return 1.0 - one_minus;
}

double both_small(const TruncatedBetaParams& p, Rng& rng) {
  // z = log x with proposal density proportional to e^{a z} on (log L, log U).
  const double r = p.lower > 0.0 ? std::exp(p.a * (std::log(p.lower) - std::log(p.upper))) : 0.0;  // (L/U)^a
  const double log1m_upper = std::log1p(-p.upper);
  for (std::uint64_t i = 0; i < kMaxRejectionIterations; ++i) {
    const double z = std::log(p.upper) + std::log(r + (1.0 - r) * uniform_open(rng)) / p.a;
    const double x = std::exp(z);
    const double log_accept = (p.b - 1.0) * (std::log1p(-x) - log1m_upper);
    if (std::log(uniform_open(rng)) <= log_accept) return x;
  }
  starve("case a<=1, b<=1", p);
}

double small_large(const TruncatedBetaParams& p, Rng& rng) {
  const double log_lower = std::log(p.lower);
  for (std::uint64_t i = 0; i < kMaxRejectionIterations; ++i) {
    const double x = one_minus_power_proposal(p, uniform_open(rng));
    const double log_accept = (p.a - 1.0) * (std::log(x) - log_lower);
    if (std::log(uniform_open(rng)) <= log_accept) return x;
  }
  starve("case a<=1, b>1", p);
}

double large_small_log_ratio(const TruncatedBetaParams& p) {
  // log of b B(a,b) / (U^(a-1) [(1-L)^b - (1-U)^b])
  const double q = std::exp(p.b * (std::log1p(-p.upper) - std::log1p(-p.lower)));
  const double log_mass = p.b * std::log1p(-p.lower) + std::log1p(-q);
  return std::log(p.b) + log_beta(p.a, p.b) - ((p.a - 1.0) * std::log(p.upper) + log_mass);
}

double large_small(const TruncatedBetaParams& p, Rng& rng) {
  if (large_small_log_ratio(p) <= 0.0) return naive_filter(p, rng, "case a>1, b<=1 (filter)");
  const double log_upper = std::log(p.upper);
  for (std::uint64_t i = 0; i < kMaxRejectionIterations; ++i) {
    const double x = one_minus_power_proposal(p, uniform_open(rng));
    const double log_accept = (p.a - 1.0) * (std::log(x) - log_upper);
    if (std::log(uniform_open(rng)) <= log_accept) return x;
  }
  starve("case a>1, b<=1", p);
}

double both_large(const TruncatedBetaParams& p, Rng& rng) {
  const double mean = p.a / (p.a + p.b);
  if (p.lower < mean) return naive_filter(p, rng, "case a>1, b>1 (filter)");
  const double L = p.lower;
  const double width = p.upper - L;
  // Negative slope of the log density at L; the tangent line bounds the concave log density.
  const double rate = ((p.b - 1.0) * L - (p.a - 1.0) * (1.0 - L)) / (L * (1.0 - L));
  const double log1m_lower = std::log1p(-L);
  for (std::uint64_t i = 0; i < kMaxRejectionIterations; ++i) {
    const double u = uniform_open(rng);
    double x;
    if (rate == 0.0) {
      x = L + width * u;
    } else {
      const double mass = -std::expm1(-rate * width);  // 1 - e^{-rate (U - L)}
      x = L - std::log1p(-mass * u) / rate;
    }
    if (!(x > L && x < p.upper)) continue;
    const double log_accept = (p.a - 1.0) * (std::log(x) - std::log(L)) +
                              (p.b - 1.0) * (std::log1p(-x) - log1m_lower) + rate * (x - L);
    if (std::log(uniform_open(rng)) <= log_accept) return x;
  }
  starve("case a>1, b>1", p);
}

}  // namespace

void TruncatedBetaParams::validate() const {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw std::invalid_argument("truncated beta: shapes must be positive and finite");
  if (!(lower >= 0.0 && lower < upper && upper <= 1.0))
    throw std::invalid_argument("truncated beta: need 0 <= L < U <= 1 (L=" + std::to_string(lower) +
                                ", U=" + std::to_string(upper) + ")");
}

TruncatedBetaRoute route_truncated_beta(const TruncatedBetaParams& p) {
  p.validate();
  const TruncatedBetaParams mirrored{p.b, p.a, 1.0 - p.upper, 1.0 - p.lower};
  if (p.lower == 0.0 && p.upper == 1.0) return {TruncatedBetaCase::kUntruncated, false, p};
  const bool a_small = p.a <= 1.0;
  const bool b_small = p.b <= 1.0;
  if (a_small && b_small) {
    if (p.upper < 1.0) return {TruncatedBetaCase::kBothSmall, false, p};
    return {TruncatedBetaCase::kBothSmall, true, mirrored};
  }
  if (a_small) {
    if (p.lower > 0.0) return {TruncatedBetaCase::kSmallLarge, false, p};
    return {TruncatedBetaCase::kLargeSmall, true, mirrored};
  }
  if (b_small) return {TruncatedBetaCase::kLargeSmall, false, p};
  if (p.a / (p.a + p.b) < p.upper) return {TruncatedBetaCase::kBothLarge, false, p};
  return {TruncatedBetaCase::kBothLarge, true, mirrored};
}

bool uses_naive_filter(const TruncatedBetaRoute& route) {
  const auto& p = route.params;
  switch (route.which) {
    case TruncatedBetaCase::kLargeSmall:
      return large_small_log_ratio(p) <= 0.0;
    case TruncatedBetaCase::kBothLarge:
      return p.lower < p.a / (p.a + p.b);
    default:
      return false;
  }
}

double sample_truncated_beta(const TruncatedBetaParams& p, Rng& rng) {
  const auto route = route_truncated_beta(p);
  double x = 0.0;
  switch (route.which) {
    case TruncatedBetaCase::kUntruncated:
      x = beta_variate(rng, route.params.a, route.params.b);
      break;
    case TruncatedBetaCase::kBothSmall:
      x = both_small(route.params, rng);
      break;
    case TruncatedBetaCase::kSmallLarge:
      x = small_large(route.params, rng);
      break;
    case TruncatedBetaCase::kLargeSmall:
      x = large_small(route.params, rng);
      break;
    case TruncatedBetaCase::kBothLarge:
      x = both_large(route.params, rng);
      break;
  }
  return route.reflected ? 1.0 - x : x;
}

namespace {

constexpr int kMembershipRetries = 1000;

// log h(t) = log Pr(theta_2 / (theta_2 + theta_3) > (tau - t) / (1 - t)), increasing in t.
double log_middle_weight(double t, double a2, double a3, double tau) {
  const double cut = (tau - t) / (1.0 - t);
  if (!(cut > 0.0)) return 0.0;
  if (!(cut < 1.0)) return -INFINITY;
  return log_incomplete_beta(cut, a2, a3).log_upper;
}

// log Pr(lo < X < hi) for X ~ Beta(a, b), differencing whichever tail is smaller.
double log_beta_interval(double lo, double hi, double a, double b) {
  const auto L = log_incomplete_beta(lo, a, b);
  const auto H = log_incomplete_beta(hi, a, b);
  if (H.log_lower < std::log(0.5)) return H.log_lower + log1m_exp(std::min(L.log_lower - H.log_lower, 0.0));
  return L.log_upper + log1m_exp(std::min(H.log_upper - L.log_upper, 0.0));
}

// theta_1 from f(theta_1 | A_2) proportional to f_B(t; a1, a2 + a3) h(t) on (0, tau).
// When the middle region is not too rare relative to Pr(theta_1 < tau), plain
// rejection from the truncated Beta with acceptance h(t) (itself a probability).
// Otherwise a piecewise envelope: h is monotone, so on each cell [x_i, x_{i+1}]
// it is bounded by h(x_{i+1}); cells are refined until that bound is tight.
double middle_marginal(double a1, double a2, double a3, double tau, Rng& rng) {
  const auto c = log_region_probs(DirichletParams({a1, a2, a3}), QuantileLevel(tau));
  const double log_p1 = log_incomplete_beta(tau, a1, a2 + a3).log_lower;
  if (c.log_c[1] - log_p1 > std::log(0.1)) {
    for (std::uint64_t i = 0; i < kMaxRejectionIterations; ++i) {
      const double t1 = sample_truncated_beta({a1, a2 + a3, 0.0, tau}, rng);
      if (std::log(uniform_open(rng)) <= log_middle_weight(t1, a2, a3, tau)) return t1;
    }
    throw std::runtime_error("constrained Dirichlet: middle-region marginal sampler starved");
  }

  std::vector<double> x;
  for (int i = 0; i <= 16; ++i) x.push_back(tau * i / 16.0);
  for (int m = 5; m <= 50; ++m) x.push_back(tau * (1.0 - std::ldexp(1.0, -m)));
  std::sort(x.begin(), x.end());
  x.erase(std::unique(x.begin(), x.end()), x.end());
  std::vector<double> log_h(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) log_h[i] = log_middle_weight(x[i], a2, a3, tau);
  constexpr std::size_t kMaxCells = 4000;
  for (int pass = 0; pass < 30 && x.size() < kMaxCells; ++pass) {
    std::vector<double> nx{x[0]};
    std::vector<double> nh{log_h[0]};
    bool split = false;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
      if (log_h[i + 1] - log_h[i] > 0.7 && x.size() + nx.size() < kMaxCells) {
        const double mid = 0.5 * (x[i] + x[i + 1]);
        if (mid > x[i] && mid < x[i + 1]) {
          nx.push_back(mid);
          nh.push_back(log_middle_weight(mid, a2, a3, tau));
          split = true;
        }
      }
      nx.push_back(x[i + 1]);
      nh.push_back(log_h[i + 1]);
    }
    x = std::move(nx);
    log_h = std::move(nh);
    if (!split) break;
  }
  std::vector<double> log_w(x.size() - 1);
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    log_w[i] = log_beta_interval(x[i], x[i + 1], a1, a2 + a3) + log_h[i + 1];
  for (std::uint64_t i = 0; i < kMaxRejectionIterations; ++i) {
    const auto cell = categorical_log(rng, log_w);
    const double t1 = sample_truncated_beta({a1, a2 + a3, x[cell], x[cell + 1]}, rng);
    if (std::log(uniform_open(rng)) <= log_middle_weight(t1, a2, a3, tau) - log_h[cell + 1]) return t1;
  }
  throw std::runtime_error("constrained Dirichlet: middle-region envelope sampler starved");
}

std::array<double, 3> draw_region3(double a1, double a2, double a3, std::size_t k, double tau, Rng& rng) {
  switch (k) {
    case 0: {
      const double t1 = sample_truncated_beta({a1, a2 + a3, tau, 1.0}, rng);
      const double y = beta_variate(rng, a2, a3);
      return {t1, (1.0 - t1) * y, (1.0 - t1) * (1.0 - y)};
    }
    case 1: {
      const double t1 = middle_marginal(a1, a2, a3, tau, rng);
      const double cut = (tau - t1) / (1.0 - t1);
      const double y = sample_truncated_beta({a2, a3, cut, 1.0}, rng);
      return {t1, (1.0 - t1) * y, (1.0 - t1) * (1.0 - y)};
    }
    default: {
      const double t3 = sample_truncated_beta({a3, a1 + a2, 1.0 - tau, 1.0}, rng);
      const double y = beta_variate(rng, a1, a2);
      return {(1.0 - t3) * y, (1.0 - t3) * (1.0 - y), t3};
    }
  }
}

void require_region_mass(const DirichletParams& alpha, QuantileLevel tau, RegionIndex region) {
  const auto probs = log_region_probs(alpha, tau);
  if (probs.log_c[region.k] < std::log(kMinRegionProb))
    throw std::runtime_error("constrained Dirichlet: region " + std::to_string(region.k) +
                             " has prior probability " + std::to_string(std::exp(probs.log_c[region.k])) +
                             " below 1e-12");
}

std::vector<double> scaled_dirichlet(Rng& rng, std::span<const double> alpha, double scale) {
  auto v = dirichlet_variate(rng, alpha);
  for (double& x : v) x *= scale;
  return v;
}

}  // namespace

std::vector<double> sample_constrained_dirichlet3(const TruncatedDirichletSpec& spec, Rng& rng) {
  if (spec.alpha.size() != 3) throw std::invalid_argument("sample_constrained_dirichlet3: need J = 3");
  if (spec.region.k >= 3) throw std::invalid_argument("sample_constrained_dirichlet3: region out of range");
  require_region_mass(spec.alpha, spec.tau, spec.region);
  for (int attempt = 0; attempt < kMembershipRetries; ++attempt) {
    const auto t = draw_region3(spec.alpha[0], spec.alpha[1], spec.alpha[2], spec.region.k, spec.tau.value(), rng);
    std::vector<double> theta(t.begin(), t.end());
    if (in_region(theta, spec.tau, spec.region)) return theta;
  }
  throw std::runtime_error("sample_constrained_dirichlet3: draws repeatedly fell on the region boundary");
}

std::vector<double> sample_constrained_dirichlet(const TruncatedDirichletSpec& spec, Rng& rng) {
  const std::size_t J = spec.alpha.size();
  const std::size_t k = spec.region.k;
  if (k >= J) throw std::invalid_argument("sample_constrained_dirichlet: region out of range");
  if (J == 3) return sample_constrained_dirichlet3(spec, rng);
  const auto a = spec.alpha.values();
  const double tau = spec.tau.value();

  if (J == 2) {
    require_region_mass(spec.alpha, spec.tau, spec.region);
    for (int attempt = 0; attempt < kMembershipRetries; ++attempt) {
      const double t1 = k == 0 ? sample_truncated_beta({a[0], a[1], tau, 1.0}, rng)
                               : sample_truncated_beta({a[0], a[1], 0.0, tau}, rng);
      std::vector<double> theta{t1, 1.0 - t1};
      if (in_region(theta, spec.tau, spec.region)) return theta;
    }
    throw std::runtime_error("sample_constrained_dirichlet: draws repeatedly fell on the region boundary");
  }

  const auto block_sum = [&](std::size_t from, std::size_t to) {
    return std::accumulate(a.begin() + static_cast<std::ptrdiff_t>(from), a.begin() + static_cast<std::ptrdiff_t>(to), 0.0);
  };
  const auto sub = [&](std::size_t from, std::size_t to) {
    return std::span<const double>(a.begin() + static_cast<std::ptrdiff_t>(from), to - from);
  };

  // Aggregate to three blocks; the aggregation property of the Dirichlet
  // makes the block sums Dirichlet and the within-block shares independent.
  std::array<double, 3> agg{};
  std::size_t region3 = 1;
  if (k == 0) {
    agg = {a[0], block_sum(1, J - 1), a[J - 1]};
    region3 = 0;
  } else if (k == J - 1) {
    agg = {block_sum(0, J - 2), a[J - 2], a[J - 1]};
    region3 = 2;
  } else {
    agg = {block_sum(0, k), a[k], block_sum(k + 1, J)};
    region3 = 1;
  }
  const TruncatedDirichletSpec spec3{DirichletParams({agg[0], agg[1], agg[2]}), RegionIndex{region3}, spec.tau};
  require_region_mass(spec3.alpha, spec.tau, spec3.region);

  for (int attempt = 0; attempt < kMembershipRetries; ++attempt) {
    const auto t = draw_region3(agg[0], agg[1], agg[2], region3, tau, rng);
    std::vector<double> theta;
    theta.reserve(J);
    if (k == 0) {
      theta.push_back(t[0]);
      const auto mid = scaled_dirichlet(rng, sub(1, J - 1), t[1]);
      theta.insert(theta.end(), mid.begin(), mid.end());
      theta.push_back(t[2]);
    } else if (k == J - 1) {
      theta = scaled_dirichlet(rng, sub(0, J - 2), t[0]);
      theta.push_back(t[1]);
      theta.push_back(t[2]);
    } else {
      theta = scaled_dirichlet(rng, sub(0, k), t[0]);
      theta.push_back(t[1]);
      const auto right = scaled_dirichlet(rng, sub(k + 1, J), t[2]);
      theta.insert(theta.end(), right.begin(), right.end());
    }
    if (in_region(theta, spec.tau, spec.region)) return theta;
  }
  throw std::runtime_error("sample_constrained_dirichlet: draws repeatedly fell on the region boundary");
}

}  // namespace bnq

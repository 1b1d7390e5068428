#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "bnq/truncated_samplers.hpp"
#include "oracles.hpp"

using namespace bnq;

namespace {

struct CaseSpec {
  const char* name;
  TruncatedBetaParams p;
  TruncatedBetaCase which;
  bool reflected;
  bool naive;
};

const CaseSpec kCases[] = {
    {"both small", {0.5, 0.5, 0.1, 0.6}, TruncatedBetaCase::kBothSmall, false, false},
    {"small/large", {0.5, 3.0, 0.3, 1.0}, TruncatedBetaCase::kSmallLarge, false, false},
    {"large/small tailored", {3.0, 0.5, 0.05, 0.3}, TruncatedBetaCase::kLargeSmall, false, false},
    {"large/small filter", {3.0, 0.5, 0.5, 1.0}, TruncatedBetaCase::kLargeSmall, false, true},
    {"both large tangent", {3.0, 5.0, 0.5, 0.9}, TruncatedBetaCase::kBothLarge, false, false},
    {"both large filter", {3.0, 5.0, 0.1, 0.5}, TruncatedBetaCase::kBothLarge, false, true},
    {"both large reflected", {5.0, 3.0, 0.1, 0.5}, TruncatedBetaCase::kBothLarge, true, false},
    {"both small reflected", {0.5, 0.7, 0.4, 1.0}, TruncatedBetaCase::kBothSmall, true, false},
    {"large/small reflected", {0.5, 3.0, 0.0, 0.4}, TruncatedBetaCase::kLargeSmall, true, true},
    {"both small at one", {1.0, 1.0, 0.2, 0.7}, TruncatedBetaCase::kBothSmall, false, false},
};

std::vector<double> draw_many(const TruncatedBetaParams& p, std::uint64_t seed, int n) {
  Rng rng = make_stream(seed, 0);
  std::vector<double> x(n);
  for (double& v : x) v = sample_truncated_beta(p, rng);
  return x;
}

}  // namespace

TEST_CASE("routing picks the documented case") {
  for (const auto& c : kCases) {
    INFO(std::string(c.name));
    const auto r = route_truncated_beta(c.p);
    CHECK(r.which == c.which);
    CHECK(r.reflected == c.reflected);
    if (c.which == TruncatedBetaCase::kLargeSmall || c.which == TruncatedBetaCase::kBothLarge)
      CHECK(uses_naive_filter(r) == c.naive);
  }
  CHECK(route_truncated_beta({2.0, 3.0, 0.0, 1.0}).which == TruncatedBetaCase::kUntruncated);
}

TEST_CASE("routing is total and lands in a case whose predicate holds") {
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> la(-2.5, 2.5), u(0, 1);
  for (int i = 0; i < 10000; ++i) {
    double lo = u(g), hi = u(g);
    if (lo > hi) std::swap(lo, hi);
    if (i % 10 == 0) lo = 0.0;
    if (i % 10 == 1) hi = 1.0;
    if (hi - lo < 1e-6) continue;
    const TruncatedBetaParams p{std::exp(la(g)), std::exp(la(g)), lo, hi};
    const auto r = route_truncated_beta(p);
    const auto& q = r.params;
    switch (r.which) {
      case TruncatedBetaCase::kUntruncated:
        CHECK((q.lower == 0.0 && q.upper == 1.0));
        break;
      case TruncatedBetaCase::kBothSmall:
        CHECK((q.a <= 1 && q.b <= 1 && q.upper < 1));
        break;
      case TruncatedBetaCase::kSmallLarge:
        CHECK((q.a <= 1 && q.b > 1 && q.lower > 0));
        break;
      case TruncatedBetaCase::kLargeSmall:
        CHECK((q.a > 1 && q.b <= 1));
        break;
      case TruncatedBetaCase::kBothLarge:
        CHECK((q.a > 1 && q.b > 1 && q.a / (q.a + q.b) < q.upper));
        break;
    }
    if (r.reflected) {
      CHECK(q.a == p.b);
      CHECK(q.lower == doctest::Approx(1 - p.upper));
    }
  }
}

TEST_CASE("uniform special case") {
  const auto x = draw_many({1.0, 1.0, 0.2, 0.7}, 3, 100000);
  const auto ms = oracle::mean_se(x);
  CHECK(std::abs(ms.mean - 0.45) <= 4 * ms.se);
  for (double v : x) CHECK((v > 0.2 && v < 0.7));
}

TEST_CASE("every case passes KS against the inverted truncated CDF") {
  for (const auto& c : kCases) {
    INFO(std::string(c.name));
    int passes = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto x = draw_many(c.p, seed * 101, 100000);
      bool inside = true;
      for (double v : x) inside = inside && v >= c.p.lower && v <= c.p.upper;
      CHECK(inside);
      const double d = oracle::ks_statistic(
          x, [&](double v) { return oracle::truncated_beta_cdf(c.p.a, c.p.b, c.p.lower, c.p.upper, v); });
      passes += d < oracle::ks_critical_01(x.size());
    }
    CHECK(passes >= 9);
  }
}

TEST_CASE("case-4 moments against quadrature identities") {
  const TruncatedBetaParams p{3.0, 5.0, 0.5, 0.9};
  const auto x = draw_many(p, 77, 100000);
  const auto ms = oracle::mean_se(x);
  CHECK(std::abs(ms.mean - oracle::truncated_beta_mean(3, 5, 0.5, 0.9)) <= 4 * ms.se);
  std::vector<double> sq;
  for (double v : x) sq.push_back(v * v);
  const auto m2 = oracle::mean_se(sq);
  CHECK(std::abs(m2.mean - oracle::truncated_beta_m2(3, 5, 0.5, 0.9)) <= 4 * m2.se);
}

TEST_CASE("untruncated path returns plain Beta draws") {
  const auto x = draw_many({2.0, 0.7, 0.0, 1.0}, 5, 100000);
  const double d = oracle::ks_statistic(x, [](double v) { return oracle::ibeta(2.0, 0.7, v); });
  CHECK(d < oracle::ks_critical_01(x.size()));
}

TEST_CASE("narrow deep-tail intervals stay inside and are not starved") {
  Rng rng = make_stream(9, 0);
  for (const TruncatedBetaParams p : {TruncatedBetaParams{300.0, 40.0, 0.2, 0.3}, TruncatedBetaParams{0.01, 0.01, 0.4, 0.41},
                                      TruncatedBetaParams{50.0, 0.2, 0.0, 0.5}, TruncatedBetaParams{0.3, 80.0, 0.9, 1.0}}) {
    for (int i = 0; i < 1000; ++i) {
      const double v = sample_truncated_beta(p, rng);
      CHECK((v >= p.lower && v <= p.upper));
    }
  }
  CHECK_THROWS(sample_truncated_beta({1.0, 1.0, 0.5, 0.5}, rng));
  CHECK_THROWS(sample_truncated_beta({-1.0, 1.0, 0.1, 0.5}, rng));
}

TEST_CASE("constrained Dirichlet draws always land in their region") {
  Rng rng = make_stream(21, 0);
  std::mt19937_64 g(21);
  std::uniform_real_distribution<double> la(-2, 2), ut(0.05, 0.95);
  for (std::size_t J : {2u, 3u, 4u, 5u, 8u}) {
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> a(J);
      for (double& v : a) v = std::exp(la(g));
      const QuantileLevel tau(ut(g));
      const DirichletParams alpha(a);
      const auto c = region_probs(alpha, tau).c;
      for (std::size_t k = 0; k < J; ++k) {
        if (c[k] < 1e-9) continue;
        for (int i = 0; i < 200; ++i) {
          const auto th = sample_constrained_dirichlet({alpha, RegionIndex{k}, tau}, rng);
          CHECK(in_region(th, tau, RegionIndex{k}));
        }
      }
    }
  }
}

TEST_CASE("J = 3 middle region against the filter oracle") {
  const DirichletParams alpha({1, 1, 1});
  const QuantileLevel tau(0.4);
  Rng rng = make_stream(4, 0);
  std::vector<double> lib;
  for (int i = 0; i < 100000; ++i) lib.push_back(sample_constrained_dirichlet3({alpha, RegionIndex{1}, tau}, rng)[0]);
  std::mt19937_64 g(4);
  std::vector<double> filt;
  while (filt.size() < 100000) {
    const auto th = oracle::dirichlet(g, {1, 1, 1});
    if (oracle::region_of(th, 0.4) == 1) filt.push_back(th[0]);
  }
  const auto a = oracle::mean_se(lib), b = oracle::mean_se(filt);
  CHECK(std::abs(a.mean - b.mean) <= 4 * std::hypot(a.se, b.se));
}

TEST_CASE("mixing region draws by c_k reconstructs the Dirichlet moments") {
  for (const std::vector<double>& a : {std::vector<double>{1, 1, 1}, std::vector<double>{0.5, 2.0, 0.8, 1.5, 0.3}}) {
    const DirichletParams alpha(a);
    const QuantileLevel tau(0.4);
    const auto c = region_probs(alpha, tau).c;
    const std::size_t J = a.size();
    Rng rng = make_stream(8, J);
    const int draws = 100000;
    std::vector<std::vector<double>> first(J), second(J);
    for (int i = 0; i < draws; ++i) {
      const auto k = categorical(rng, c);
      const auto th = sample_constrained_dirichlet({alpha, RegionIndex{k}, tau}, rng);
      for (std::size_t j = 0; j < J; ++j) {
        first[j].push_back(th[j]);
        second[j].push_back(th[j] * th[j]);
      }
    }
    const double A = alpha.total();
    for (std::size_t j = 0; j < J; ++j) {
      const auto m1 = oracle::mean_se(first[j]);
      const auto m2 = oracle::mean_se(second[j]);
      CHECK(std::abs(m1.mean - a[j] / A) <= 4 * m1.se);
      CHECK(std::abs(m2.mean - a[j] * (a[j] + 1) / (A * (A + 1))) <= 4 * m2.se);
    }
  }
}

TEST_CASE("J = 5 middle region coordinate means against the filter oracle") {
  const DirichletParams alpha({1, 1, 1, 1, 1});
  const QuantileLevel tau(0.5);
  Rng rng = make_stream(6, 0);
  std::mt19937_64 g(6);
  std::vector<std::vector<double>> lib(5), filt(5);
  for (int i = 0; i < 100000; ++i) {
    const auto th = sample_constrained_dirichlet({alpha, RegionIndex{2}, tau}, rng);
    CHECK(in_region(th, tau, RegionIndex{2}));
    for (int j = 0; j < 5; ++j) lib[j].push_back(th[j]);
  }
  while (filt[0].size() < 100000) {
    const auto th = oracle::dirichlet(g, {1, 1, 1, 1, 1});
    if (oracle::region_of(th, 0.5) != 2) continue;
    for (int j = 0; j < 5; ++j) filt[j].push_back(th[j]);
  }
  for (int j = 0; j < 5; ++j) {
    const auto a = oracle::mean_se(lib[j]), b = oracle::mean_se(filt[j]);
    CHECK(std::abs(a.mean - b.mean) <= 4 * std::hypot(a.se, b.se));
  }
}

TEST_CASE("first region truncation pushes theta_1 upward") {
  const DirichletParams alpha({0.8, 1.0, 1.5, 0.7});
  const QuantileLevel tau(0.3);
  Rng rng = make_stream(10, 0);
  std::vector<double> x;
  for (int i = 0; i < 50000; ++i) x.push_back(sample_constrained_dirichlet({alpha, RegionIndex{0}, tau}, rng)[0]);
  std::sort(x.begin(), x.end());
  const double slack = oracle::ks_critical_01(x.size());
  for (std::size_t i = 0; i < x.size(); i += 97) {
    const double ecdf = (i + 1.0) / x.size();
    CHECK(ecdf <= oracle::ibeta(0.8, 3.2, x[i]) + slack);
  }
  CHECK(x.front() > 0.3);
}

TEST_CASE("near-impossible region is refused") {
  Rng rng = make_stream(1, 0);
  const DirichletParams alpha({0.01, 0.01, 100.0});
  CHECK_THROWS(sample_constrained_dirichlet({alpha, RegionIndex{0}, QuantileLevel(0.5)}, rng));
}

TEST_CASE("rare middle region goes through the envelope and still matches the filter oracle") {
  // c_2 = 0.017 while Pr(theta_1 < tau) = 0.95, so plain rejection would accept ~2%.
  const std::vector<double> a{0.5, 0.1, 3.0};
  const QuantileLevel tau(0.5);
  const auto c = oracle::region_probs(a, 0.5);
  REQUIRE(c[1] / oracle::ibeta(0.5, 3.1, 0.5) < 0.1);
  const int n = 20000;
  int ks_pass[2] = {0, 0};
  std::vector<double> all_lib[2], all_filt[2];
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng = make_stream(seed, 12);
    std::vector<double> lib[2], filt[2];
    for (int i = 0; i < n; ++i) {
      const auto th = sample_constrained_dirichlet3({DirichletParams(a), RegionIndex{1}, tau}, rng);
      CHECK(in_region(th, tau, RegionIndex{1}));
      for (int j = 0; j < 2; ++j) lib[j].push_back(th[j]);
    }
    std::mt19937_64 g(seed + 1000);
    while (static_cast<int>(filt[0].size()) < n) {
      const auto th = oracle::dirichlet(g, a);
      if (oracle::region_of(th, 0.5) != 1) continue;
      for (int j = 0; j < 2; ++j) filt[j].push_back(th[j]);
    }
    for (int j = 0; j < 2; ++j) {
      // two-sample KS at p = 0.01
      std::vector<double> sy = filt[j];
      std::sort(sy.begin(), sy.end());
      const double d = oracle::ks_statistic(lib[j], [&](double v) {
        return static_cast<double>(std::upper_bound(sy.begin(), sy.end(), v) - sy.begin()) / sy.size();
      });
      ks_pass[j] += d < 1.6276 * std::sqrt(2.0 / n);
      all_lib[j].insert(all_lib[j].end(), lib[j].begin(), lib[j].end());
      all_filt[j].insert(all_filt[j].end(), filt[j].begin(), filt[j].end());
    }
  }
  for (int j = 0; j < 2; ++j) {
    CHECK(ks_pass[j] >= 4);
    const auto m = oracle::mean_se(all_lib[j]), o = oracle::mean_se(all_filt[j]);
    CHECK(std::abs(m.mean - o.mean) <= 4 * std::hypot(m.se, o.se));
  }
}

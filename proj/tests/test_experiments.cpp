#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "bnq/experiments.hpp"
#include "bnq/io.hpp"
#include "bnq/workflows.hpp"
#include "oracles.hpp"

using namespace bnq;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("bnq_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dataset ingest_text(const std::string& text, const SupportSpec& spec, bool censored = true) {
  std::istringstream in(text);
  return ingest_scores(in, spec, censored);
}

}  // namespace

TEST_CASE("double-exponential prior") {
  const auto grid = Support::grid(-10, 40, 50.0 / 999);
  REQUIRE(grid.size() == 1000);
  // Median of -log chi^2_1 from the Boost chi-square quantile, shifted by 2.333.
  const double beta = -std::log(boost::math::quantile(boost::math::chi_squared(1), 0.5));
  CHECK(beta == doctest::Approx(0.7875).epsilon(1e-4));
  const auto p = build_discrete_prior(grid, beta + 2.333, 0.1);
  std::size_t mode = 0;
  for (std::size_t j = 0; j < p.size(); ++j)
    if (p[j] > p[mode]) mode = j;
  CHECK(std::abs(grid[mode] - 3.12) <= 50.0 / 999);

  const auto sym = build_discrete_prior(Support::grid(-5, 5, 1), 0.0, 0.7);
  for (std::size_t j = 0; j < 11; ++j) CHECK(sym[j] == doctest::Approx(sym[10 - j]).epsilon(1e-14));
  const auto sharp = build_discrete_prior(Support::grid(0, 10, 1), 3.2, 200.0);
  CHECK(sharp[3] > 1 - 1e-12);
}

TEST_CASE("cricket priors") {
  const auto s = Support::grid(0, 350, 1);
  const auto med = build_cricket_priors(s, QuantileLevel(0.5), CricketVariant::kMedian);
  double sa = 0, sl = 0;
  for (double a : med.alpha.values()) sa += a;
  for (double l : med.lambda) sl += l;
  CHECK(sa == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(sl == doctest::Approx(6.0).epsilon(1e-12));
  const auto per = build_cricket_priors(s, QuantileLevel(0.5), CricketVariant::kPerTau);
  for (std::size_t j = 0; j < s.size(); ++j) CHECK(per.lambda[j] == doctest::Approx(med.lambda[j]).epsilon(1e-13));
  // lambda shape exp(-(s - 15)^2 / 450), normalized to 5
  double z = 0;
  for (std::size_t j = 0; j < s.size(); ++j) z += std::exp(-0.5 * std::pow((s[j] - 15) / 15, 2));
  CHECK(med.lambda[40] == doctest::Approx(5 * std::exp(-0.5 * std::pow(25.0 / 15, 2)) / z + 1.0 / 351).epsilon(1e-12));
  const auto hi = build_cricket_priors(s, QuantileLevel(0.9), CricketVariant::kPerTau);
  std::size_t mode = 0;
  for (std::size_t j = 0; j < s.size(); ++j)
    if (hi.lambda[j] > hi.lambda[mode]) mode = j;
  CHECK(std::abs(s[mode] - (15 + 15 * 1.2815515655446004)) <= 0.5);
}

TEST_CASE("sample quantile and bandwidth") {
  const std::vector<double> x{5, 1, 4, 2, 3};
  CHECK(sample_quantile(x, QuantileLevel(0.5)) == 3);
  CHECK(sample_quantile(x, QuantileLevel(0.2)) == 1);  // ceil(1) = 1, ties broken low
  CHECK(sample_quantile(x, QuantileLevel(0.21)) == 2);
  const std::vector<double> c(10, 2.0);
  CHECK(silverman_bandwidth(c) == 0.0);
  CHECK_THROWS(clt_interval(c, QuantileLevel(0.5)));
  CHECK_THROWS(clt_interval(std::vector<double>{1.0}, QuantileLevel(0.5)));
}

TEST_CASE("CLT interval") {
  std::vector<double> sym{-3, -1.5, -1, 0, 1, 1.5, 3};
  for (double& v : sym) v += 7.25;
  CHECK(clt_interval(sym, QuantileLevel(0.5)).point == 7.25);

  // Width * sqrt(n) approaches 2 * 1.96 * sqrt(tau (1 - tau)) / f(beta) with f in closed form.
  std::mt19937_64 g(11);
  std::normal_distribution<double> nd;
  const std::size_t n = 200000;
  std::vector<double> z(n);
  for (auto& v : z) {
    const double e = nd(g);
    v = -std::log(e * e);
  }
  for (double t : {0.5, 0.9}) {
    const auto iv = clt_interval(z, QuantileLevel(t));
    const double beta = -std::log(boost::math::quantile(boost::math::chi_squared(1), 1 - t));
    const double f = std::exp(-beta / 2 - std::exp(-beta) / 2) / std::sqrt(2 * M_PI);
    const double target = 2 * 1.959963984540054 * std::sqrt(t * (1 - t)) / f;
    CHECK((iv.hi - iv.lo) * std::sqrt(double(n)) == doctest::Approx(target).epsilon(0.03));
    CHECK(neg_log_chisq_quantile(t) == doctest::Approx(beta).epsilon(1e-12));
    CHECK(neg_log_chisq_density(beta) == doctest::Approx(f).epsilon(1e-12));
  }
}

TEST_CASE("bootstrap interval") {
  Rng rng = make_stream(2, 0);
  const std::vector<double> c(25, 4.5);
  const auto iv = bootstrap_interval(c, QuantileLevel(0.3), 200, 0.95, rng);
  CHECK(iv.lo == 4.5);
  CHECK(iv.hi == 4.5);
  CHECK(iv.point == 4.5);
  CHECK_THROWS(bootstrap_interval(c, QuantileLevel(0.3), 99, 0.95, rng));
  std::vector<double> x;
  for (int i = 0; i < 31; ++i) x.push_back(i * 0.5);
  const auto b = bootstrap_interval(x, QuantileLevel(0.5), 500, 0.9, rng);
  // endpoints are resampled order statistics, hence sample points
  CHECK(std::find(x.begin(), x.end(), b.lo) != x.end());
  CHECK(std::find(x.begin(), x.end(), b.hi) != x.end());
  CHECK(b.lo <= b.point);
  CHECK(b.point <= b.hi);
}

TEST_CASE("estimator names") {
  for (auto e : {Estimator::kClt, Estimator::kBoot, Estimator::kDiscrete, Estimator::kData})
    CHECK(estimator_from_string(to_string(e)) == e);
  CHECK(estimator_from_string("bootstrap") == Estimator::kBoot);
  CHECK_THROWS(estimator_from_string("mle"));
  CHECK(*preset_prior_offset(0.5) == 2.333);
  CHECK(*preset_prior_offset(0.9) == 6.032);
  CHECK_FALSE(preset_prior_offset(0.7).has_value());
}

TEST_CASE("Monte Carlo harness identities") {
  McConfig one;
  one.n = 30;
  one.replications = 1;
  one.grid_size = 200;
  one.bootstrap_resamples = 100;
  for (const auto& r : run_monte_carlo(one)) {
    CHECK(r.rmse == doctest::Approx(std::abs(r.bias)).epsilon(1e-12));
    CHECK((r.coverage == 0.0 || r.coverage == 1.0));
  }
  McConfig cfg;
  cfg.n = 40;
  cfg.tau = 0.9;
  cfg.replications = 60;
  cfg.grid_size = 300;
  cfg.bootstrap_resamples = 200;
  const auto rows = run_monte_carlo(cfg);
  CHECK(rows.size() == 4);
  for (const auto& r : rows) {
    INFO(to_string(r.estimator));
    CHECK(r.failures == 0);
    const double rhs = r.bias * r.bias + r.sqrt_n_se * r.sqrt_n_se / double(r.n);
    CHECK(std::abs(r.rmse * r.rmse - rhs) <= 1e-9);
    CHECK(r.coverage >= 0.0);
    CHECK(r.coverage <= 1.0);
  }
  CHECK_THROWS(run_monte_carlo([] {
    McConfig c;
    c.tau = 0.7;
    return c;
  }()));
  CHECK_THROWS(run_monte_carlo([] {
    McConfig c;
    c.replications = 0;
    return c;
  }()));
  CHECK_THROWS(run_monte_carlo([] {
    McConfig c;
    c.estimators.clear();
    return c;
  }()));
}

TEST_CASE("coverage standard error halves when replications quadruple") {
  // Coverage indicators are iid, so the spread of the coverage estimate over
  // independent seeds should scale as 1/sqrt(R).
  auto spread = [](std::size_t reps) {
    std::vector<double> cov;
    for (std::uint64_t s = 1; s <= 12; ++s) {
      McConfig c;
      c.n = 20;
      c.replications = reps;
      c.seed = s;
      c.estimators = {Estimator::kClt};
      cov.push_back(run_monte_carlo(c)[0].coverage);
    }
    return oracle::mean_se(cov).se * std::sqrt(12.0);
  };
  const double r = spread(100) / spread(400);
  MESSAGE("coverage sd ratio R=100 vs R=400: " << r);
  CHECK(r > 1.0);
  CHECK(r < 4.0);
}

TEST_CASE("score ingestion") {
  const SupportSpec grid{false, 0, 20, 1};
  SUBCASE("empty file") {
    const auto d = ingest_text("", grid);
    CHECK(d.groups.empty());
    CHECK(d.report.rows_read == 0);
    CHECK(d.support.has_value());
    const auto e = ingest_text("group_id,score,censored\n", SupportSpec{true});
    CHECK_FALSE(e.support.has_value());
  }
  SUBCASE("not-out row") {
    const auto d = ingest_text("group_id,score,censored\nPIGOTT,4,false\nPIGOTT,8,true\n", grid);
    REQUIRE(d.groups.size() == 1);
    CHECK(d.groups[0].id == "PIGOTT");
    CHECK(d.groups[0].counts.total() == 1);
    CHECK(d.groups[0].counts[4] == 1);
    REQUIRE(d.groups[0].censor_lows.size() == 1);
    CHECK(d.groups[0].censor_lows[0] == 8);
    CHECK(d.report.censor_fraction() == 0.5);
  }
  SUBCASE("duplicates accumulate") {
    const auto d = ingest_text("group_id,score,censored\n# comment\na,3,false\na,3,false\n\na,3,0\nb,3,1\n", grid);
    REQUIRE(d.groups.size() == 2);
    CHECK(d.groups[0].counts[3] == 3);
    CHECK(d.groups[1].censor_lows.size() == 1);
    CHECK(d.report.rejects.empty());
  }
  SUBCASE("rejects carry line numbers") {
    const auto d = ingest_text("group_id,score,censored\na,3,false\na,x,false\na,25,false\na,2.5,false\nb,4\n", grid);
    REQUIRE(d.report.rejects.size() == 4);
    CHECK(d.report.rejects[0].line == 3);
    CHECK(d.report.rejects[1].line == 4);
    CHECK(d.report.rejects[2].line == 5);
    CHECK(d.report.rejects[3].line == 6);
    CHECK(d.report.accepted_rows == 1);
    const auto strict = ingest_text("group_id,score,censored\na,3,true\n", grid, false);
    CHECK(strict.report.rejects.size() == 1);
    CHECK(strict.groups.empty());
  }
  SUBCASE("missing header is reported") {
    const auto d = ingest_text("name,score\na,1,false\n", grid);
    REQUIRE(d.report.rejects.size() == 1);
    CHECK(d.report.rejects[0].line == 1);
    CHECK(d.groups.size() == 1);
  }
  SUBCASE("from-data support") {
    const auto d = ingest_text("group_id,score,censored\na,7,false\nb,2,true\na,11,false\n", SupportSpec{true});
    REQUIRE(d.support.has_value());
    const auto v = d.support->values();
    CHECK(std::vector<double>(v.begin(), v.end()) == std::vector<double>{2, 7, 11});
    CHECK(d.groups[1].censor_lows[0] == 0);
  }
  SUBCASE("round trip") {
    const auto d = ingest_text(
        "group_id,score,censored\nx,1,false\ny,5,true\nx,1,false\nx,9,true\ny,0,false\nx,9,true\nz z,3,false\n", grid);
    std::ostringstream out;
    write_scores(out, *d.support, d.groups);
    const auto back = ingest_text(out.str(), grid);
    REQUIRE(back.groups.size() == d.groups.size());
    for (std::size_t i = 0; i < d.groups.size(); ++i) {
      CHECK(back.groups[i].id == d.groups[i].id);
      CHECK(back.groups[i].counts == d.groups[i].counts);
      auto a = back.groups[i].censor_lows, b = d.groups[i].censor_lows;
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      CHECK(a == b);
    }
  }
}

TEST_CASE("run config parsing") {
  const auto c = parse_run_config(R"({"workflow":"censored","tau":0.3,"support":{"lo":0,"hi":50,"step":1},
    "prior":{"builder":"uniform","alpha_value":0.02,"lambda_value":0.5},"schedule":{"burn_in":10,"kept":20,"thin":2},
    "seed":99,"out":"somewhere"})");
  CHECK(c.workflow == Workflow::kCensored);
  CHECK(c.tau == 0.3);
  CHECK(c.support.hi == 50);
  CHECK(*c.prior.alpha_value == 0.02);
  CHECK(c.schedule.thin == 2);
  CHECK(c.seed == 99);
  CHECK(parse_run_config(R"({"support":"from-data"})").support.from_data);
  CHECK_THROWS(parse_run_config(R"({"taus":0.5})"));
  CHECK_THROWS(parse_run_config(R"({"workflow":"nope"})"));
  CHECK_THROWS(parse_run_config("{not json"));
}

TEST_CASE("single workflow without data reports the prior") {
  RunConfig cfg;
  cfg.support = SupportSpec{false, 0, 10, 1};
  cfg.prior.builder = "double-exponential";
  cfg.prior.center = 4;
  cfg.prior.decay = 0.5;
  cfg.out = scratch("single_prior");
  const auto res = run_workflow(cfg);
  REQUIRE(res.groups.size() == 1);
  const auto prior = build_discrete_prior(Support::grid(0, 10, 1), 4, 0.5);
  double mean = 0;
  for (int j = 0; j <= 10; ++j) mean += j * prior[j];
  CHECK(res.groups[0].mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK_FALSE(res.groups[0].sample_quantile.has_value());
}

TEST_CASE("hierarchical workflow on an empty data file is legal") {
  const auto dir = scratch("hier_empty");
  std::ofstream(dir / "empty.csv") << "group_id,score,censored\n";
  RunConfig cfg;
  cfg.workflow = Workflow::kHier;
  cfg.data = dir / "empty.csv";
  cfg.support = SupportSpec{false, 0, 30, 1};
  cfg.out = dir / "out";
  const auto res = run_workflow(cfg);
  CHECK(res.groups.empty());
  CHECK(fs::exists(dir / "out" / "mixing_pmf.csv"));
}

TEST_CASE("identical config and seed give byte-identical reports") {
  const auto dir = scratch("determinism");
  {
    std::ofstream f(dir / "scores.csv");
    f << "group_id,score,censored\n";
    std::mt19937_64 g(3);
    std::uniform_int_distribution<int> s(0, 40);
    std::bernoulli_distribution cens(0.2);
    for (int i = 0; i < 60; ++i) f << "g" << i % 4 << "," << s(g) << "," << (cens(g) ? "true" : "false") << "\n";
    f << "g1,99,false\n";
  }
  for (auto wf : {Workflow::kCensored, Workflow::kQuantileFunction}) {
    RunConfig cfg;
    cfg.workflow = wf;
    cfg.data = dir / "scores.csv";
    cfg.support = SupportSpec{false, 0, 40, 1};
    cfg.schedule = GibbsSchedule{50, 200, 1};
    cfg.tau_grid = {0.2, 0.5, 0.8};
    cfg.seed = 17;
    cfg.out = dir / "a";
    const auto r1 = run_workflow(cfg);
    cfg.out = dir / "b";
    const auto r2 = run_workflow(cfg);
    REQUIRE(r1.files.size() == r2.files.size());
    for (std::size_t k = 0; k < r1.files.size(); ++k) {
      CHECK(r1.files[k].filename() == r2.files[k].filename());
      CHECK(slurp(r1.files[k]) == slurp(r2.files[k]));
    }
    CHECK(slurp(dir / "a" / "rejects.csv").find("99") != std::string::npos);
  }
  CHECK(fs::exists(dir / "a" / "quantile_function_g0.csv"));
}

TEST_CASE("quantile-function workflow gives one fit per tau") {
  const auto dir = scratch("qf");
  {
    std::ofstream f(dir / "scores.csv");
    f << "group_id,score,censored\n";
    for (int i = 0; i < 30; ++i) f << "a," << i << ",false\nb," << i / 2 << "," << (i % 5 == 0 ? "true" : "false") << "\n";
  }
  RunConfig cfg;
  cfg.workflow = Workflow::kQuantileFunction;
  cfg.data = dir / "scores.csv";
  cfg.support = SupportSpec{false, 0, 30, 1};
  cfg.schedule = GibbsSchedule{100, 500, 1};
  cfg.out = dir / "out";
  run_workflow(cfg);
  std::istringstream in(slurp(dir / "out" / "quantile_function_a.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "tau,mean,q05,q95");
  std::vector<double> means;
  while (std::getline(in, line)) {
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
    means.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
  }
  REQUIRE(means.size() == cfg.tau_grid.size());
  CHECK(means.front() < means.back());
}

TEST_CASE("treating not-outs as censored raises the posterior median") {
  // One heavily censored group: not-outs at low scores in a population scoring higher.
  const auto dir = scratch("censor_direction");
  {
    std::ofstream f(dir / "scores.csv");
    f << "group_id,score,censored\n";
    std::mt19937_64 g(21);
    std::geometric_distribution<int> runs(1.0 / 25);
    for (int i = 0; i < 20; ++i)
      for (int r = 0; r < 15; ++r) f << "p" << i << "," << std::min(runs(g), 150) << ",false\n";
    for (int r = 0; r < 6; ++r) f << "heavy," << 5 + 4 * r << ",false\n";
    for (int r = 0; r < 8; ++r) f << "heavy," << 3 + 2 * r << ",true\n";
  }
  RunConfig cfg;
  cfg.data = dir / "scores.csv";
  cfg.support = SupportSpec{false, 0, 150, 1};
  cfg.prior.builder = "cricket";
  cfg.schedule = GibbsSchedule{300, 3000, 1};
  cfg.workflow = Workflow::kCensored;
  cfg.out = dir / "cens";
  const auto cens = run_workflow(cfg);
  // Uncensored treatment: the same file with the flags dropped.
  {
    std::ifstream in(dir / "scores.csv");
    std::ofstream out(dir / "plain.csv");
    std::string line;
    while (std::getline(in, line)) {
      const auto p = line.find(",true");
      out << (p == std::string::npos ? line : line.substr(0, p) + ",false") << "\n";
    }
  }
  cfg.data = dir / "plain.csv";
  cfg.workflow = Workflow::kHier;
  cfg.out = dir / "plain";
  const auto plain = run_workflow(cfg);
  const auto heavy = [](const ReportResult& r) {
    for (const auto& g : r.groups)
      if (g.group == "heavy") return g.mean;
    throw std::logic_error("missing group");
  };
  MESSAGE("heavy group posterior median: censored " << heavy(cens) << ", uncensored " << heavy(plain));
  CHECK(heavy(cens) >= heavy(plain));
}

TEST_CASE("csv and number formatting") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_number(-INFINITY) == "-inf");
  CHECK(sanitize_name("a/b c.d") == "a_b_c.d");
  const auto dir = scratch("csv");
  CsvWriter w(dir / "t.csv", {"x", "y"});
  w.field(std::string("a,b")).field(std::int64_t{3});
  w.end_row();
  w.save();
  CHECK(slurp(dir / "t.csv") == "x,y\n\"a,b\",3\n");
}

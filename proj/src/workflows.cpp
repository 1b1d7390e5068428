#include "bnq/workflows.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "bnq/numerics.hpp"
#include "bnq/single_posterior.hpp"

namespace bnq {

using nlohmann::json;

Workflow workflow_from_string(const std::string& name) {
  if (name == "single") return Workflow::kSingle;
  if (name == "hier") return Workflow::kHier;
  if (name == "censored") return Workflow::kCensored;
  if (name == "quantile-function") return Workflow::kQuantileFunction;
  if (name == "mc") return Workflow::kMc;
  throw std::invalid_argument("unknown workflow '" + name + "'");
}

std::string to_string(Workflow w) {
  switch (w) {
    case Workflow::kSingle:
      return "single";
    case Workflow::kHier:
      return "hier";
    case Workflow::kCensored:
      return "censored";
    case Workflow::kQuantileFunction:
      return "quantile-function";
    case Workflow::kMc:
      return "mc";
  }
  return "?";
}

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw std::invalid_argument(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& target) {
  if (obj.contains(key)) target = obj.at(key).get<T>();
}

template <typename T>
void read(const json& obj, const char* key, std::optional<T>& target) {
  if (obj.contains(key)) target = obj.at(key).get<T>();
}

CricketVariant variant_from_string(const std::string& s) {
  if (s == "median") return CricketVariant::kMedian;
  if (s == "per-tau") return CricketVariant::kPerTau;
  throw std::invalid_argument("prior.variant must be 'median' or 'per-tau'");
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  RunConfig c;
  try {
    const json j = json::parse(json_text, nullptr, true, true);
    check_keys(j, {"workflow", "data", "tau", "tau_grid", "support", "prior", "schedule", "seed", "out", "mc"}, "config");
    if (j.contains("workflow")) c.workflow = workflow_from_string(j.at("workflow").get<std::string>());
    if (j.contains("data")) c.data = j.at("data").get<std::string>();
    read(j, "tau", c.tau);
    read(j, "tau_grid", c.tau_grid);
    read(j, "seed", c.seed);
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (j.contains("support")) {
      const auto& s = j.at("support");
      if (s.is_string()) {
        if (s.get<std::string>() != "from-data") throw std::invalid_argument("support: expected \"from-data\" or {lo, hi, step}");
        c.support.from_data = true;
      } else {
        check_keys(s, {"lo", "hi", "step"}, "support");
        read(s, "lo", c.support.lo);
        read(s, "hi", c.support.hi);
        read(s, "step", c.support.step);
      }
    }
    if (j.contains("prior")) {
      const auto& p = j.at("prior");
      check_keys(p, {"builder", "alpha_value", "lambda_value", "center", "decay", "variant", "alpha_mass", "alpha_decay",
                     "lambda_mass", "lambda_center", "lambda_scale"},
                 "prior");
      read(p, "builder", c.prior.builder);
      read(p, "alpha_value", c.prior.alpha_value);
      read(p, "lambda_value", c.prior.lambda_value);
      read(p, "center", c.prior.center);
      read(p, "decay", c.prior.decay);
      if (p.contains("variant")) c.prior.variant = variant_from_string(p.at("variant").get<std::string>());
      read(p, "alpha_mass", c.prior.cricket.alpha_mass);
      read(p, "alpha_decay", c.prior.cricket.alpha_decay);
      read(p, "lambda_mass", c.prior.cricket.lambda_mass);
      read(p, "lambda_center", c.prior.cricket.lambda_center);
      read(p, "lambda_scale", c.prior.cricket.lambda_scale);
    }
    if (j.contains("schedule")) {
      const auto& s = j.at("schedule");
      check_keys(s, {"burn_in", "kept", "thin"}, "schedule");
      read(s, "burn_in", c.schedule.burn_in);
      read(s, "kept", c.schedule.kept);
      read(s, "thin", c.schedule.thin);
    }
    if (j.contains("mc")) {
      const auto& m = j.at("mc");
      check_keys(m, {"ns", "taus", "replications", "estimators", "prior_decay", "prior_offset", "grid_size", "grid_lo",
                     "grid_hi", "bootstrap_resamples", "level"},
                 "mc");
      read(m, "ns", c.mc_ns);
      read(m, "taus", c.mc_taus);
      read(m, "replications", c.mc.replications);
      read(m, "prior_decay", c.mc.prior_decay);
      read(m, "prior_offset", c.mc.prior_offset);
      read(m, "grid_size", c.mc.grid_size);
      read(m, "grid_lo", c.mc.grid_lo);
      read(m, "grid_hi", c.mc.grid_hi);
      read(m, "bootstrap_resamples", c.mc.bootstrap_resamples);
      read(m, "level", c.mc.level);
      if (m.contains("estimators")) {
        c.mc.estimators.clear();
        for (const auto& e : m.at("estimators")) c.mc.estimators.push_back(estimator_from_string(e.get<std::string>()));
      }
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::vector<double> single_posterior_pmf(const RunConfig& config, const Support& support, QuantileLevel tau,
                                         const CountVector& counts) {
  const std::size_t J = support.size();
  const auto alpha = DirichletParams::uniform(J, config.prior.alpha_value.value_or(1.0 / static_cast<double>(J)));
  std::vector<double> b;
  const auto& builder = config.prior.builder;
  if (builder == "uniform") {
    b.assign(J, 1.0 / static_cast<double>(J));
  } else if (builder == "bootstrap") {
    const auto c = log_region_probs(alpha, tau);
    const double norm = log_sum_exp(c.log_c);
    for (double l : c.log_c) b.push_back(std::exp(l - norm));
  } else if (builder == "double-exponential") {
    b = build_discrete_prior(support, config.prior.center, config.prior.decay);
  } else {
    throw std::invalid_argument("single workflow: prior.builder must be uniform, bootstrap or double-exponential");
  }
  return posterior_beta(QuantileSpec(tau, std::move(b)), alpha, counts).pmf;
}

HyperParams hierarchical_priors(const PriorConfig& prior, const Support& support, QuantileLevel tau) {
  const std::size_t J = support.size();
  if (prior.builder == "cricket") {
    auto p = build_cricket_priors(support, tau, prior.variant, prior.cricket);
    return HyperParams{std::move(p.alpha), std::move(p.lambda)};
  }
  if (prior.builder == "uniform") {
    if (!(prior.lambda_value > 0.0)) throw std::invalid_argument("prior.lambda_value must be positive");
    return HyperParams{DirichletParams::uniform(J, prior.alpha_value.value_or(1.0 / static_cast<double>(J))),
                       std::vector<double>(J, prior.lambda_value)};
  }
  throw std::invalid_argument("hierarchical workflows: prior.builder must be uniform or cricket");
}

namespace {

// Hands out sanitized, collision-free file stems.
class FileNamer {
 public:
  explicit FileNamer(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::filesystem::path operator()(const std::string& prefix, const std::string& group) {
    std::string stem = prefix + sanitize_name(group);
    std::string candidate = stem;
    for (int k = 2; !used_.insert(candidate).second; ++k) candidate = stem + "_" + std::to_string(k);
    return dir_ / (candidate + ".csv");
  }
  std::filesystem::path plain(const std::string& name) { return dir_ / (name + ".csv"); }

 private:
  std::filesystem::path dir_;
  std::set<std::string> used_;
};

std::int64_t group_size(const SubpopData& g) {
  return g.counts.total() + static_cast<std::int64_t>(g.censor_lows.size());
}

GroupSummary summarize(const SubpopData& g, std::span<const double> pmf, const Support& support, QuantileLevel tau) {
  static const std::vector<double> levels{0.05, 0.95};
  const auto s = posterior_summary(pmf, support, levels);
  GroupSummary out{g.id, group_size(g), std::nullopt, s.mean, s.quantiles[0], s.quantiles[1]};
  if (const auto k = empirical_quantile_index(g.counts, tau)) out.sample_quantile = support[*k];
  return out;
}

void write_posterior(const std::filesystem::path& path, const Support& support, std::span<const double> pmf) {
  CsvWriter w(path, {"value", "pmf", "cdf"});
  double cdf = 0.0;
  for (std::size_t j = 0; j < support.size(); ++j) {
    cdf += pmf[j];
    w.field(support[j]).field(pmf[j]).field(std::min(cdf, 1.0));
    w.end_row();
  }
  w.save();
}

double optional_number(const std::optional<double>& v) { return v ? *v : std::nan(""); }

void write_summary(const std::filesystem::path& path, const std::vector<GroupSummary>& rows) {
  CsvWriter w(path, {"group", "n_i", "sample_q", "mean", "q05", "q95"});
  for (const auto& r : rows) {
    w.field(r.group).field(r.n).field(optional_number(r.sample_quantile)).field(r.mean).field(r.q05).field(r.q95);
    w.end_row();
  }
  w.save();
}

void write_shrinkage(const std::filesystem::path& path, const std::vector<GroupSummary>& rows) {
  CsvWriter w(path, {"group", "n_i", "sample_q", "posterior_mean"});
  for (const auto& r : rows) {
    w.field(r.group).field(r.n).field(optional_number(r.sample_quantile)).field(r.mean);
    w.end_row();
  }
  w.save();
}

void write_rejects(const std::filesystem::path& path, const IngestReport& report) {
  CsvWriter w(path, {"line", "reason", "text"});
  for (const auto& r : report.rejects) {
    w.field(r.line).field(r.reason).field(r.text);
    w.end_row();
  }
  w.save();
}

void write_mixing(const std::filesystem::path& path, const Support& support, std::span<const double> pi) {
  CsvWriter w(path, {"value", "pi_mean"});
  for (std::size_t j = 0; j < support.size(); ++j) {
    w.field(support[j]).field(pi[j]);
    w.end_row();
  }
  w.save();
}

const Support& require_support(const Dataset& data) {
  if (!data.support) throw std::invalid_argument("no support: from-data support needs at least two distinct scores");
  return *data.support;
}

void run_single(const RunConfig& config, const Dataset& data, FileNamer& names, ReportResult& result) {
  const Support& support = require_support(data);
  const QuantileLevel tau(config.tau);
  std::vector<SubpopData> groups = data.groups;
  // Without data the report is the prior itself.
  if (groups.empty()) groups.push_back(SubpopData{"prior", CountVector(support.size()), {}});
  for (const auto& g : groups) {
    if (!g.censor_lows.empty())
      throw std::invalid_argument("single workflow: group '" + g.id + "' has censored observations");
    const auto pmf = single_posterior_pmf(config, support, tau, g.counts);
    const auto path = names("posterior_", g.id);
    write_posterior(path, support, pmf);
    result.files.push_back(path);
    result.groups.push_back(summarize(g, pmf, support, tau));
  }
  const auto path = names.plain("summary");
  write_summary(path, result.groups);
  result.files.push_back(path);
}

void run_hier(const RunConfig& config, const Dataset& data, bool censored, FileNamer& names, ReportResult& result) {
  const Support& support = require_support(data);
  const QuantileLevel tau(config.tau);
  const auto hp = hierarchical_priors(config.prior, support, tau);
  std::vector<double> pi_mean;
  if (data.groups.empty()) {
    double total = 0.0;
    for (double l : hp.lambda) total += l;
    for (double l : hp.lambda) pi_mean.push_back(l / total);
  } else {
    const auto chain = censored ? gibbs_censored(data.groups, hp, tau, config.schedule, config.seed)
                                : gibbs_hierarchical(data.groups, hp, tau, config.schedule, config.seed);
    pi_mean = chain.mixing_mean();
    for (std::size_t i = 0; i < data.groups.size(); ++i) {
      const auto pmf = chain.beta_pmf(i, support.size());
      const auto path = names("posterior_", data.groups[i].id);
      write_posterior(path, support, pmf);
      result.files.push_back(path);
      result.groups.push_back(summarize(data.groups[i], pmf, support, tau));
    }
  }
  for (const auto& [name, writer] :
       {std::pair{"summary", &write_summary}, std::pair{"shrinkage", &write_shrinkage}}) {
    const auto path = names.plain(name);
    writer(path, result.groups);
    result.files.push_back(path);
  }
  const auto path = names.plain("mixing_pmf");
  write_mixing(path, support, pi_mean);
  result.files.push_back(path);
}

void run_quantile_function(const RunConfig& config, const Dataset& data, FileNamer& names, ReportResult& result) {
  const Support& support = require_support(data);
  if (config.tau_grid.empty()) throw std::invalid_argument("quantile-function workflow: empty tau_grid");
  std::vector<std::vector<GroupSummary>> per_tau;
  for (std::size_t m = 0; m < config.tau_grid.size(); ++m) {
    const QuantileLevel tau(config.tau_grid[m]);
    if (data.groups.empty()) break;
    const auto hp = hierarchical_priors(config.prior, support, tau);
    Rng seeder = make_stream(config.seed, m);
    const auto chain = gibbs_censored(data.groups, hp, tau, config.schedule, seeder());
    std::vector<GroupSummary> rows;
    for (std::size_t i = 0; i < data.groups.size(); ++i)
      rows.push_back(summarize(data.groups[i], chain.beta_pmf(i, support.size()), support, tau));
    per_tau.push_back(std::move(rows));
  }
  for (std::size_t i = 0; i < data.groups.size(); ++i) {
    const auto path = names("quantile_function_", data.groups[i].id);
    CsvWriter w(path, {"tau", "mean", "q05", "q95"});
    for (std::size_t m = 0; m < per_tau.size(); ++m) {
      const auto& r = per_tau[m][i];
      w.field(config.tau_grid[m]).field(r.mean).field(r.q05).field(r.q95);
      w.end_row();
    }
    w.save();
    result.files.push_back(path);
  }
}

void run_mc(const RunConfig& config, FileNamer& names, ReportResult& result) {
  for (double tau : config.mc_taus) {
    for (std::size_t n : config.mc_ns) {
      McConfig mc = config.mc;
      mc.tau = tau;
      mc.n = n;
      mc.seed = config.seed;
      for (auto& row : run_monte_carlo(mc)) result.mc_rows.push_back(row);
    }
  }
  const auto path = names.plain("mc_table");
  CsvWriter w(path, {"estimator", "n", "tau", "bias", "sqrt_n_se", "rmse", "coverage"});
  for (const auto& r : result.mc_rows) {
    w.field(to_string(r.estimator)).field(r.n).field(r.tau).field(r.bias).field(r.sqrt_n_se).field(r.rmse).field(
        r.coverage);
    w.end_row();
  }
  w.save();
  result.files.push_back(path);
}

}  // namespace

ReportResult run_report(const RunConfig& config, const Dataset& data) {
  std::filesystem::create_directories(config.out);
  FileNamer names(config.out);
  ReportResult result;
  switch (config.workflow) {
    case Workflow::kSingle:
      run_single(config, data, names, result);
      break;
    case Workflow::kHier:
      run_hier(config, data, false, names, result);
      break;
    case Workflow::kCensored:
      run_hier(config, data, true, names, result);
      break;
    case Workflow::kQuantileFunction:
      run_quantile_function(config, data, names, result);
      break;
    case Workflow::kMc:
      run_mc(config, names, result);
      break;
  }
  if (config.workflow != Workflow::kMc && config.data) {
    const auto path = names.plain("rejects");
    write_rejects(path, data.report);
    result.files.push_back(path);
  }
  return result;
}

ReportResult run_workflow(const RunConfig& config) {
  Dataset data;
  if (config.workflow != Workflow::kMc) {
    const bool censoring = config.workflow == Workflow::kCensored || config.workflow == Workflow::kQuantileFunction;
    if (config.data) {
      data = ingest_scores(*config.data, config.support, censoring);
    } else if (!config.support.from_data) {
      data.support = Support::grid(config.support.lo, config.support.hi, config.support.step);
    }
  }
  auto result = run_report(config, data);
  if (config.data) result.ingest = data.report;
  return result;
}

}  // namespace bnq

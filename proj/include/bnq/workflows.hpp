#pragma once

// Run configuration and the report drivers behind the command-line tool.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bnq/experiments.hpp"
#include "bnq/hierarchical_gibbs.hpp"
#include "bnq/io.hpp"

namespace bnq {

enum class Workflow { kSingle, kHier, kCensored, kQuantileFunction, kMc };
Workflow workflow_from_string(const std::string& name);
std::string to_string(Workflow w);

/// Prior choices. For the single-population workflow `builder` picks the prior
/// pmf b on the quantile: uniform, bootstrap (b = c(alpha)) or
/// double-exponential (center, decay). For the hierarchical workflows it picks
/// (alpha, lambda): uniform (alpha_value, lambda_value) or cricket.
struct PriorConfig {
  std::string builder = "uniform";
  std::optional<double> alpha_value;  // defaults to 1/J
  double lambda_value = 1.0;
  double center = 0.0;
  double decay = 0.1;
  CricketVariant variant = CricketVariant::kMedian;
  CricketPriorConfig cricket;
};

struct RunConfig {
  Workflow workflow = Workflow::kSingle;
  std::optional<std::filesystem::path> data;
  double tau = 0.5;
  std::vector<double> tau_grid{0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99};
  SupportSpec support;
  PriorConfig prior;
  GibbsSchedule schedule;
  std::uint64_t seed = 1;
  std::filesystem::path out = "out";
  /// Monte Carlo blocks: one table row per (n, tau, estimator).
  McConfig mc;
  std::vector<std::size_t> mc_ns{40, 320};
  std::vector<double> mc_taus{0.5, 0.9};
};

/// Parses a JSON run config; unknown keys are rejected so typos do not pass silently.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Summary rows shared by the single and hierarchical workflows.
struct GroupSummary {
  std::string group;
  std::int64_t n = 0;  // observed plus censored
  std::optional<double> sample_quantile;
  double mean = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
};

struct ReportResult {
  std::vector<std::filesystem::path> files;
  std::vector<GroupSummary> groups;
  std::vector<McRow> mc_rows;
  std::optional<IngestReport> ingest;  // set when a data file was read
};

/// Runs `config.workflow` on an already-ingested dataset and writes its report
/// files into `config.out`. Output depends only on the config, data and seed.
ReportResult run_report(const RunConfig& config, const Dataset& data);

/// Ingests `config.data` (if any) and runs the workflow.
ReportResult run_workflow(const RunConfig& config);

/// Pmf of beta for one group under the single-population model.
std::vector<double> single_posterior_pmf(const RunConfig& config, const Support& support, QuantileLevel tau,
                                         const CountVector& counts);

HyperParams hierarchical_priors(const PriorConfig& prior, const Support& support, QuantileLevel tau);

}  // namespace bnq

#pragma once

// Score ingestion (group_id,score,censored) and plain CSV emission.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bnq/hierarchical_gibbs.hpp"
#include "bnq/quantile_core.hpp"

namespace bnq {

struct ScoreRecord {
  std::string group_id;
  double score;
  bool censored;
  std::size_t line = 0;
};

struct IngestReject {
  std::size_t line;
  std::string text;
  std::string reason;
};

struct IngestReport {
  std::size_t rows_read = 0;
  std::vector<IngestReject> rejects;
  std::size_t censored_rows = 0;
  std::size_t accepted_rows = 0;
  double censor_fraction() const noexcept {
    return accepted_rows == 0 ? 0.0 : static_cast<double>(censored_rows) / static_cast<double>(accepted_rows);
  }
};

/// Either an explicit grid lo, lo + step, ..., hi or the distinct accepted scores.
struct SupportSpec {
  bool from_data = false;
  double lo = 0.0;
  double hi = 350.0;
  double step = 1.0;
};

struct Dataset {
  std::optional<Support> support;  // unset only for from-data specs with no usable rows
  std::vector<SubpopData> groups;  // in order of first appearance
  IngestReport report;
};

/// Parses rows; malformed lines go to `report.rejects` rather than throwing.
std::vector<ScoreRecord> parse_scores(std::istream& in, IngestReport& report);

/// Rows whose score is not a support point, or censored rows when
/// `allow_censored` is false, are rejected with their line numbers.
Dataset ingest_scores(std::istream& in, const SupportSpec& spec, bool allow_censored = true);
Dataset ingest_scores(const std::filesystem::path& path, const SupportSpec& spec, bool allow_censored = true);

/// Writes one row per observation so that re-ingesting gives back the same
/// counts and censoring multisets.
void write_scores(std::ostream& out, const Support& support, const std::vector<SubpopData>& groups);

/// %.17g, with "nan" / "inf" / "-inf" for non-finite values.
std::string format_number(double x);

/// Filesystem-safe version of a group label.
std::string sanitize_name(const std::string& name);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  CsvWriter& field(const std::string& s);
  CsvWriter& field(double x);
  CsvWriter& field(std::int64_t x);
  CsvWriter& field(std::size_t x) { return field(static_cast<std::int64_t>(x)); }
  void end_row();
  /// Writes the buffered table; throws if the file cannot be written.
  void save() const;

 private:
  std::filesystem::path path_;
  std::string buffer_;
  bool row_started_ = false;
};

}  // namespace bnq

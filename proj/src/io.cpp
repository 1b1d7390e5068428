#include "bnq/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace bnq {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<bool> parse_flag(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  return std::nullopt;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

std::vector<ScoreRecord> parse_scores(std::istream& in, IngestReport& report) {
  std::vector<ScoreRecord> records;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cols = split_commas(t);
    if (!header_seen) {
      header_seen = true;
      if (cols.size() == 3 && cols[0] == "group_id" && cols[1] == "score" && cols[2] == "censored") continue;
      report.rejects.push_back({lineno, t, "expected header group_id,score,censored"});
      continue;
    }
    ++report.rows_read;
    if (cols.size() != 3) {
      report.rejects.push_back({lineno, t, "expected 3 fields"});
      continue;
    }
    if (cols[0].empty()) {
      report.rejects.push_back({lineno, t, "empty group_id"});
      continue;
    }
    const auto score = parse_double(cols[1]);
    if (!score) {
      report.rejects.push_back({lineno, t, "score is not a number"});
      continue;
    }
    const auto flag = parse_flag(cols[2]);
    if (!flag) {
      report.rejects.push_back({lineno, t, "censored must be true or false"});
      continue;
    }
    records.push_back({cols[0], *score, *flag, lineno});
  }
  return records;
}

Dataset ingest_scores(std::istream& in, const SupportSpec& spec, bool allow_censored) {
  Dataset ds;
  auto records = parse_scores(in, ds.report);

  std::vector<ScoreRecord> kept;
  for (auto& r : records) {
    if (r.censored && !allow_censored) {
      ds.report.rejects.push_back({r.line, r.group_id + "," + format_number(r.score) + ",true",
                                   "censored observation not supported by this workflow"});
      continue;
    }
    kept.push_back(std::move(r));
  }

  if (spec.from_data) {
    std::set<double> distinct;
    for (const auto& r : kept) distinct.insert(r.score);
    if (distinct.size() >= 2) ds.support.emplace(std::vector<double>(distinct.begin(), distinct.end()));
    else if (!kept.empty())
      throw std::invalid_argument("from-data support needs at least two distinct scores");
  } else {
    ds.support = Support::grid(spec.lo, spec.hi, spec.step);
  }
  if (!ds.support) return ds;

  const Support& support = *ds.support;
  std::map<std::string, std::size_t> index;
  for (const auto& r : kept) {
    const auto j = support.find(r.score);
    if (j == Support::npos) {
      ds.report.rejects.push_back({r.line, r.group_id + "," + format_number(r.score), "score is not a support point"});
      continue;
    }
    auto [it, inserted] = index.try_emplace(r.group_id, ds.groups.size());
    if (inserted) ds.groups.push_back(SubpopData{r.group_id, CountVector(support.size()), {}});
    auto& g = ds.groups[it->second];
    if (r.censored) {
      g.censor_lows.push_back(j);
      ++ds.report.censored_rows;
    } else {
      ++g.counts[j];
    }
    ++ds.report.accepted_rows;
  }
  std::stable_sort(ds.report.rejects.begin(), ds.report.rejects.end(),
                   [](const IngestReject& a, const IngestReject& b) { return a.line < b.line; });
  return ds;
}

Dataset ingest_scores(const std::filesystem::path& path, const SupportSpec& spec, bool allow_censored) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return ingest_scores(in, spec, allow_censored);
}

void write_scores(std::ostream& out, const Support& support, const std::vector<SubpopData>& groups) {
  out << "group_id,score,censored\n";
  for (const auto& g : groups) {
    for (std::size_t j = 0; j < g.counts.size(); ++j)
      for (std::int64_t c = 0; c < g.counts[j]; ++c) out << g.id << ',' << format_number(support[j]) << ",false\n";
    for (auto l : g.censor_lows) out << g.id << ',' << format_number(support[l]) << ",true\n";
  }
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string sanitize_name(const std::string& name) {
  std::string out;
  for (unsigned char c : name) out.push_back(std::isalnum(c) || c == '-' || c == '_' || c == '.' ? static_cast<char>(c) : '_');
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : path_(path) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) buffer_ += ',';
    buffer_ += header[i];
  }
  buffer_ += '\n';
}

CsvWriter& CsvWriter::field(const std::string& s) {
  if (row_started_) buffer_ += ',';
  row_started_ = true;
  if (s.find_first_of(",\"\n") != std::string::npos) {
    buffer_ += '"';
    for (char c : s) {
      if (c == '"') buffer_ += '"';
      buffer_ += c;
    }
    buffer_ += '"';
  } else {
    buffer_ += s;
  }
  return *this;
}

CsvWriter& CsvWriter::field(double x) { return field(format_number(x)); }
CsvWriter& CsvWriter::field(std::int64_t x) { return field(std::to_string(x)); }

void CsvWriter::end_row() {
  buffer_ += '\n';
  row_started_ = false;
}

void CsvWriter::save() const {
  std::ofstream out(path_, std::ios::binary);
  out << buffer_;
  if (!out) throw std::runtime_error("cannot write " + path_.string());
}

}  // namespace bnq

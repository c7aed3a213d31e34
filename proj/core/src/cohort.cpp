#include "triagekit/cohort.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "triagekit/errors.hpp"
#include "triagekit/numeric.hpp"

namespace triagekit {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Whole-cell numeric parse; rejects trailing garbage and non-finite values.
std::optional<double> parse_number(std::string_view cell) {
  const std::size_t skip = (!cell.empty() && cell.front() == '+') ? 1 : 0;
  double value = 0.0;
  const char* first = cell.data() + skip;
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || skip == cell.size()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

// Real exports vary: accepts M, F, Male, Female in any case; normalized here
// at the boundary, full words everywhere else.
std::optional<Sex> parse_sex(std::string_view token) {
  if (token.empty()) return Sex::unknown;
  std::string lower(token);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "male" || lower == "m") return Sex::male;
  if (lower == "female" || lower == "f") return Sex::female;
  return std::nullopt;
}

std::optional<Severity> parse_severity(std::string_view token) {
  if (token.empty()) return Severity::unknown;
  if (token == "mild") return Severity::mild;
  if (token == "moderate") return Severity::moderate;
  if (token == "severe") return Severity::severe;
  return std::nullopt;
}

std::optional<PatientOutcome> parse_outcome(std::string_view token) {
  if (token == "survived") return PatientOutcome::survived;
  if (token == "deceased") return PatientOutcome::deceased;
  return std::nullopt;
}

std::size_t require_column(const std::vector<std::string>& header, const std::string& name,
                           std::string_view origin) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (trim(header[i]) == name) return i;
  }
  throw SchemaError(std::string(origin) + ": missing required column '" + name + "'");
}

}  // namespace

std::string_view to_token(Sex sex) {
  switch (sex) {
    case Sex::male: return "male";
    case Sex::female: return "female";
    case Sex::unknown: break;
  }
  return "unknown";
}

std::string_view to_token(Severity severity) {
  switch (severity) {
    case Severity::mild: return "mild";
    case Severity::moderate: return "moderate";
    case Severity::severe: return "severe";
    case Severity::unknown: break;
  }
  return "unknown";
}

std::string_view to_token(PatientOutcome outcome) {
  return outcome == PatientOutcome::survived ? "survived" : "deceased";
}

CsvSchema CsvSchema::standard() {
  CsvSchema schema;
  schema.labs = {
      {"LDH", "ldh", "ldh_assay"},
      {"hs_CRP", "crp", "crp_assay"},
      {"lymph_pct", "lymph_pct", ""},
  };
  return schema;
}

std::pair<Cohort, IngestReport> ingest_csv(const std::filesystem::path& path,
                                           const CsvSchema& schema,
                                           const AssayRegistry& registry) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileUnreadableError(path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return ingest_csv_text(buf.str(), path.string(), schema, registry);
}

std::pair<Cohort, IngestReport> ingest_csv_text(std::string_view text, std::string_view origin,
                                                const CsvSchema& schema,
                                                const AssayRegistry& registry) {
  const auto rows = csv::parse(text);
  if (rows.empty()) throw SchemaError(std::string(origin) + ": empty file, header row required");

  const auto& header = rows.front();
  const std::size_t id_col = require_column(header, schema.id_column, origin);
  const std::size_t age_col = require_column(header, schema.age_column, origin);
  const std::size_t sex_col = require_column(header, schema.sex_column, origin);
  const std::size_t severity_col = require_column(header, schema.severity_column, origin);
  const std::size_t outcome_col = require_column(header, schema.outcome_column, origin);
  struct LabCols {
    const LabColumn* lab;
    std::size_t value_col;
    std::size_t assay_col;  // npos when the schema names no assay column
  };
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<LabCols> lab_cols;
  for (const auto& lab : schema.labs) {
    const std::size_t value_col = require_column(header, lab.value_column, origin);
    const std::size_t assay_col =
        lab.assay_column.empty() ? npos : require_column(header, lab.assay_column, origin);
    lab_cols.push_back({&lab, value_col, assay_col});
  }

  Cohort cohort;
  cohort.source = std::string(origin);
  IngestReport report;
  std::set<std::string> seen_ids;

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    ++report.total_rows;

    auto malformed = [&](const std::string& reason) {
      ++report.excluded_malformed;
      ++report.malformed_by_reason[reason];
    };

    if (row.size() != header.size()) {
      malformed("column count");
      continue;
    }
    auto cell = [&](std::size_t col) { return trim(row[col]); };

    PatientRecord rec;
    rec.id = std::string(cell(id_col));
    if (rec.id.empty()) {
      malformed("empty id");
      continue;
    }

    bool bad = false;
    if (const auto age_cell = cell(age_col); !age_cell.empty()) {
      const auto age = parse_number(age_cell);
      if (!age || *age < 0.0 || *age > 130.0) {
        malformed("bad age");
        bad = true;
      } else {
        rec.age = *age;
      }
    }
    if (bad) continue;

    if (const auto sex = parse_sex(cell(sex_col))) {
      rec.sex = *sex;
    } else {
      malformed("bad sex");
      continue;
    }
    if (const auto severity = parse_severity(cell(severity_col))) {
      rec.severity = *severity;
    } else {
      malformed("bad severity");
      continue;
    }
    if (const auto outcome = parse_outcome(cell(outcome_col))) {
      rec.outcome = *outcome;
    } else {
      malformed("bad outcome");
      continue;
    }

    std::vector<std::string> missing;
    for (const auto& lc : lab_cols) {
      const auto value_cell = cell(lc.value_col);
      std::string assay_id;
      if (lc.assay_col != npos) assay_id = std::string(cell(lc.assay_col));

      if (!assay_id.empty() && registry.find(assay_id) == nullptr) {
        malformed("unknown assay");
        bad = true;
        break;
      }
      if (value_cell.empty()) {
        missing.push_back(lc.lab->feature);
        continue;
      }
      const auto value = parse_number(value_cell);
      if (!value || *value < 0.0) {
        malformed("bad lab value");
        bad = true;
        break;
      }
      rec.labs[lc.lab->feature] = LabMeasurement{*value, assay_id};
    }
    if (bad) continue;

    if (!seen_ids.insert(rec.id).second) throw DuplicateIdError(rec.id);
    for (const auto& feature : missing) ++report.missing_by_feature[feature];
    cohort.records.push_back(std::move(rec));
  }

  report.kept = cohort.records.size();
  return {std::move(cohort), std::move(report)};
}

FilterResult completeness_filter(const Cohort& cohort, const std::set<std::string>& required) {
  FilterResult result;
  result.kept.source = cohort.source;
  result.excluded.source = cohort.source;
  for (const auto& rec : cohort.records) {
    const bool complete = std::all_of(required.begin(), required.end(), [&](const auto& feature) {
      return rec.labs.contains(feature);
    });
    (complete ? result.kept : result.excluded).records.push_back(rec);
  }
  return result;
}

LoadedCohort load_cohort(const std::filesystem::path& path, const CsvSchema& schema,
                         const AssayRegistry& registry, const std::set<std::string>& required) {
  auto [cohort, report] = ingest_csv(path, schema, registry);
  auto filtered = completeness_filter(cohort, required);
  report.excluded_missing_labs = filtered.excluded.size();
  report.kept = filtered.kept.size();
  return {std::move(filtered.kept), std::move(filtered.excluded), std::move(report)};
}

namespace {

NumericSummary summarize_values(std::vector<double> values) {
  NumericSummary s;
  s.n = values.size();
  if (values.empty()) return s;

  double sum = 0.0;
  for (const double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);

  if (s.n == 1) {
    s.stddev = 0.0;
    s.stddev_degenerate = true;
  } else {
    double ss = 0.0;
    for (const double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
  }

  std::sort(values.begin(), values.end());
  const std::size_t mid = s.n / 2;
  s.median = (s.n % 2 == 1) ? values[mid] : (values[mid - 1] + values[mid]) / 2.0;
  return s;
}

}  // namespace

std::optional<double> SummaryStats::share_pct(std::size_t count) const {
  return percent_2(count, cohort_size);
}

SummaryStats summarize(const Cohort& cohort) {
  SummaryStats stats;
  stats.cohort_size = cohort.size();

  std::map<std::string, std::vector<double>> feature_values;
  std::vector<double> ages;
  for (const auto& rec : cohort.records) {
    for (const auto& [feature, lab] : rec.labs) feature_values[feature].push_back(lab.value);
    if (rec.age) ages.push_back(*rec.age);
    ++stats.sex_counts[rec.sex];
    ++stats.severity_counts[rec.severity];
    ++stats.outcome_counts[rec.outcome];
  }
  for (auto& [feature, values] : feature_values) {
    stats.features[feature] = summarize_values(std::move(values));
  }
  stats.age = summarize_values(std::move(ages));
  return stats;
}

std::string write_cohort_csv(const Cohort& cohort, const CsvSchema& schema) {
  std::vector<std::string> header = {schema.id_column, schema.age_column, schema.sex_column,
                                     schema.severity_column, schema.outcome_column};
  for (const auto& lab : schema.labs) {
    header.push_back(lab.value_column);
    if (!lab.assay_column.empty()) header.push_back(lab.assay_column);
  }

  std::string out = csv::join_row(header);
  for (const auto& rec : cohort.records) {
    std::vector<std::string> row;
    row.push_back(rec.id);
    row.push_back(rec.age ? format_double_shortest(*rec.age) : "");
    row.push_back(rec.sex == Sex::unknown ? "" : std::string(to_token(rec.sex)));
    row.push_back(rec.severity == Severity::unknown ? "" : std::string(to_token(rec.severity)));
    row.push_back(std::string(to_token(rec.outcome)));
    for (const auto& lab : schema.labs) {
      const auto it = rec.labs.find(lab.feature);
      row.push_back(it != rec.labs.end() ? format_double_shortest(it->second.value) : "");
      if (!lab.assay_column.empty()) {
        row.push_back(it != rec.labs.end() ? it->second.assay_id : "");
      }
    }
    out += csv::join_row(row);
  }
  return out;
}

}  // namespace triagekit

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "triagekit/harmonize.hpp"

namespace triagekit {

enum class Sex { male, female, unknown };
enum class Severity { mild, moderate, severe, unknown };
enum class PatientOutcome { survived, deceased };

std::string_view to_token(Sex sex);
std::string_view to_token(Severity severity);
std::string_view to_token(PatientOutcome outcome);

struct PatientRecord {
  std::string id;
  std::optional<double> age;  // years, in [0, 130] when present
  Sex sex = Sex::unknown;
  Severity severity = Severity::unknown;
  PatientOutcome outcome = PatientOutcome::survived;
  LabPanel labs;  // feature name -> (value, assay id); values finite and >= 0

  friend bool operator==(const PatientRecord&, const PatientRecord&) = default;
};

struct Cohort {
  std::vector<PatientRecord> records;
  std::string source;  // provenance: file path or a synth tag

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }

  friend bool operator==(const Cohort& a, const Cohort& b) { return a.records == b.records; }
};

/// Maps CSV columns onto record fields. Lab columns pair a value column with
/// an optional assay-id column.
struct LabColumn {
  std::string feature;
  std::string value_column;
  std::string assay_column;  // empty: no assay context for this feature
};

struct CsvSchema {
  std::string id_column = "id";
  std::string age_column = "age";
  std::string sex_column = "sex";
  std::string severity_column = "severity";
  std::string outcome_column = "outcome";
  std::vector<LabColumn> labs;

  /// The stock layout: id,age,sex,severity,outcome,ldh,ldh_assay,crp,crp_assay,lymph_pct
  static CsvSchema standard();
};

/// Ingestion funnel. Every excluded row is tallied with a reason; nothing is
/// dropped silently. kept + excluded_missing_labs + excluded_malformed ==
/// total_rows once the completeness filter has been applied.
struct IngestReport {
  std::size_t total_rows = 0;
  std::size_t kept = 0;
  std::size_t excluded_missing_labs = 0;
  std::size_t excluded_malformed = 0;
  std::map<std::string, std::size_t> missing_by_feature;   // over well-formed rows
  std::map<std::string, std::size_t> malformed_by_reason;
};

/// Parse a cohort CSV. Malformed rows (unparseable numerals, unknown tokens,
/// out-of-range values, assay ids absent from the registry) are excluded and
/// counted, never silently dropped. Missing lab cells are tolerated here;
/// completeness is a separate, explicit step.
/// Throws FileUnreadableError, SchemaError (required column absent),
/// DuplicateIdError.
std::pair<Cohort, IngestReport> ingest_csv(const std::filesystem::path& path,
                                           const CsvSchema& schema, const AssayRegistry& registry);

/// Same, from in-memory text (origin only labels provenance).
std::pair<Cohort, IngestReport> ingest_csv_text(std::string_view text, std::string_view origin,
                                                const CsvSchema& schema,
                                                const AssayRegistry& registry);

struct FilterResult {
  Cohort kept;
  Cohort excluded;
};

/// Partition a cohort into records carrying a present, finite value for every
/// required feature, and the rest. Order-preserving; kept + excluded == input.
FilterResult completeness_filter(const Cohort& cohort, const std::set<std::string>& required);

/// ingest_csv + completeness_filter, with the funnel accounted in one report.
struct LoadedCohort {
  Cohort kept;
  Cohort excluded;
  IngestReport report;
};
LoadedCohort load_cohort(const std::filesystem::path& path, const CsvSchema& schema,
                         const AssayRegistry& registry, const std::set<std::string>& required);

struct NumericSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample (n-1); 0 by convention for n == 1
  double median = 0.0;
  bool stddev_degenerate = false;  // n == 1
};

struct SummaryStats {
  std::size_t cohort_size = 0;
  std::map<std::string, NumericSummary> features;
  NumericSummary age;  // n counts records with a recorded age
  std::map<Sex, std::size_t> sex_counts;
  std::map<Severity, std::size_t> severity_counts;
  std::map<PatientOutcome, std::size_t> outcome_counts;

  /// Display share of the cohort, rounded half-up to 2 decimals;
  /// empty for an empty cohort.
  std::optional<double> share_pct(std::size_t count) const;
};

/// Central-tendency summary: arithmetic mean, sample standard deviation
/// (divisor n-1), median (mean of the two middle elements for even n).
/// An empty cohort yields empty stats, not an error.
SummaryStats summarize(const Cohort& cohort);

/// Emit a cohort in the given schema's column layout. Values are written in
/// shortest exact decimal form, so emission is byte-deterministic.
std::string write_cohort_csv(const Cohort& cohort, const CsvSchema& schema);

}  // namespace triagekit

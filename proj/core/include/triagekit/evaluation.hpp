#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "triagekit/cohort.hpp"
#include "triagekit/harmonize.hpp"
#include "triagekit/rule.hpp"

namespace triagekit {

/// Two-class confusion tallies for one stratum. Counts, not rates: rates are
/// derived on demand so that merging strata stays exact.
struct ConfusionCounts {
  std::size_t survivors_correct = 0;  // survived, rule said Survival
  std::size_t survivors_missed = 0;   // survived, rule said Death
  std::size_t deceased_correct = 0;   // deceased, rule said Death
  std::size_t deceased_missed = 0;    // deceased, rule said Survival

  std::size_t survivors_total() const noexcept { return survivors_correct + survivors_missed; }
  std::size_t deceased_total() const noexcept { return deceased_correct + deceased_missed; }
  std::size_t total() const noexcept { return survivors_total() + deceased_total(); }

  ConfusionCounts& operator+=(const ConfusionCounts& other);

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Evaluation of one rule over one cohort, stratified by disease severity.
/// Severity strata cover survivors only; the deceased form a single stratum
/// regardless of admission severity. Recalls are percentages rounded half-up
/// to two decimals, absent (nullopt) when the stratum is empty.
struct StratifiedEvalReport {
  std::string rule_name;
  HarmonizationMode mode = HarmonizationMode::identity;
  std::size_t cohort_size = 0;  // records offered for evaluation

  ConfusionCounts overall;
  std::map<Severity, ConfusionCounts> by_severity;  // survivor records only

  std::size_t excluded = 0;  // offered but not classifiable
  std::map<std::string, std::size_t> excluded_reasons;
  std::vector<std::string> warnings;  // e.g. negative harmonized values

  std::optional<double> survival_recall() const;
  std::optional<double> mortality_recall() const;
  std::optional<double> severity_recall(Severity severity) const;
  std::optional<double> survival_share() const;   // survivors / classified
  std::optional<double> mortality_share() const;  // deaths / classified
};

/// Run the rule over every record: harmonize the panel into the rule's frame,
/// predict, and tally against the recorded outcome. Records whose panel lacks
/// a feature on the evaluated path are excluded and counted, never silently
/// dropped. Configuration-level defects (unknown assay id, missing mapping)
/// abort the whole evaluation via EvaluationFailure naming the record.
StratifiedEvalReport evaluate(const RuleTree& tree, const Cohort& cohort,
                              const HarmonizationConfig& cfg, const AssayRegistry& registry);

enum class ReportFormat { json, markdown, svg_bar_chart };

std::string_view to_token(ReportFormat format);
std::optional<ReportFormat> report_format_from_token(std::string_view token);

/// Render a report deterministically: equal reports yield byte-equal output,
/// with no timestamps or environment-dependent content in any format.
std::string render_report(const StratifiedEvalReport& report, ReportFormat format);

}  // namespace triagekit

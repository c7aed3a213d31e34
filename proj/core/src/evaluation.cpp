#include "triagekit/evaluation.hpp"

#include <cctype>
#include <set>
#include <sstream>

#include "triagekit/errors.hpp"
#include "triagekit/numeric.hpp"

namespace triagekit {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) {
  survivors_correct += other.survivors_correct;
  survivors_missed += other.survivors_missed;
  deceased_correct += other.deceased_correct;
  deceased_missed += other.deceased_missed;
  return *this;
}

std::optional<double> StratifiedEvalReport::survival_recall() const {
  return percent_2(overall.survivors_correct, overall.survivors_total());
}

std::optional<double> StratifiedEvalReport::mortality_recall() const {
  return percent_2(overall.deceased_correct, overall.deceased_total());
}

std::optional<double> StratifiedEvalReport::severity_recall(Severity severity) const {
  const auto it = by_severity.find(severity);
  if (it == by_severity.end()) return std::nullopt;
  return percent_2(it->second.survivors_correct, it->second.survivors_total());
}

std::optional<double> StratifiedEvalReport::survival_share() const {
  return percent_2(overall.survivors_total(), overall.total());
}

std::optional<double> StratifiedEvalReport::mortality_share() const {
  return percent_2(overall.deceased_total(), overall.total());
}

StratifiedEvalReport evaluate(const RuleTree& tree, const Cohort& cohort,
                              const HarmonizationConfig& cfg, const AssayRegistry& registry) {
  std::set<std::string> sensitive;
  for (const auto& feature : tree.features()) {
    if (feature.assay_sensitive) sensitive.insert(feature.name);
  }

  StratifiedEvalReport report;
  report.rule_name = tree.name();
  report.mode = cfg.mode;
  report.cohort_size = cohort.size();

  for (const auto& rec : cohort.records) {
    HarmonizedPanel panel;
    try {
      panel = harmonize_panel(rec.labs, cfg, registry, sensitive);
    } catch (const UnknownAssayError& e) {
      throw EvaluationFailure(rec.id, e.what());
    } catch (const MissingMappingError& e) {
      throw EvaluationFailure(rec.id, e.what());
    }
    for (const auto& warning : panel.warnings) {
      report.warnings.push_back("record '" + rec.id + "': " + warning);
    }

    PredictionTrace trace;
    try {
      trace = predict(tree, panel.values);
    } catch (const MissingFeatureError& e) {
      ++report.excluded;
      ++report.excluded_reasons["missing " + e.feature()];
      continue;
    } catch (const NonFiniteValueError&) {
      ++report.excluded;
      ++report.excluded_reasons["non-finite value"];
      continue;
    }

    const bool survived = rec.outcome == PatientOutcome::survived;
    const bool said_survival = trace.outcome == Outcome::survival;
    ConfusionCounts delta;
    if (survived) {
      (said_survival ? delta.survivors_correct : delta.survivors_missed) = 1;
      report.by_severity[rec.severity] += delta;
    } else {
      (said_survival ? delta.deceased_missed : delta.deceased_correct) = 1;
    }
    report.overall += delta;
  }
  return report;
}

std::string_view to_token(ReportFormat format) {
  switch (format) {
    case ReportFormat::json: return "json";
    case ReportFormat::markdown: return "markdown";
    case ReportFormat::svg_bar_chart: break;
  }
  return "svg_bar_chart";
}

std::optional<ReportFormat> report_format_from_token(std::string_view token) {
  if (token == "json") return ReportFormat::json;
  if (token == "markdown" || token == "md") return ReportFormat::markdown;
  if (token == "svg_bar_chart" || token == "svg") return ReportFormat::svg_bar_chart;
  return std::nullopt;
}

namespace {

constexpr Severity kSeverityOrder[] = {Severity::mild, Severity::moderate, Severity::severe};

ConfusionCounts severity_counts(const StratifiedEvalReport& report, Severity severity) {
  const auto it = report.by_severity.find(severity);
  return it == report.by_severity.end() ? ConfusionCounts{} : it->second;
}

std::string json_string(std::string_view s) {
  std::string out = "\"";
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
  return out;
}

// Percentages render as fixed two-decimal JSON number literals (88.00, not
// 88.0): valid JSON, and grep-stable for the published recall figures.
std::string json_pct(std::optional<double> pct) {
  return pct ? format_fixed_2(*pct) : "null";
}

// The report serializer is hand-rolled: keys stay sorted and numbers keep
// the fixed formatting above, neither of which a generic dumper guarantees.
std::string render_json(const StratifiedEvalReport& report) {
  std::ostringstream o;
  const auto stratum = [&](std::string_view ind, std::string_view name, std::size_t total,
                           std::size_t correct, bool last) {
    o << ind << '"' << name << "\": {\n";
    o << ind << "  \"correct\": " << correct << ",\n";
    o << ind << "  \"recall\": " << json_pct(percent_2(correct, total)) << ",\n";
    o << ind << "  \"total\": " << total << "\n";
    o << ind << '}' << (last ? "" : ",") << '\n';
  };

  std::vector<std::pair<std::string, ConfusionCounts>> severities;
  for (const Severity severity : kSeverityOrder) {
    severities.emplace_back(to_token(severity), severity_counts(report, severity));
  }
  if (const auto unknown = severity_counts(report, Severity::unknown); unknown.survivors_total() > 0) {
    severities.emplace_back("unknown", unknown);
  }

  o << "{\n";

  o << "  \"by_severity\": {\n";
  for (std::size_t i = 0; i < severities.size(); ++i) {
    const auto& [name, counts] = severities[i];
    stratum("    ", name, counts.survivors_total(), counts.survivors_correct,
            i + 1 == severities.size());
  }
  o << "  },\n";

  o << "  \"classified\": " << report.overall.total() << ",\n";
  o << "  \"cohort_size\": " << report.cohort_size << ",\n";

  o << "  \"excluded\": {\n";
  o << "    \"count\": " << report.excluded << ",\n";
  if (report.excluded_reasons.empty()) {
    o << "    \"reasons\": {}\n";
  } else {
    o << "    \"reasons\": {\n";
    std::size_t i = 0;
    for (const auto& [reason, n] : report.excluded_reasons) {
      o << "      " << json_string(reason) << ": " << n
        << (++i == report.excluded_reasons.size() ? "" : ",") << '\n';
    }
    o << "    }\n";
  }
  o << "  },\n";

  o << "  \"mode\": " << json_string(to_token(report.mode)) << ",\n";
  o << "  \"mortality_recall\": " << json_pct(report.mortality_recall()) << ",\n";
  o << "  \"mortality_share\": " << json_pct(report.mortality_share()) << ",\n";

  o << "  \"overall\": {\n";
  stratum("    ", "deceased", report.overall.deceased_total(), report.overall.deceased_correct, false);
  stratum("    ", "survivors", report.overall.survivors_total(), report.overall.survivors_correct,
          true);
  o << "  },\n";

  o << "  \"rule\": " << json_string(report.rule_name) << ",\n";

  o << "  \"severity_recall\": {\n";
  for (std::size_t i = 0; i < severities.size(); ++i) {
    const auto& [name, counts] = severities[i];
    o << "    \"" << name
      << "\": " << json_pct(percent_2(counts.survivors_correct, counts.survivors_total()))
      << (i + 1 == severities.size() ? "" : ",") << '\n';
  }
  o << "  },\n";

  o << "  \"survival_recall\": " << json_pct(report.survival_recall()) << ",\n";
  o << "  \"survival_share\": " << json_pct(report.survival_share()) << ",\n";

  if (report.warnings.empty()) {
    o << "  \"warnings\": []\n";
  } else {
    o << "  \"warnings\": [\n";
    for (std::size_t i = 0; i < report.warnings.size(); ++i) {
      o << "    " << json_string(report.warnings[i])
        << (i + 1 == report.warnings.size() ? "" : ",") << '\n';
    }
    o << "  ]\n";
  }

  o << "}\n";
  return o.str();
}

std::string recall_cell(std::size_t correct, std::size_t total) {
  const auto recall = percent_2(correct, total);
  return recall ? format_fixed_2(*recall) + "%" : "NA";
}

std::string render_markdown(const StratifiedEvalReport& report) {
  std::ostringstream out;
  out << "# Triage evaluation: " << report.rule_name << "\n\n";
  out << "Mode: " << to_token(report.mode) << ". Cohort: " << report.cohort_size << " records, "
      << report.overall.total() << " classified, " << report.excluded << " excluded.\n\n";
  out << "| Stratum | Records | Correct | Recall |\n";
  out << "| --- | ---: | ---: | ---: |\n";

  const auto row = [&](std::string_view label, const std::size_t total,
                       const std::size_t correct) {
    out << "| " << label << " | " << total << " | " << correct << " | "
        << recall_cell(correct, total) << " |\n";
  };
  row("Survivors (all)", report.overall.survivors_total(), report.overall.survivors_correct);
  row("Deceased", report.overall.deceased_total(), report.overall.deceased_correct);
  for (const Severity severity : kSeverityOrder) {
    const auto counts = severity_counts(report, severity);
    std::string label(to_token(severity));
    label[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(label[0])));
    row(label, counts.survivors_total(), counts.survivors_correct);
  }
  if (const auto unknown = severity_counts(report, Severity::unknown); unknown.survivors_total() > 0) {
    row("Unknown severity", unknown.survivors_total(), unknown.survivors_correct);
  }

  if (!report.excluded_reasons.empty()) {
    out << "\nExcluded records:\n\n";
    for (const auto& [reason, n] : report.excluded_reasons) {
      out << "- " << reason << ": " << n << "\n";
    }
  }
  if (!report.warnings.empty()) {
    out << "\nWarnings:\n\n";
    for (const auto& warning : report.warnings) out << "- " << warning << "\n";
  }
  return out.str();
}

std::string xml_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (const char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string render_svg(const StratifiedEvalReport& report) {
  struct Bar {
    std::string label;
    std::optional<double> pct;
  };
  const auto mild = severity_counts(report, Severity::mild);
  const auto moderate = severity_counts(report, Severity::moderate);
  const auto severe = severity_counts(report, Severity::severe);
  const Bar bars[] = {
      {"Survival", report.survival_recall()},
      {"Mortality", report.mortality_recall()},
      {"Mild", percent_2(mild.survivors_correct, mild.survivors_total())},
      {"Moderate", percent_2(moderate.survivors_correct, moderate.survivors_total())},
      {"Severe", percent_2(severe.survivors_correct, severe.survivors_total())},
  };

  // Fixed 520x260 canvas: baseline y=220, 1.8 px per percentage point.
  constexpr double kBaseline = 220.0;
  constexpr double kScale = 1.8;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"520\" height=\"260\" "
         "viewBox=\"0 0 520 260\">\n";
  out << "  <rect width=\"520\" height=\"260\" fill=\"white\"/>\n";
  out << "  <text x=\"260\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">"
      << xml_escape(report.rule_name) << ": recall by stratum (%)</text>\n";
  for (int i = 0; i < 5; ++i) {
    const auto& bar = bars[i];
    const double x = 40.0 + i * 92.0 + 18.0;
    const double height = bar.pct ? *bar.pct * kScale : 0.0;
    const double top = kBaseline - height;
    out << "  <rect x=\"" << format_double_shortest(x) << "\" y=\""
        << format_double_shortest(top) << "\" width=\"56\" height=\""
        << format_double_shortest(height) << "\" fill=\"#5b8ab5\"/>\n";
    out << "  <text x=\"" << format_double_shortest(x + 28.0) << "\" y=\""
        << format_double_shortest(top - 6.0)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << (bar.pct ? format_fixed_2(*bar.pct) + "%" : "NA") << "</text>\n";
    out << "  <text x=\"" << format_double_shortest(x + 28.0)
        << "\" y=\"240\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << bar.label << "</text>\n";
  }
  out << "  <line x1=\"40\" y1=\"220\" x2=\"500\" y2=\"220\" stroke=\"black\"/>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace

std::string render_report(const StratifiedEvalReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::json: return render_json(report);
    case ReportFormat::markdown: return render_markdown(report);
    case ReportFormat::svg_bar_chart: break;
  }
  return render_svg(report);
}

}  // namespace triagekit

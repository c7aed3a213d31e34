#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "triagekit/cohort.hpp"
#include "triagekit/errors.hpp"
#include "triagekit/evaluation.hpp"
#include "triagekit/harmonize.hpp"
#include "triagekit/numeric.hpp"
#include "triagekit/rule_parser.hpp"
#include "triagekit/rule_printer.hpp"
#include "triagekit/run_config.hpp"
#include "triagekit/synth.hpp"

using namespace triagekit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

// Thrown after the diagnostic has already been written to stderr.
struct SilentDataFailure {};

// Flag misuse detected after CLI11 parsing (missing required combination).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CheckRuleArgs {
  std::string rule;
};

struct HarmonizeArgs {
  std::string cohort;
  std::string rule;
  std::string registry;
  std::string config;
  std::string mode;
  std::vector<std::string> maps;
  std::string out;
};

struct SynthArgs {
  std::string rule;
  std::string spec;
  std::string config;
  std::optional<std::uint64_t> seed;
  bool no_fit = false;
  std::string out;
};

struct EvaluateArgs {
  std::string rule;
  std::string cohort;
  std::string registry;
  std::string config;
  std::vector<std::string> formats;
  std::string out_dir;
};

struct SummarizeArgs {
  std::string cohort;
  std::string registry;
  std::string config;
  std::vector<std::string> required;
};

RunConfig resolve_config(const std::string& arg) {
  if (arg.empty()) return {};
  if (const auto mode = harmonization_mode_from_token(arg)) return RunConfig::for_mode(*mode);
  return load_run_config(arg);
}

AssayRegistry resolve_registry(const std::string& flag, const RunConfig& cfg) {
  if (!flag.empty()) return AssayRegistry::load(flag);
  if (cfg.registry_path) return AssayRegistry::load(*cfg.registry_path);
  return default_assay_registry();
}

RuleTree load_rule(const std::filesystem::path& path) {
  auto result = parse_rule_file(path);
  if (!result.ok()) {
    std::cerr << path.string() << ":" << result.error->to_string() << "\n";
    throw SilentDataFailure{};
  }
  return *std::move(result.tree);
}

std::filesystem::path require_path(const std::string& flag,
                                   const std::optional<std::filesystem::path>& from_config,
                                   const char* what) {
  if (!flag.empty()) return flag;
  if (from_config) return *from_config;
  throw UsageError(std::string("a ") + what + " is required (flag or config file)");
}

void emit(const std::string& out, const std::string& data) {
  if (out.empty() || out == "-") {
    std::cout << data;
    return;
  }
  const std::filesystem::path path{out};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file || !(file << data) || !file.flush()) {
    throw Error("cannot write output file: " + out);
  }
}

void report_funnel(const IngestReport& report) {
  std::cerr << "ingest: " << report.total_rows << " rows, " << report.kept << " kept, "
            << report.excluded_missing_labs << " missing labs, " << report.excluded_malformed
            << " malformed\n";
  for (const auto& [reason, n] : report.malformed_by_reason) {
    std::cerr << "  malformed (" << reason << "): " << n << "\n";
  }
}

std::set<std::string> rule_feature_names(const RuleTree& tree) {
  std::set<std::string> names;
  for (const auto& feature : tree.features()) names.insert(feature.name);
  return names;
}

int run_check_rule(const CheckRuleArgs& args) {
  const RuleTree tree = load_rule(args.rule);
  std::cout << print_rule(tree);
  return kExitOk;
}

int run_harmonize(const HarmonizeArgs& args) {
  RunConfig cfg = resolve_config(args.config);
  if (!args.mode.empty()) {
    const auto mode = harmonization_mode_from_token(args.mode);
    if (!mode) throw UsageError("unknown harmonization mode '" + args.mode + "'");
    cfg.harmonization.mode = *mode;
  } else if (args.config.empty()) {
    cfg.harmonization.mode = HarmonizationMode::affine_interval;  // rewriting is the point
  }
  for (const auto& map_arg : args.maps) {
    const auto eq = map_arg.find('=');
    const auto arrow = map_arg.find("->");
    if (eq == std::string::npos || arrow == std::string::npos || arrow < eq) {
      throw UsageError("--map expects FEATURE=SOURCE->TARGET, got '" + map_arg + "'");
    }
    FeatureMapping mapping{map_arg.substr(eq + 1, arrow - eq - 1), map_arg.substr(arrow + 2)};
    if (mapping.source_assay.empty() || mapping.target_assay.empty()) {
      throw UsageError("--map expects FEATURE=SOURCE->TARGET, got '" + map_arg + "'");
    }
    cfg.harmonization.mappings[map_arg.substr(0, eq)] = std::move(mapping);
  }

  const AssayRegistry registry = resolve_registry(args.registry, cfg);
  const auto cohort_path = require_path(args.cohort, cfg.cohort_path, "cohort CSV");
  auto [cohort, report] = ingest_csv(cohort_path, cfg.schema, registry);
  report_funnel(report);

  // Only assay-sensitive features get rewritten; the others pass through
  // untouched, matching what evaluation does internally.
  std::set<std::string> sensitive;
  if (!args.rule.empty()) {
    const RuleTree tree = load_rule(args.rule);
    for (const auto& feature : tree.features()) {
      if (feature.assay_sensitive) sensitive.insert(feature.name);
    }
  } else {
    for (const auto& [feature, mapping] : cfg.harmonization.mappings) sensitive.insert(feature);
  }

  Cohort rewritten;
  rewritten.source = cohort.source;
  for (const auto& rec : cohort.records) {
    const HarmonizedPanel panel = harmonize_panel(rec.labs, cfg.harmonization, registry, sensitive);
    for (const auto& warning : panel.warnings) {
      std::cerr << "record '" << rec.id << "': " << warning << "\n";
    }
    PatientRecord out = rec;
    for (auto& [feature, lab] : out.labs) {
      lab.value = panel.values.at(feature);
      if (cfg.harmonization.mode != HarmonizationMode::identity && sensitive.contains(feature)) {
        if (const auto it = cfg.harmonization.mappings.find(feature);
            it != cfg.harmonization.mappings.end()) {
          lab.assay_id = it->second.target_assay;
        }
      }
    }
    rewritten.records.push_back(std::move(out));
  }
  emit(args.out, write_cohort_csv(rewritten, cfg.schema));
  return kExitOk;
}

int run_synth(const SynthArgs& args) {
  RunConfig cfg = resolve_config(args.config);
  const auto rule_path = require_path(args.rule, cfg.rule_path, "rule file");
  const RuleTree tree = load_rule(rule_path);

  SynthSpec spec = load_synth_spec(args.spec);
  if (cfg.seed) spec.seed = *cfg.seed;
  if (args.seed) spec.seed = *args.seed;

  Cohort cohort = generate(tree, spec);
  if (!spec.mean_targets.empty() && !args.no_fit) {
    FitResult fit = fit_marginals(tree, cohort, spec.mean_targets, spec.bounds);
    for (const auto& entry : fit.report) {
      std::cerr << "fit " << entry.name << ": target " << format_double_shortest(entry.target);
      if (entry.tolerance) std::cerr << " +- " << format_double_shortest(*entry.tolerance);
      std::cerr << ", before " << format_double_shortest(entry.achieved_before) << ", after "
                << format_double_shortest(entry.achieved_after) << ", "
                << (entry.reached ? "reached" : "UNREACHED") << "\n";
    }
    cohort = std::move(fit.cohort);
  }
  emit(args.out, write_cohort_csv(cohort, cfg.schema));
  return kExitOk;
}

const char* format_extension(ReportFormat format) {
  switch (format) {
    case ReportFormat::json: return "json";
    case ReportFormat::markdown: return "md";
    case ReportFormat::svg_bar_chart: break;
  }
  return "svg";
}

int run_evaluate(const EvaluateArgs& args) {
  RunConfig cfg = resolve_config(args.config);
  const auto rule_path = require_path(args.rule, cfg.rule_path, "rule file");
  const auto cohort_path = require_path(args.cohort, cfg.cohort_path, "cohort CSV");
  const AssayRegistry registry = resolve_registry(args.registry, cfg);

  const RuleTree tree = load_rule(rule_path);
  const std::set<std::string> required =
      cfg.required_features.empty() ? rule_feature_names(tree) : cfg.required_features;

  const LoadedCohort loaded = load_cohort(cohort_path, cfg.schema, registry, required);
  report_funnel(loaded.report);

  const StratifiedEvalReport report = evaluate(tree, loaded.kept, cfg.harmonization, registry);
  for (const auto& warning : report.warnings) std::cerr << warning << "\n";

  std::vector<ReportFormat> formats;
  for (const auto& token : args.formats) {
    const auto format = report_format_from_token(token);
    if (!format) throw UsageError("unknown report format '" + token + "'");
    formats.push_back(*format);
  }
  if (formats.empty()) formats = cfg.formats;
  if (formats.empty()) formats = {ReportFormat::json};

  std::string out_dir = args.out_dir;
  if (out_dir.empty() && cfg.output_dir) out_dir = cfg.output_dir->string();

  if (out_dir.empty()) {
    if (formats.size() != 1) {
      throw UsageError("multiple formats need --out-dir; stdout carries exactly one");
    }
    std::cout << render_report(report, formats.front());
    return kExitOk;
  }
  std::filesystem::create_directories(out_dir);
  std::vector<ReportFormat> seen;
  for (const ReportFormat format : formats) {
    if (std::find(seen.begin(), seen.end(), format) != seen.end()) continue;
    seen.push_back(format);
    const auto path = std::filesystem::path(out_dir) / (std::string("report.") +
                                                        format_extension(format));
    emit(path.string(), render_report(report, format));
    std::cerr << "wrote " << path.string() << "\n";
  }
  return kExitOk;
}

std::string render_summary(const SummaryStats& stats, const std::string& source) {
  std::ostringstream out;
  out << "# Cohort summary: " << source << "\n\n";
  out << stats.cohort_size << " records.\n";

  const bool have_numeric = stats.age.n > 0 || !stats.features.empty();
  bool degenerate_std = false;
  if (have_numeric) {
    out << "\n| Feature | N | Mean | Std Dev | Median |\n";
    out << "| --- | ---: | ---: | ---: | ---: |\n";
    const auto row = [&](std::string_view name, const NumericSummary& s) {
      if (s.n == 0) return;
      degenerate_std |= s.stddev_degenerate;
      out << "| " << name << " | " << s.n << " | " << format_fixed_2(s.mean) << " | "
          << format_fixed_2(s.stddev) << (s.stddev_degenerate ? "*" : "") << " | "
          << format_fixed_2(s.median) << " |\n";
    };
    row("age", stats.age);
    for (const auto& [feature, summary] : stats.features) row(feature, summary);
    if (degenerate_std) out << "\n\\* standard deviation defined as 0 for a single value.\n";
  }

  out << "\n| Category | Count | Share |\n";
  out << "| --- | ---: | ---: |\n";
  const auto category = [&](std::string_view group, std::string_view name, std::size_t count) {
    if (count == 0) return;
    const auto share = stats.share_pct(count);
    out << "| " << group << ": " << name << " | " << count << " | "
        << (share ? format_fixed_2(*share) + "%" : "NA") << " |\n";
  };
  for (const auto& [sex, count] : stats.sex_counts) category("sex", to_token(sex), count);
  for (const auto& [severity, count] : stats.severity_counts) {
    category("severity", to_token(severity), count);
  }
  for (const auto& [outcome, count] : stats.outcome_counts) {
    category("outcome", to_token(outcome), count);
  }
  return out.str();
}

int run_summarize(const SummarizeArgs& args) {
  RunConfig cfg = resolve_config(args.config);
  const auto cohort_path = require_path(args.cohort, cfg.cohort_path, "cohort CSV");
  const AssayRegistry registry = resolve_registry(args.registry, cfg);

  auto [cohort, report] = ingest_csv(cohort_path, cfg.schema, registry);
  report_funnel(report);
  if (!args.required.empty()) {
    std::set<std::string> required(args.required.begin(), args.required.end());
    auto filtered = completeness_filter(cohort, required);
    std::cerr << "completeness: " << filtered.kept.size() << " kept, "
              << filtered.excluded.size() << " excluded\n";
    cohort = std::move(filtered.kept);
  }
  std::cout << render_summary(summarize(cohort), cohort.source);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Threshold decision-rule triage toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "triagekit 0.1.0");

  CheckRuleArgs check_args;
  auto* check = app.add_subcommand("check-rule", "Parse a rule file and print its canonical form");
  check->add_option("rule", check_args.rule, "rule file")->required();

  HarmonizeArgs harmonize_args;
  auto* harmonize_cmd =
      app.add_subcommand("harmonize", "Rewrite a cohort CSV into a target assay frame");
  harmonize_cmd->add_option("--cohort", harmonize_args.cohort, "cohort CSV to rewrite");
  harmonize_cmd->add_option("--rule", harmonize_args.rule,
                            "rule file; its feature declarations pick what is rewritten");
  harmonize_cmd->add_option("--registry", harmonize_args.registry,
                            "assay registry file (default: built-in)");
  harmonize_cmd->add_option("--config", harmonize_args.config,
                            "config file path, or a bare mode token");
  harmonize_cmd->add_option("--mode", harmonize_args.mode,
                            "affine_interval | uln_ratio | identity (default affine_interval)");
  harmonize_cmd->add_option("--map", harmonize_args.maps,
                            "feature mapping, FEATURE=SOURCE->TARGET (repeatable)");
  harmonize_cmd->add_option("--out", harmonize_args.out, "output CSV (default stdout)");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic cohort from a spec file");
  synth_cmd->add_option("--rule", synth_args.rule, "rule file the cohort is planned against");
  synth_cmd->add_option("--spec", synth_args.spec, "synthesis spec file")->required();
  synth_cmd->add_option("--config", synth_args.config,
                        "config file path, or a bare mode token");
  synth_cmd->add_option("--seed", synth_args.seed, "override the spec's seed");
  synth_cmd->add_flag("--no-fit", synth_args.no_fit, "skip marginal mean fitting");
  synth_cmd->add_option("--out", synth_args.out, "output CSV (default stdout)");

  EvaluateArgs evaluate_args;
  auto* evaluate_cmd =
      app.add_subcommand("evaluate", "Run a rule over a cohort and render the report");
  evaluate_cmd->add_option("--rule", evaluate_args.rule, "rule file");
  evaluate_cmd->add_option("--cohort", evaluate_args.cohort, "cohort CSV");
  evaluate_cmd->add_option("--registry", evaluate_args.registry,
                           "assay registry file (default: built-in)");
  evaluate_cmd->add_option("--config", evaluate_args.config,
                           "config file path, or a bare mode token (e.g. identity)");
  evaluate_cmd->add_option("--format", evaluate_args.formats, "json | markdown | svg_bar_chart")
      ->delimiter(',');
  evaluate_cmd->add_option("--out-dir", evaluate_args.out_dir,
                           "write report.<ext> files here instead of stdout");

  SummarizeArgs summarize_args;
  auto* summarize_cmd =
      app.add_subcommand("summarize", "Central-tendency summary of a cohort CSV");
  summarize_cmd->add_option("--cohort", summarize_args.cohort, "cohort CSV");
  summarize_cmd->add_option("--registry", summarize_args.registry,
                            "assay registry file (default: built-in)");
  summarize_cmd->add_option("--config", summarize_args.config,
                            "config file path, or a bare mode token");
  summarize_cmd->add_option("--required", summarize_args.required,
                            "completeness-filter on these features first")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
    if (app.got_subcommand(check)) return run_check_rule(check_args);
    if (app.got_subcommand(harmonize_cmd)) return run_harmonize(harmonize_args);
    if (app.got_subcommand(synth_cmd)) return run_synth(synth_args);
    if (app.got_subcommand(evaluate_cmd)) return run_evaluate(evaluate_args);
    if (app.got_subcommand(summarize_cmd)) return run_summarize(summarize_args);
    std::cerr << "triagekit: no subcommand selected\n";
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the usage diagnostic
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "triagekit: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SilentDataFailure&) {
    return kExitData;
  } catch (const Error& e) {
    std::cerr << "triagekit: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "triagekit: " << e.what() << "\n";
    return kExitData;
  }
}

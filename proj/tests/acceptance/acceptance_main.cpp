// Release gate: every blocking check in one binary. Each criterion prints a
// single [PASS]/[FAIL] line with its measured numbers and runtime; the
// process exits nonzero if any criterion fails. Tolerances and runtime
// budgets are pinned here, next to the checks they guard.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support/helpers.hpp"
#include "triagekit/cohort.hpp"
#include "triagekit/errors.hpp"
#include "triagekit/evaluation.hpp"
#include "triagekit/harmonize.hpp"
#include "triagekit/numeric.hpp"
#include "triagekit/rule_parser.hpp"
#include "triagekit/rule_printer.hpp"
#include "triagekit/synth.hpp"

using namespace triagekit;

namespace {

constexpr double kRoundTripRelTol = 1e-9;  // criterion 2
constexpr double kLdhMeanTol = 5.0;        // criterion 4, around 364.76
constexpr double kCrpMeanTol = 2.0;        //               around 42.30
constexpr double kLymphMeanTol = 1.0;      //               around 18.45
constexpr double kAgeMeanTol = 0.5;        //               around 56.66
constexpr double kStddevRelTol = 1e-12;    // criterion 5, summarize oracle

struct CheckResult {
  bool ok = true;
  std::string detail;
};

void expect(CheckResult& o, bool cond, const std::string& what) {
  if (cond) return;
  o.ok = false;
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += what;
}

std::string fmt_opt(const std::optional<double>& v) {
  return v ? format_fixed_2(*v) : std::string("absent");
}

RuleTree load_default_rule() {
  auto result = parse_rule_file(testkit::repo_path("rules/yan2020.rule"));
  if (!result.ok()) throw Error("rule file failed to parse: " + result.error->to_string());
  return *std::move(result.tree);
}

std::set<std::string> feature_names(const RuleTree& tree) {
  std::set<std::string> names;
  for (const auto& f : tree.features()) names.insert(f.name);
  return names;
}

// ---- criterion 1: published recalls from the synthetic fixture ----

CheckResult check_fixture_recalls() {
  CheckResult o;
  const RuleTree tree = load_default_rule();
  const SynthSpec spec = load_synth_spec(testkit::repo_path("fixtures/figure1.spec"));
  Cohort cohort = generate(tree, spec);
  cohort = fit_marginals(tree, cohort, spec.mean_targets, spec.bounds).cohort;

  const auto report = evaluate(tree, cohort, HarmonizationConfig{}, default_assay_registry());
  const auto expect_pct = [&](const std::optional<double>& got, const char* want,
                              const char* label) {
    expect(o, fmt_opt(got) == want, std::string(label) + " " + fmt_opt(got) + " wanted " + want);
  };
  expect_pct(report.survival_recall(), "65.26", "survival_recall");
  expect_pct(report.mortality_recall(), "88.00", "mortality_recall");
  expect_pct(report.severity_recall(Severity::mild), "91.30", "mild recall");
  expect_pct(report.severity_recall(Severity::moderate), "73.81", "moderate recall");
  expect_pct(report.severity_recall(Severity::severe), "33.33", "severe recall");

  const std::string json = render_report(report, ReportFormat::json);
  for (const char* literal : {"\"survival_recall\": 65.26", "\"mortality_recall\": 88.00"}) {
    expect(o, json.find(literal) != std::string::npos,
           std::string("JSON lacks literal ") + literal);
  }
  return o;
}

// ---- criterion 2: affine endpoint exactness and round-trip stability ----

CheckResult check_harmonization() {
  CheckResult o;
  const AssayRegistry registry = default_assay_registry();
  const AssayMethod& pl = registry.at("kit_PL");
  const AssayMethod& lp = registry.at("kit_LP");

  const double low = harmonize_value(240.0, pl, lp, HarmonizationMode::affine_interval);
  const double high = harmonize_value(480.0, pl, lp, HarmonizationMode::affine_interval);
  expect(o, low == 135.0, "240 mapped to " + format_double_shortest(low) + " not 135");
  expect(o, high == 250.0, "480 mapped to " + format_double_shortest(high) + " not 250");

  std::mt19937_64 rng(240480);
  std::uniform_real_distribution<double> dist(-100.0, 1500.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = dist(rng);
    const double there = harmonize_value(x, pl, lp, HarmonizationMode::affine_interval);
    const double back = harmonize_value(there, lp, pl, HarmonizationMode::affine_interval);
    worst = std::max(worst, std::abs(back - x) / std::max(1.0, std::abs(x)));
  }
  expect(o, worst <= kRoundTripRelTol,
         "round-trip relative error " + format_double_shortest(worst));
  return o;
}

// ---- criterion 3: completeness funnel keeps exactly the planted records ----

CheckResult check_funnel() {
  CheckResult o;
  const RuleTree tree = load_default_rule();
  const SynthSpec spec = load_synth_spec(testkit::repo_path("fixtures/funnel841.spec"));
  const Cohort cohort = generate(tree, spec);
  expect(o, cohort.size() == 841, "generated " + std::to_string(cohort.size()) + " rows not 841");

  const FilterResult filtered = completeness_filter(cohort, feature_names(tree));
  expect(o, filtered.kept.size() == 120,
         "kept " + std::to_string(filtered.kept.size()) + " not 120");

  std::size_t survived = 0;
  std::size_t deceased = 0;
  for (const auto& rec : filtered.kept.records) {
    (rec.outcome == PatientOutcome::survived ? survived : deceased) += 1;
  }
  expect(o, survived == 95, "kept survivors " + std::to_string(survived) + " not 95");
  expect(o, deceased == 25, "kept deceased " + std::to_string(deceased) + " not 25");
  return o;
}

// ---- criterion 4: marginal means reach their targets, counts frozen ----

CheckResult check_marginal_fit() {
  CheckResult o;
  const RuleTree tree = load_default_rule();
  const SynthSpec spec = load_synth_spec(testkit::repo_path("fixtures/figure1.spec"));
  const Cohort raw = generate(tree, spec);

  const auto before = evaluate(tree, raw, HarmonizationConfig{}, default_assay_registry());
  const FitResult fit = fit_marginals(tree, raw, spec.mean_targets, spec.bounds);
  const auto after = evaluate(tree, fit.cohort, HarmonizationConfig{}, default_assay_registry());

  expect(o, before.overall == after.overall, "overall confusion counts moved");
  expect(o, before.by_severity == after.by_severity, "stratified confusion counts moved");
  expect(o, fit.all_reached(), "fit reports an unreached target");

  const SummaryStats stats = summarize(fit.cohort);
  const auto near = [&](const char* name, double got, double want, double tol) {
    expect(o, std::abs(got - want) <= tol,
           std::string(name) + " mean " + format_fixed_2(got) + " not within " +
               format_double_shortest(tol) + " of " + format_fixed_2(want));
  };
  near("LDH", stats.features.at("LDH").mean, 364.76, kLdhMeanTol);
  near("hs_CRP", stats.features.at("hs_CRP").mean, 42.30, kCrpMeanTol);
  near("lymph_pct", stats.features.at("lymph_pct").mean, 18.45, kLymphMeanTol);
  near("age", stats.age.mean, 56.66, kAgeMeanTol);
  return o;
}

// ---- criterion 5: property suites ----

CheckResult property_tree_round_trip() {
  CheckResult o;
  std::mt19937_64 rng(5001);
  for (int i = 0; i < 1000 && o.ok; ++i) {
    const RuleTree tree = testkit::random_tree(rng);
    const std::string text = print_rule(tree);
    const ParseResult reparsed = parse_rule(text);
    expect(o, reparsed.ok(), "canonical text failed to reparse at case " + std::to_string(i));
    if (!reparsed.ok()) break;
    expect(o, tree.structurally_equal(*reparsed.tree),
           "structure changed through print/parse at case " + std::to_string(i));
    expect(o, print_rule(*reparsed.tree) == text,
           "printing is not idempotent at case " + std::to_string(i));
  }
  return o;
}

CheckResult property_parser_totality() {
  CheckResult o;
  std::mt19937_64 rng(5002);
  const std::string_view alphabet =
      "rule feature tree if then else leaf Survival Death unit assay_sensitive "
      "\"LDH\">=<0123456789.eE+-_#\n\t ";
  std::string input;
  for (int i = 0; i < 100000; ++i) {
    input.clear();
    const std::size_t len = rng() % 120;
    for (std::size_t j = 0; j < len; ++j) input += alphabet[rng() % alphabet.size()];
    try {
      const ParseResult result = parse_rule(input);
      expect(o, result.ok() || result.error.has_value(), "parser returned neither tree nor error");
    } catch (const std::exception& e) {
      expect(o, false, std::string("parser threw at case ") + std::to_string(i) + ": " + e.what());
    }
    if (!o.ok) break;
  }
  return o;
}

CheckResult property_evaluate_recount() {
  CheckResult o;
  std::mt19937_64 rng(5003);
  const AssayRegistry registry = default_assay_registry();
  for (int i = 0; i < 500 && o.ok; ++i) {
    const RuleTree tree = testkit::random_tree(rng);
    const Cohort cohort = testkit::random_cohort(rng, tree, 1 + rng() % 80, true);
    const auto report = evaluate(tree, cohort, HarmonizationConfig{}, registry);
    const testkit::BruteCounts brute = testkit::brute_force_eval(tree, cohort);
    expect(o, report.overall == brute.overall, "overall tally diverges at case " + std::to_string(i));
    expect(o, report.by_severity == brute.by_severity,
           "stratified tally diverges at case " + std::to_string(i));
    expect(o, report.excluded == brute.excluded, "exclusions diverge at case " + std::to_string(i));
    expect(o, report.cohort_size == cohort.size(), "cohort size wrong at case " + std::to_string(i));
    expect(o, report.overall.total() + report.excluded == cohort.size(),
           "records leak from the tally at case " + std::to_string(i));
  }
  return o;
}

CheckResult property_synth_closed_loop() {
  CheckResult o;
  std::mt19937_64 rng(5004);
  int done = 0;
  while (done < 100 && o.ok) {
    const RuleTree tree = testkit::random_tree(rng);
    if (!testkit::spec_feasible(tree)) continue;
    const SynthSpec spec = testkit::random_spec(rng);
    const Cohort cohort = generate(tree, spec);
    const auto report = evaluate(tree, cohort, HarmonizationConfig{}, default_assay_registry());
    const std::string tag = " at case " + std::to_string(done);
    expect(o, cohort.size() == spec.planned_records(), "cohort size off plan" + tag);
    expect(o, report.excluded == 0, "synthetic records excluded" + tag);
    expect(o,
           report.overall.survivors_correct ==
               spec.mild.correct + spec.moderate.correct + spec.severe.correct,
           "survivor hits off plan" + tag);
    expect(o,
           report.overall.survivors_total() ==
               spec.mild.total + spec.moderate.total + spec.severe.total,
           "survivor count off plan" + tag);
    expect(o, report.overall.deceased_correct == spec.deceased.correct,
           "deceased hits off plan" + tag);
    expect(o, report.overall.deceased_total() == spec.deceased.total,
           "deceased count off plan" + tag);
    ++done;
  }
  return o;
}

CheckResult property_summarize_oracle() {
  CheckResult o;
  std::mt19937_64 rng(5005);
  for (int i = 0; i < 200 && o.ok; ++i) {
    const RuleTree tree = testkit::random_tree(rng);
    const Cohort cohort = testkit::random_cohort(rng, tree, rng() % 60, true);
    const SummaryStats stats = summarize(cohort);
    const std::string tag = " at case " + std::to_string(i);
    expect(o, stats.cohort_size == cohort.size(), "size diverges" + tag);

    // Independent recount, accumulating in the same record order.
    std::map<std::string, std::vector<double>> columns;
    std::vector<double> ages;
    for (const auto& rec : cohort.records) {
      for (const auto& [feature, lab] : rec.labs) columns[feature].push_back(lab.value);
      if (rec.age) ages.push_back(*rec.age);
    }
    columns["<age>"] = ages;

    for (const auto& [name, values] : columns) {
      const NumericSummary& got = name == "<age>" ? stats.age : stats.features.at(name);
      expect(o, got.n == values.size(), name + ": n diverges" + tag);
      if (values.empty()) continue;

      double sum = 0.0;
      for (const double v : values) sum += v;
      const double mean = sum / static_cast<double>(values.size());
      expect(o, got.mean == mean, name + ": mean diverges" + tag);

      std::vector<double> sorted = values;
      std::sort(sorted.begin(), sorted.end());
      const std::size_t mid = sorted.size() / 2;
      const double median =
          sorted.size() % 2 == 1 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2.0;
      expect(o, got.median == median, name + ": median diverges" + tag);

      if (values.size() > 1) {
        double ss = 0.0;
        for (const double v : values) ss += (v - mean) * (v - mean);
        const double stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
        const double rel = std::abs(got.stddev - stddev) / std::max(1.0, std::abs(stddev));
        expect(o, rel <= kStddevRelTol, name + ": stddev diverges" + tag);
      } else {
        expect(o, got.stddev == 0.0 && got.stddev_degenerate, name + ": single-value stddev" + tag);
      }
    }
  }
  return o;
}

CheckResult check_property_suites() {
  struct Suite {
    const char* name;
    CheckResult (*run)();
  };
  const Suite suites[] = {
      {"tree round-trip", property_tree_round_trip},
      {"parser totality", property_parser_totality},
      {"evaluate recount", property_evaluate_recount},
      {"synth closed loop", property_synth_closed_loop},
      {"summarize oracle", property_summarize_oracle},
  };
  CheckResult o;
  for (const Suite& suite : suites) {
    const CheckResult got = suite.run();
    expect(o, got.ok, std::string(suite.name) + ": " + got.detail);
  }
  return o;
}

// ---- criterion 6: rounding contract on the published fractions ----

CheckResult check_rounding_contract() {
  CheckResult o;
  const struct {
    std::size_t num, den;
    const char* want;
  } cases[] = {
      {62, 95, "65.26"}, {22, 25, "88.00"}, {21, 23, "91.30"},
      {31, 42, "73.81"}, {10, 30, "33.33"},
  };
  for (const auto& c : cases) {
    const auto pct = percent_2(c.num, c.den);
    const std::string got = fmt_opt(pct);
    expect(o, got == c.want,
           std::to_string(c.num) + "/" + std::to_string(c.den) + " renders " + got + " not " +
               c.want);
  }
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int index;
    const char* label;
    double budget_s;
    std::function<CheckResult()> run;
  };
  const Criterion criteria[] = {
      {1, "synthetic fixture reproduces the published recalls", 1.0, check_fixture_recalls},
      {2, "affine harmonization endpoints exact, round-trip within 1e-9", 1.0,
       check_harmonization},
      {3, "completeness funnel keeps exactly the complete records", 1.0, check_funnel},
      {4, "marginal fit reaches its mean targets with counts frozen", 5.0, check_marginal_fit},
      {5, "property suites hold", 60.0, check_property_suites},
      {6, "round-half-up rendering of the published fractions", 1.0, check_rounding_contract},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("unexpected exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs >= c.budget_s) {
      o.ok = false;
      if (!o.detail.empty()) o.detail += "; ";
      o.detail += "runtime over budget";
    }

    std::ostringstream line;
    line << (o.ok ? "[PASS]" : "[FAIL]") << " criterion " << c.index << ": " << c.label << " ("
         << std::fixed << std::setprecision(2) << secs << " s, budget "
         << static_cast<int>(c.budget_s) << " s)";
    if (!o.ok && !o.detail.empty()) line << " :: " << o.detail;
    std::cout << line.str() << "\n";
    if (!o.ok) ++failures;
  }

  if (failures != 0) {
    std::cout << failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all criteria passed\n";
  return 0;
}

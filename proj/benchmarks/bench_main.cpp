#include <benchmark/benchmark.h>

#include <string>

#include "triagekit/cohort.hpp"
#include "triagekit/evaluation.hpp"
#include "triagekit/harmonize.hpp"
#include "triagekit/rule_parser.hpp"
#include "triagekit/synth.hpp"

using namespace triagekit;

namespace {

const std::string kRuleSource =
    "rule \"ldh_crp_lymph_triage\";\n"
    "feature LDH unit \"U/L\" assay_sensitive;\n"
    "feature hs_CRP unit \"mg/L\";\n"
    "feature lymph_pct unit \"%\";\n"
    "tree\n"
    "  if LDH >= 365 then\n"
    "    leaf Death\n"
    "  else\n"
    "    if hs_CRP >= 41.2 then\n"
    "      if lymph_pct > 14.7 then\n"
    "        leaf Survival\n"
    "      else\n"
    "        leaf Death\n"
    "    else\n"
    "      leaf Survival\n";

RuleTree bench_rule() {
  auto result = parse_rule(kRuleSource);
  return *std::move(result.tree);
}

SynthSpec bench_spec() {
  SynthSpec spec;
  spec.seed = 42;
  spec.mild = {23, 21};
  spec.moderate = {42, 31};
  spec.severe = {30, 10};
  spec.deceased = {25, 22};
  spec.bounds["LDH"] = {50.0, 1200.0};
  spec.bounds["hs_CRP"] = {0.5, 300.0};
  spec.bounds["lymph_pct"] = {0.5, 60.0};
  spec.frame_assays["LDH"] = "kit_LP";
  spec.frame_assays["hs_CRP"] = "crp_std";
  return spec;
}

void BM_ParseRule(benchmark::State& state) {
  for (auto _ : state) {
    auto result = parse_rule(kRuleSource);
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(BM_ParseRule);

void BM_Predict(benchmark::State& state) {
  const RuleTree tree = bench_rule();
  const LabValues labs = {{"LDH", 310.25}, {"hs_CRP", 55.0}, {"lymph_pct", 12.0}};
  for (auto _ : state) {
    auto trace = predict(tree, labs);
    benchmark::DoNotOptimize(trace);
  }
}
BENCHMARK(BM_Predict);

void BM_HarmonizeValue(benchmark::State& state) {
  const AssayRegistry registry = default_assay_registry();
  const AssayMethod& src = registry.at("kit_PL");
  const AssayMethod& dst = registry.at("kit_LP");
  double x = 240.0;
  for (auto _ : state) {
    const double y = harmonize_value(x, src, dst, HarmonizationMode::affine_interval);
    benchmark::DoNotOptimize(y);
    x = x < 480.0 ? x + 1.0 : 240.0;
  }
}
BENCHMARK(BM_HarmonizeValue);

void BM_Synth(benchmark::State& state) {
  const RuleTree tree = bench_rule();
  const SynthSpec spec = bench_spec();
  for (auto _ : state) {
    Cohort cohort = generate(tree, spec);
    benchmark::DoNotOptimize(cohort);
  }
}
BENCHMARK(BM_Synth);

void BM_Evaluate(benchmark::State& state) {
  const RuleTree tree = bench_rule();
  const Cohort cohort = generate(tree, bench_spec());
  const AssayRegistry registry = default_assay_registry();
  const HarmonizationConfig cfg;
  for (auto _ : state) {
    auto report = evaluate(tree, cohort, cfg, registry);
    benchmark::DoNotOptimize(report);
  }
}
BENCHMARK(BM_Evaluate);

void BM_Summarize(benchmark::State& state) {
  const RuleTree tree = bench_rule();
  const Cohort cohort = generate(tree, bench_spec());
  for (auto _ : state) {
    auto stats = summarize(cohort);
    benchmark::DoNotOptimize(stats);
  }
}
BENCHMARK(BM_Summarize);

}  // namespace

BENCHMARK_MAIN();

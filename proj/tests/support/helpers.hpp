#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <string_view>

#include "triagekit/cohort.hpp"
#include "triagekit/evaluation.hpp"
#include "triagekit/rule.hpp"
#include "triagekit/synth.hpp"

namespace testkit {

std::filesystem::path repo_dir();
std::filesystem::path repo_path(std::string_view rel);

std::string slurp(const std::filesystem::path& path);
void spill(const std::filesystem::path& path, std::string_view text);

/// Fresh empty directory under the system temp root, unique per call.
std::filesystem::path make_temp_dir(std::string_view tag);

/// Random tree over features f1..f4 (all declared, unit "U/L"), thresholds on
/// the integer grid {50, 150, ..., 950}. The root is always a split and both
/// outcome labels are present, so the builder accepts every tree. Trees are a
/// deterministic function of the rng state.
triagekit::RuleTree random_tree(std::mt19937_64& rng, int max_depth = 4);

/// Random cohort with lab values of the form k + 0.25 in [0, 1000), which
/// never collide with the grid thresholds. Assay ids are left empty so
/// identity-mode evaluation needs no registry entries. With holes enabled,
/// individual lab values go missing at random to exercise exclusion tallies.
triagekit::Cohort random_cohort(std::mt19937_64& rng, const triagekit::RuleTree& tree,
                                std::size_t n, bool with_holes);

/// Independent recount of what evaluate() should report: walk the records one
/// by one, call predict by hand, tally by outcome and severity.
struct BruteCounts {
  triagekit::ConfusionCounts overall;
  std::map<triagekit::Severity, triagekit::ConfusionCounts> by_severity;
  std::size_t excluded = 0;
};
BruteCounts brute_force_eval(const triagekit::RuleTree& tree, const triagekit::Cohort& cohort);

/// Random stratum counts with bounds [0, 1000] on f1..f4; correct <= total by
/// construction. No marginal targets, no padding.
triagekit::SynthSpec random_spec(std::mt19937_64& rng);

/// Whether every synthesis cell kind is realizable for this tree: probes
/// generate() with one correct and one misclassified record per outcome.
bool spec_feasible(const triagekit::RuleTree& tree);

}  // namespace testkit

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "triagekit/cohort.hpp"
#include "triagekit/rule.hpp"

namespace triagekit {

/// One outcome stratum of a synthetic cohort: how many records it holds and
/// how many of them the rule must classify correctly.
struct StratumSpec {
  std::size_t total = 0;
  std::size_t correct = 0;

  friend bool operator==(const StratumSpec&, const StratumSpec&) = default;
};

struct ValueBounds {
  double lower = 0.0;
  double upper = 0.0;

  friend bool operator==(const ValueBounds&, const ValueBounds&) = default;
};

/// A marginal mean to steer toward. Without a tolerance the fit aims for
/// floating-point exactness and reports against 1e-9.
struct MarginalTarget {
  double value = 0.0;
  std::optional<double> tolerance;

  friend bool operator==(const MarginalTarget&, const MarginalTarget&) = default;
};

/// Recipe for a deterministic synthetic cohort with exact, pre-specified
/// confusion counts against a given rule.
struct SynthSpec {
  std::uint64_t seed = 0;

  // Survivor strata by severity, plus the deceased as one stratum.
  StratumSpec mild;
  StratumSpec moderate;
  StratumSpec severe;
  StratumSpec deceased;

  /// Sampling range per feature; required for every feature the rule reads.
  std::map<std::string, ValueBounds> bounds;

  /// Assay id stamped on generated measurements, per feature. Features not
  /// listed are emitted without an assay frame.
  std::map<std::string, std::string> frame_assays;

  /// Post-generation mean targets, keyed by feature name or "age".
  std::map<std::string, MarginalTarget> mean_targets;

  // Demographic sampling parameters.
  double age_mean = 56.66;
  double age_std = 15.18;
  double male_fraction = 0.7083;

  /// Extra records appended with deliberately missing labs, to exercise the
  /// completeness funnel. They never reach evaluation.
  std::size_t pad_incomplete = 0;

  std::size_t planned_records() const noexcept {
    return mild.total + moderate.total + severe.total + deceased.total;
  }
};

/// Parse a SynthSpec from key-value text (sections [synth], [strata],
/// [bounds], [frame], [targets], [demographics], [pad]); unknown keys are
/// rejected. Throws ConfigError / FileUnreadableError.
SynthSpec load_synth_spec(const std::filesystem::path& path);
SynthSpec parse_synth_spec(std::string_view text, std::string_view origin = "<string>");

/// Build the cohort. Deterministic: equal (tree, spec) pairs produce
/// byte-identical cohorts, independent of platform. Every record is placed
/// inside a leaf region of the tree with margin 0.5 from every threshold, so
/// the rule's verdict on it is unambiguous and stable under the marginal fit.
/// Throws InfeasibleSpecError when a stratum cannot be realized (no bounds
/// for a feature, or an empty sampling region).
Cohort generate(const RuleTree& tree, const SynthSpec& spec);

/// Append spec.pad_incomplete records with cycling missing-lab patterns.
/// Exposed separately so the funnel can be tested in isolation; generate()
/// already applies it.
void pad_incomplete(Cohort& cohort, const RuleTree& tree, const SynthSpec& spec);

struct FitEntry {
  std::string name;  // feature name or "age"
  double target = 0.0;
  std::optional<double> tolerance;
  double achieved_before = 0.0;
  double achieved_after = 0.0;
  bool reached = false;
};

struct FitResult {
  Cohort cohort;
  std::vector<FitEntry> report;

  bool all_reached() const noexcept;
};

/// Nudge lab values (and ages, under the "age" key) toward the target means
/// without letting any record cross a decision boundary: each value moves
/// only within the margin-respecting band it already occupies, so the rule's
/// confusion counts are bit-identical before and after. An unreachable
/// target saturates the available slack and is flagged reached = false.
/// Targets already met within 1e-12 of the mean leave values bitwise intact.
FitResult fit_marginals(const RuleTree& tree, const Cohort& cohort,
                        const std::map<std::string, MarginalTarget>& targets,
                        const std::map<std::string, ValueBounds>& bounds);

}  // namespace triagekit

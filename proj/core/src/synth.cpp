#include "triagekit/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "triagekit/errors.hpp"
#include "triagekit/kvfile.hpp"

namespace triagekit {

namespace {

constexpr double kMargin = 0.5;     // minimum distance from any threshold
constexpr double kAgeLo = 18.0;     // adult cohort
constexpr double kAgeHi = 100.0;
constexpr double kMeanTiny = 1e-12;  // mean already on target: leave bits alone

// --- spec file parsing ---

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<double> to_number(std::string_view s) {
  s = trim(s);
  const std::size_t skip = (!s.empty() && s.front() == '+') ? 1 : 0;
  double value = 0.0;
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data() + skip, last, value);
  if (ec != std::errc() || ptr != last || skip == s.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::optional<std::pair<std::string_view, std::string_view>> split_once(std::string_view s,
                                                                        std::string_view sep) {
  const auto pos = s.find(sep);
  if (pos == std::string_view::npos) return std::nullopt;
  return std::make_pair(trim(s.substr(0, pos)), trim(s.substr(pos + sep.size())));
}

[[noreturn]] void spec_error(std::string_view origin, int line, const std::string& message) {
  throw ConfigError(std::string(origin) + ":" + std::to_string(line) + ": " + message);
}

StratumSpec parse_stratum(KvFile& kv, std::string_view name) {
  const auto raw = kv.take("strata", name);
  if (!raw) return {};
  const int line = kv.line_of("strata", name);
  const auto parts = split_once(*raw, "/");
  if (!parts) spec_error(kv.origin(), line, "expected 'total/correct' counts");
  const auto total = to_number(parts->first);
  const auto correct = to_number(parts->second);
  if (!total || !correct || *total < 0 || *correct < 0 ||
      *total != std::floor(*total) || *correct != std::floor(*correct)) {
    spec_error(kv.origin(), line, "stratum counts must be non-negative integers");
  }
  if (*correct > *total) {
    throw InfeasibleSpecError(std::string("stratum '") + std::string(name) + "': correct count " +
                              std::string(parts->second) + " exceeds total " +
                              std::string(parts->first));
  }
  return {static_cast<std::size_t>(*total), static_cast<std::size_t>(*correct)};
}

// --- deterministic sampling ---

// splitmix64 finalizer: decorrelates per-cell streams from one master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// mt19937_64 output is fully specified by the standard; the distribution
// classes are not, so uniform and gaussian draws are derived by hand to keep
// generated cohorts byte-identical across implementations.
class SynthRng {
public:
  explicit SynthRng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double gauss() {  // Irwin-Hall 12-sum, mean 0, variance 1
    double s = 0.0;
    for (int i = 0; i < 12; ++i) s += uniform01();
    return s - 6.0;
  }

private:
  std::mt19937_64 engine_;
};

// --- leaf regions ---

struct Piece {
  double lo;
  double hi;  // closed interval, lo <= hi
};
using PieceSet = std::vector<Piece>;

double total_width(const PieceSet& pieces) {
  double w = 0.0;
  for (const auto& p : pieces) w += p.hi - p.lo;
  return w;
}

// Remove the open band (a, b); closed endpoints stay allowed.
PieceSet subtract_band(const PieceSet& in, double a, double b) {
  PieceSet out;
  for (const auto& p : in) {
    if (p.hi <= a || p.lo >= b) {
      out.push_back(p);
      continue;
    }
    if (p.lo <= a) out.push_back({p.lo, a});
    if (p.hi >= b) out.push_back({b, p.hi});
  }
  return out;
}

double sample_pieces(const PieceSet& pieces, SynthRng& rng) {
  const double w = total_width(pieces);
  if (w <= 0.0) return pieces.front().lo;  // allowed set is isolated points
  double t = rng.uniform01() * w;
  for (const auto& p : pieces) {
    const double span = p.hi - p.lo;
    if (t <= span) return std::min(p.lo + t, p.hi);
    t -= span;
  }
  return pieces.back().hi;
}

const Piece* containing_piece(const PieceSet& pieces, double x) {
  for (const auto& p : pieces) {
    if (p.lo <= x && x <= p.hi) return &p;
  }
  return nullptr;
}

struct LeafRegion {
  Outcome outcome;
  // Per feature: sampling pieces inside this leaf's decision region,
  // kMargin away from every threshold the tree mentions for that feature.
  std::map<std::string, PieceSet> pieces;
};

std::map<std::string, std::vector<double>> thresholds_by_feature(const RuleTree& tree) {
  std::map<std::string, std::vector<double>> out;
  for (NodeId id = 0; id < tree.node_count(); ++id) {
    if (const auto* split = std::get_if<SplitNode>(&tree.node(id))) {
      out[split->feature].push_back(split->threshold);
    }
  }
  return out;
}

// Bounds minus every threshold band: the widest set a value may occupy
// without committing to a particular leaf.
PieceSet free_pieces(const ValueBounds& bounds, const std::vector<double>& thresholds) {
  PieceSet pieces{{bounds.lower, bounds.upper}};
  for (const double t : thresholds) pieces = subtract_band(pieces, t - kMargin, t + kMargin);
  return pieces;
}

struct PathConstraint {
  std::string feature;
  Comparator cmp;
  double threshold;
};

Comparator negate(Comparator cmp) {
  switch (cmp) {
    case Comparator::less: return Comparator::greater_eq;
    case Comparator::less_eq: return Comparator::greater;
    case Comparator::greater: return Comparator::less_eq;
    case Comparator::greater_eq: break;
  }
  return Comparator::less;
}

void collect_leaves(const RuleTree& tree, const SynthSpec& spec,
                    const std::map<std::string, std::vector<double>>& thresholds, NodeId id,
                    std::vector<PathConstraint>& path, std::vector<LeafRegion>& out) {
  const auto& node = tree.node(id);
  if (const auto* leaf = std::get_if<LeafNode>(&node)) {
    LeafRegion region;
    region.outcome = leaf->outcome;
    for (const auto& feature : tree.features()) {
      const auto bounds_it = spec.bounds.find(feature.name);
      if (bounds_it == spec.bounds.end()) {
        throw InfeasibleSpecError("no bounds for feature '" + feature.name + "'");
      }
      double lo = bounds_it->second.lower;
      double hi = bounds_it->second.upper;
      for (const auto& c : path) {
        if (c.feature != feature.name) continue;
        if (c.cmp == Comparator::less || c.cmp == Comparator::less_eq) {
          hi = std::min(hi, c.threshold - kMargin);
        } else {
          lo = std::max(lo, c.threshold + kMargin);
        }
      }
      PieceSet pieces;
      if (lo <= hi) {
        pieces = {{lo, hi}};
        const auto th_it = thresholds.find(feature.name);
        if (th_it != thresholds.end()) {
          for (const double t : th_it->second) {
            pieces = subtract_band(pieces, t - kMargin, t + kMargin);
          }
        }
      }
      region.pieces[feature.name] = std::move(pieces);
    }
    out.push_back(std::move(region));
    return;
  }
  const auto& split = std::get<SplitNode>(node);
  path.push_back({split.feature, split.cmp, split.threshold});
  collect_leaves(tree, spec, thresholds, split.if_true, path, out);
  path.back().cmp = negate(split.cmp);
  collect_leaves(tree, spec, thresholds, split.if_false, path, out);
  path.pop_back();
}

bool region_feasible(const LeafRegion& region) {
  for (const auto& [feature, pieces] : region.pieces) {
    if (pieces.empty()) return false;
  }
  return true;
}

std::string format_id(char prefix, std::size_t n) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%c%04zu", prefix, n);
  return buf;
}

double sample_age(SynthRng& rng, const SynthSpec& spec) {
  return std::clamp(spec.age_mean + spec.age_std * rng.gauss(), kAgeLo, kAgeHi);
}

Sex sample_sex(SynthRng& rng, const SynthSpec& spec) {
  return rng.uniform01() < spec.male_fraction ? Sex::male : Sex::female;
}

std::string assay_for(const SynthSpec& spec, const std::string& feature) {
  const auto it = spec.frame_assays.find(feature);
  return it == spec.frame_assays.end() ? std::string() : it->second;
}

}  // namespace

SynthSpec parse_synth_spec(std::string_view text, std::string_view origin) {
  KvFile kv = KvFile::parse(text, origin);
  SynthSpec spec;

  if (const auto seed = kv.take_count("synth", "seed")) spec.seed = *seed;

  spec.mild = parse_stratum(kv, "mild");
  spec.moderate = parse_stratum(kv, "moderate");
  spec.severe = parse_stratum(kv, "severe");
  spec.deceased = parse_stratum(kv, "deceased");

  for (const auto& [feature, raw] : kv.take_prefixed("bounds", "")) {
    const int line = kv.line_of("bounds", feature);
    const auto parts = split_once(raw, "..");
    if (!parts) spec_error(kv.origin(), line, "expected 'lower .. upper'");
    const auto lo = to_number(parts->first);
    const auto hi = to_number(parts->second);
    if (!lo || !hi) spec_error(kv.origin(), line, "bounds must be finite numbers");
    if (!(*lo < *hi)) spec_error(kv.origin(), line, "lower bound must be below upper");
    spec.bounds[feature] = {*lo, *hi};
  }

  for (const auto& [feature, assay] : kv.take_prefixed("frame", "")) {
    if (assay.empty()) {
      spec_error(kv.origin(), kv.line_of("frame", feature), "empty assay id");
    }
    spec.frame_assays[feature] = assay;
  }

  for (const auto& [key, raw] : kv.take_prefixed("targets", "")) {
    const int line = kv.line_of("targets", key);
    constexpr std::string_view suffix = "_mean";
    if (key.size() <= suffix.size() || !key.ends_with(suffix)) {
      spec_error(kv.origin(), line, "target keys end in '_mean'");
    }
    const std::string name = key.substr(0, key.size() - suffix.size());
    MarginalTarget target;
    if (const auto parts = split_once(raw, "+-")) {
      const auto value = to_number(parts->first);
      const auto tol = to_number(parts->second);
      if (!value || !tol) spec_error(kv.origin(), line, "expected 'value +- tolerance'");
      if (*tol <= 0.0) spec_error(kv.origin(), line, "tolerance must be positive");
      target = {*value, *tol};
    } else {
      const auto value = to_number(raw);
      if (!value) spec_error(kv.origin(), line, "expected a number");
      target = {*value, std::nullopt};
    }
    spec.mean_targets[name] = target;
  }

  if (const auto v = kv.take_number("demographics", "age_mean")) spec.age_mean = *v;
  if (const auto v = kv.take_number("demographics", "age_std")) spec.age_std = *v;
  if (const auto v = kv.take_number("demographics", "male_fraction")) spec.male_fraction = *v;
  if (spec.age_std < 0.0 || spec.age_mean < kAgeLo || spec.age_mean > kAgeHi) {
    throw ConfigError(std::string(origin) + ": age parameters out of range");
  }
  if (spec.male_fraction < 0.0 || spec.male_fraction > 1.0) {
    throw ConfigError(std::string(origin) + ": male_fraction must lie in [0, 1]");
  }

  if (const auto n = kv.take_count("pad", "incomplete_rows")) spec.pad_incomplete = *n;

  kv.expect_all_consumed();
  return spec;
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileUnreadableError(path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_synth_spec(buf.str(), path.string());
}

Cohort generate(const RuleTree& tree, const SynthSpec& spec) {
  const auto check_stratum = [](const char* name, const StratumSpec& stratum) {
    if (stratum.correct > stratum.total) {
      throw InfeasibleSpecError(std::string("stratum '") + name + "': correct count " +
                                std::to_string(stratum.correct) + " exceeds total " +
                                std::to_string(stratum.total));
    }
  };
  check_stratum("mild", spec.mild);
  check_stratum("moderate", spec.moderate);
  check_stratum("severe", spec.severe);
  check_stratum("deceased", spec.deceased);

  const auto thresholds = thresholds_by_feature(tree);
  std::vector<LeafRegion> leaves;
  std::vector<PathConstraint> path;
  collect_leaves(tree, spec, thresholds, tree.root(), path, leaves);

  std::vector<const LeafRegion*> survival_leaves;
  std::vector<const LeafRegion*> death_leaves;
  for (const auto& leaf : leaves) {
    if (!region_feasible(leaf)) continue;  // unreachable under the margins
    (leaf.outcome == Outcome::survival ? survival_leaves : death_leaves).push_back(&leaf);
  }

  struct Cell {
    const char* name;
    Severity severity;
    PatientOutcome outcome;
    std::size_t count;
    const std::vector<const LeafRegion*>* rotation;
  };
  const Cell cells[] = {
      {"mild/correct", Severity::mild, PatientOutcome::survived, spec.mild.correct,
       &survival_leaves},
      {"mild/misclassified", Severity::mild, PatientOutcome::survived,
       spec.mild.total - spec.mild.correct, &death_leaves},
      {"moderate/correct", Severity::moderate, PatientOutcome::survived, spec.moderate.correct,
       &survival_leaves},
      {"moderate/misclassified", Severity::moderate, PatientOutcome::survived,
       spec.moderate.total - spec.moderate.correct, &death_leaves},
      {"severe/correct", Severity::severe, PatientOutcome::survived, spec.severe.correct,
       &survival_leaves},
      {"severe/misclassified", Severity::severe, PatientOutcome::survived,
       spec.severe.total - spec.severe.correct, &death_leaves},
      {"deceased/correct", Severity::unknown, PatientOutcome::deceased, spec.deceased.correct,
       &death_leaves},
      {"deceased/misclassified", Severity::unknown, PatientOutcome::deceased,
       spec.deceased.total - spec.deceased.correct, &survival_leaves},
  };

  Cohort cohort;
  cohort.source = "synth:seed=" + std::to_string(spec.seed);
  cohort.records.reserve(spec.planned_records());
  std::size_t next_id = 0;

  for (std::size_t cell_index = 0; cell_index < std::size(cells); ++cell_index) {
    const Cell& cell = cells[cell_index];
    if (cell.count == 0) continue;
    if (cell.rotation->empty()) {
      throw InfeasibleSpecError("cell '" + std::string(cell.name) +
                                "': no feasible leaf with the required outcome");
    }
    SynthRng rng(mix_seed(spec.seed, cell_index));
    for (std::size_t j = 0; j < cell.count; ++j) {
      const LeafRegion& leaf = *(*cell.rotation)[j % cell.rotation->size()];
      PatientRecord rec;
      rec.id = format_id('p', ++next_id);
      rec.age = sample_age(rng, spec);
      rec.sex = sample_sex(rng, spec);
      rec.severity = cell.severity;
      rec.outcome = cell.outcome;
      for (const auto& feature : tree.features()) {
        const double value = sample_pieces(leaf.pieces.at(feature.name), rng);
        rec.labs[feature.name] = LabMeasurement{value, assay_for(spec, feature.name)};
      }
      cohort.records.push_back(std::move(rec));
    }
  }

  pad_incomplete(cohort, tree, spec);
  return cohort;
}

void pad_incomplete(Cohort& cohort, const RuleTree& tree, const SynthSpec& spec) {
  if (spec.pad_incomplete == 0) return;
  const auto& features = tree.features();
  if (features.empty()) throw InfeasibleSpecError("cannot pad: rule reads no features");
  if (features.size() >= 20) throw InfeasibleSpecError("cannot pad: too many features");

  const auto thresholds = thresholds_by_feature(tree);
  std::vector<PieceSet> free_sets;
  for (const auto& feature : features) {
    const auto bounds_it = spec.bounds.find(feature.name);
    if (bounds_it == spec.bounds.end()) {
      throw InfeasibleSpecError("no bounds for feature '" + feature.name + "'");
    }
    const auto th_it = thresholds.find(feature.name);
    auto pieces = free_pieces(bounds_it->second,
                              th_it == thresholds.end() ? std::vector<double>{} : th_it->second);
    if (pieces.empty()) {
      throw InfeasibleSpecError("empty sampling region for feature '" + feature.name + "'");
    }
    free_sets.push_back(std::move(pieces));
  }

  // Cycle through every non-empty missing-feature subset so each pattern of
  // incompleteness appears in the padding.
  const std::size_t mask_count = (std::size_t(1) << features.size()) - 1;
  constexpr std::uint64_t kPadStream = 99;
  SynthRng rng(mix_seed(spec.seed, kPadStream));
  constexpr Severity kSeverityCycle[] = {Severity::mild, Severity::moderate, Severity::severe};

  for (std::size_t j = 0; j < spec.pad_incomplete; ++j) {
    const std::size_t mask = (j % mask_count) + 1;
    PatientRecord rec;
    rec.id = format_id('x', j + 1);
    rec.age = sample_age(rng, spec);
    rec.sex = sample_sex(rng, spec);
    rec.severity = kSeverityCycle[j % 3];
    rec.outcome = PatientOutcome::survived;
    for (std::size_t i = 0; i < features.size(); ++i) {
      const double value = sample_pieces(free_sets[i], rng);  // draw even when dropped:
      if (mask & (std::size_t(1) << i)) continue;             // keeps streams aligned
      rec.labs[features[i].name] = LabMeasurement{value, assay_for(spec, features[i].name)};
    }
    cohort.records.push_back(std::move(rec));
  }
}

bool FitResult::all_reached() const noexcept {
  return std::all_of(report.begin(), report.end(), [](const FitEntry& e) { return e.reached; });
}

FitResult fit_marginals(const RuleTree& tree, const Cohort& cohort,
                        const std::map<std::string, MarginalTarget>& targets,
                        const std::map<std::string, ValueBounds>& bounds) {
  FitResult result;
  result.cohort = cohort;
  const auto thresholds = thresholds_by_feature(tree);

  for (const auto& [name, target] : targets) {
    FitEntry entry;
    entry.name = name;
    entry.target = target.value;
    entry.tolerance = target.tolerance;
    const double tol = target.tolerance.value_or(1e-9);

    // Collect mutable slots and the band each one may move within.
    std::vector<double*> slots;
    std::vector<Piece> cages;
    if (name == "age") {
      for (auto& rec : result.cohort.records) {
        if (!rec.age) continue;
        slots.push_back(&*rec.age);
        cages.push_back({std::min(kAgeLo, *rec.age), std::max(kAgeHi, *rec.age)});
      }
    } else {
      const auto bounds_it = bounds.find(name);
      if (bounds_it == bounds.end()) {
        throw InfeasibleSpecError("no bounds for fit target '" + name + "'");
      }
      const auto th_it = thresholds.find(name);
      const auto free_set = free_pieces(
          bounds_it->second, th_it == thresholds.end() ? std::vector<double>{} : th_it->second);
      for (auto& rec : result.cohort.records) {
        const auto lab = rec.labs.find(name);
        if (lab == rec.labs.end()) continue;
        slots.push_back(&lab->second.value);
        const Piece* piece = containing_piece(free_set, lab->second.value);
        // A value already inside a threshold band (or out of bounds) is
        // frozen; moving it could flip the rule's verdict.
        cages.push_back(piece ? *piece : Piece{lab->second.value, lab->second.value});
      }
    }

    const std::size_t n = slots.size();
    if (n == 0) {
      entry.achieved_before = entry.achieved_after = std::nan("");
      entry.reached = false;
      result.report.push_back(std::move(entry));
      continue;
    }

    double sum = 0.0;
    for (const double* x : slots) sum += *x;
    entry.achieved_before = sum / static_cast<double>(n);
    const double delta_mean = target.value - entry.achieved_before;

    if (std::abs(delta_mean) <= kMeanTiny) {
      entry.achieved_after = entry.achieved_before;
      entry.reached = std::abs(entry.achieved_after - target.value) <= tol;
      result.report.push_back(std::move(entry));
      continue;
    }

    const double needed = std::abs(delta_mean) * static_cast<double>(n);
    const bool upward = delta_mean > 0.0;
    double capacity = 0.0;
    std::vector<double> caps(n);
    for (std::size_t i = 0; i < n; ++i) {
      caps[i] = upward ? cages[i].hi - *slots[i] : *slots[i] - cages[i].lo;
      capacity += caps[i];
    }

    if (capacity > 0.0) {
      const double factor = std::min(1.0, needed / capacity);
      for (std::size_t i = 0; i < n; ++i) {
        const double moved = *slots[i] + (upward ? caps[i] : -caps[i]) * factor;
        *slots[i] = std::clamp(moved, cages[i].lo, cages[i].hi);
      }
    }

    double sum_after = 0.0;
    for (const double* x : slots) sum_after += *x;
    entry.achieved_after = sum_after / static_cast<double>(n);
    entry.reached = std::abs(entry.achieved_after - target.value) <= tol;
    result.report.push_back(std::move(entry));
  }
  return result;
}

}  // namespace triagekit

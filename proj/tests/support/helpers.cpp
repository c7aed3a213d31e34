#include "support/helpers.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "triagekit/errors.hpp"

namespace testkit {

using namespace triagekit;

std::filesystem::path repo_dir() { return TRIAGEKIT_REPO_DIR; }

std::filesystem::path repo_path(std::string_view rel) { return repo_dir() / rel; }

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("test helper: cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spill(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("test helper: cannot write " + path.string());
  out << text;
}

std::filesystem::path make_temp_dir(std::string_view tag) {
  static std::atomic<unsigned> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("triagekit_" + std::string(tag) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

namespace {

const std::vector<std::string> kFeaturePool = {"f1", "f2", "f3", "f4"};

double grid_threshold(std::mt19937_64& rng) {
  return 50.0 + 100.0 * static_cast<double>(rng() % 10);  // 50, 150, ..., 950
}

Comparator random_cmp(std::mt19937_64& rng) {
  switch (rng() % 4) {
    case 0: return Comparator::less;
    case 1: return Comparator::less_eq;
    case 2: return Comparator::greater;
    default: return Comparator::greater_eq;
  }
}

NodeId gen_node(RuleTreeBuilder& builder, std::mt19937_64& rng, int depth_left, bool allow_leaf,
                std::size_t& leaves_made) {
  if (allow_leaf && (depth_left == 0 || rng() % 100 < 35)) {
    // The first two leaves in DFS order pin down one of each outcome.
    Outcome outcome;
    if (leaves_made == 0) {
      outcome = Outcome::survival;
    } else if (leaves_made == 1) {
      outcome = Outcome::death;
    } else {
      outcome = (rng() % 2 == 0) ? Outcome::survival : Outcome::death;
    }
    ++leaves_made;
    return builder.add_leaf(outcome);
  }
  const std::string feature = kFeaturePool[rng() % kFeaturePool.size()];
  const Comparator cmp = random_cmp(rng);
  const double threshold = grid_threshold(rng);
  const NodeId if_true = gen_node(builder, rng, depth_left - 1, true, leaves_made);
  const NodeId if_false = gen_node(builder, rng, depth_left - 1, true, leaves_made);
  return builder.add_split(feature, cmp, threshold, if_true, if_false);
}

}  // namespace

RuleTree random_tree(std::mt19937_64& rng, int max_depth) {
  RuleTreeBuilder builder;
  builder.set_name("random_" + std::to_string(rng() % 100000));
  for (const auto& name : kFeaturePool) {
    builder.add_feature({name, "U/L", false});
  }
  std::size_t leaves_made = 0;
  builder.set_root(gen_node(builder, rng, max_depth, false, leaves_made));
  return std::move(builder).build();
}

Cohort random_cohort(std::mt19937_64& rng, const RuleTree& tree, std::size_t n, bool with_holes) {
  Cohort cohort;
  cohort.source = "random";
  for (std::size_t i = 1; i <= n; ++i) {
    PatientRecord rec;
    char id[16];
    std::snprintf(id, sizeof(id), "r%04zu", i);
    rec.id = id;
    rec.age = 20.0 + static_cast<double>(rng() % 71);
    rec.sex = (rng() % 2 == 0) ? Sex::male : Sex::female;
    switch (rng() % 4) {
      case 0: rec.severity = Severity::mild; break;
      case 1: rec.severity = Severity::moderate; break;
      case 2: rec.severity = Severity::severe; break;
      default: rec.severity = Severity::unknown; break;
    }
    rec.outcome = (rng() % 3 == 0) ? PatientOutcome::deceased : PatientOutcome::survived;
    for (const auto& feature : tree.features()) {
      if (with_holes && rng() % 100 < 15) continue;
      const double value = static_cast<double>(rng() % 1000) + 0.25;
      rec.labs[feature.name] = LabMeasurement{value, ""};
    }
    cohort.records.push_back(std::move(rec));
  }
  return cohort;
}

BruteCounts brute_force_eval(const RuleTree& tree, const Cohort& cohort) {
  BruteCounts counts;
  for (const auto& rec : cohort.records) {
    LabValues labs;
    for (const auto& [feature, lab] : rec.labs) labs[feature] = lab.value;
    Outcome predicted;
    try {
      predicted = predict(tree, labs).outcome;
    } catch (const MissingFeatureError&) {
      ++counts.excluded;
      continue;
    }
    if (rec.outcome == PatientOutcome::survived) {
      const bool correct = predicted == Outcome::survival;
      (correct ? counts.overall.survivors_correct : counts.overall.survivors_missed) += 1;
      auto& stratum = counts.by_severity[rec.severity];
      (correct ? stratum.survivors_correct : stratum.survivors_missed) += 1;
    } else {
      const bool correct = predicted == Outcome::death;
      (correct ? counts.overall.deceased_correct : counts.overall.deceased_missed) += 1;
    }
  }
  return counts;
}

SynthSpec random_spec(std::mt19937_64& rng) {
  SynthSpec spec;
  spec.seed = rng();
  const auto stratum = [&rng]() {
    StratumSpec s;
    s.total = rng() % 13;
    s.correct = (s.total == 0) ? 0 : rng() % (s.total + 1);
    return s;
  };
  spec.mild = stratum();
  spec.moderate = stratum();
  spec.severe = stratum();
  spec.deceased = stratum();
  for (const auto& name : kFeaturePool) {
    spec.bounds[name] = ValueBounds{0.0, 1000.0};
  }
  return spec;
}

bool spec_feasible(const RuleTree& tree) {
  SynthSpec probe;
  probe.seed = 1;
  probe.mild = {2, 1};
  probe.deceased = {2, 1};
  for (const auto& name : kFeaturePool) {
    probe.bounds[name] = ValueBounds{0.0, 1000.0};
  }
  try {
    generate(tree, probe);
    return true;
  } catch (const InfeasibleSpecError&) {
    return false;
  }
}

}  // namespace testkit

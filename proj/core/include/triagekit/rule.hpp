#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace triagekit {

enum class Comparator { less, less_eq, greater, greater_eq };

std::string_view to_token(Comparator cmp);

/// value <cmp> threshold, exact floating-point comparison. Thresholds are
/// published constants, not fitted quantities, so there is no epsilon here;
/// boundary behavior is a property of the rule file's comparator tokens.
bool compare(double value, Comparator cmp, double threshold);

enum class Outcome { survival, death };

std::string_view to_token(Outcome outcome);

struct FeatureDef {
  std::string name;
  std::string unit;
  bool assay_sensitive = false;

  friend bool operator==(const FeatureDef&, const FeatureDef&) = default;
};

using NodeId = std::uint32_t;

struct LeafNode {
  Outcome outcome;
};

struct SplitNode {
  std::string feature;
  Comparator cmp;
  double threshold;
  NodeId if_true;
  NodeId if_false;
};

using RuleNode = std::variant<LeafNode, SplitNode>;

/// A binary threshold decision tree over named laboratory features.
/// Immutable once built; safe to share across concurrent evaluators.
class RuleTree {
public:
  const std::string& name() const noexcept { return name_; }
  const std::vector<FeatureDef>& features() const noexcept { return features_; }
  const FeatureDef* find_feature(std::string_view name) const;

  NodeId root() const noexcept { return root_; }
  const RuleNode& node(NodeId id) const { return nodes_.at(id); }
  std::size_t node_count() const noexcept { return nodes_.size(); }

  /// Internal nodes on the deepest root-to-leaf path (a lone leaf has depth 0).
  int depth() const;

  /// Structural equality: same name, same feature declarations in order, and
  /// isomorphic node structure from the root (arena layout is irrelevant).
  bool structurally_equal(const RuleTree& other) const;

  friend bool operator==(const RuleTree& a, const RuleTree& b) { return a.structurally_equal(b); }

private:
  friend class RuleTreeBuilder;
  std::string name_;
  std::vector<FeatureDef> features_;
  std::vector<RuleNode> nodes_;
  NodeId root_ = 0;
};

/// Assembles a RuleTree node by node. build() validates the invariants:
/// unique feature names, non-empty units, splits referencing declared
/// features, finite thresholds, tree-shaped arena, and both outcome labels
/// present among the leaves. Throws Error with a description on violation.
class RuleTreeBuilder {
public:
  RuleTreeBuilder& set_name(std::string name);
  RuleTreeBuilder& add_feature(FeatureDef def);
  NodeId add_leaf(Outcome outcome);
  NodeId add_split(std::string feature, Comparator cmp, double threshold, NodeId if_true,
                   NodeId if_false);
  RuleTreeBuilder& set_root(NodeId id);

  RuleTree build() &&;

private:
  RuleTree tree_;
  bool root_set_ = false;
};

struct TraceStep {
  std::string feature;
  double observed;
  Comparator cmp;
  double threshold;
  bool took_true_branch;

  friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

/// One triage call with its full decision path, for explainability.
/// Replaying `path` against the tree reproduces `outcome`.
struct PredictionTrace {
  Outcome outcome;
  std::vector<TraceStep> path;

  friend bool operator==(const PredictionTrace&, const PredictionTrace&) = default;
};

using LabValues = std::map<std::string, double>;

/// Walk the tree against a panel of already-harmonized lab values. Pure.
/// Values are only required for features on the evaluated path.
/// Throws MissingFeatureError / NonFiniteValueError.
PredictionTrace predict(const RuleTree& tree, const LabValues& labs);

}  // namespace triagekit

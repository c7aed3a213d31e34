#include "triagekit/rule.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "triagekit/errors.hpp"

namespace triagekit {

std::string_view to_token(Comparator cmp) {
  switch (cmp) {
    case Comparator::less: return "<";
    case Comparator::less_eq: return "<=";
    case Comparator::greater: return ">";
    case Comparator::greater_eq: return ">=";
  }
  return "?";
}

bool compare(double value, Comparator cmp, double threshold) {
  switch (cmp) {
    case Comparator::less: return value < threshold;
    case Comparator::less_eq: return value <= threshold;
    case Comparator::greater: return value > threshold;
    case Comparator::greater_eq: return value >= threshold;
  }
  return false;
}

std::string_view to_token(Outcome outcome) {
  return outcome == Outcome::survival ? "Survival" : "Death";
}

const FeatureDef* RuleTree::find_feature(std::string_view name) const {
  for (const auto& f : features_) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

int RuleTree::depth() const {
  std::function<int(NodeId)> walk = [&](NodeId id) -> int {
    const auto& n = nodes_[id];
    if (std::holds_alternative<LeafNode>(n)) return 0;
    const auto& s = std::get<SplitNode>(n);
    return 1 + std::max(walk(s.if_true), walk(s.if_false));
  };
  return walk(root_);
}

bool RuleTree::structurally_equal(const RuleTree& other) const {
  if (name_ != other.name_ || features_ != other.features_) return false;
  std::function<bool(NodeId, NodeId)> eq = [&](NodeId a, NodeId b) -> bool {
    const auto& na = nodes_[a];
    const auto& nb = other.nodes_[b];
    if (na.index() != nb.index()) return false;
    if (const auto* leaf = std::get_if<LeafNode>(&na)) {
      return leaf->outcome == std::get<LeafNode>(nb).outcome;
    }
    const auto& sa = std::get<SplitNode>(na);
    const auto& sb = std::get<SplitNode>(nb);
    return sa.feature == sb.feature && sa.cmp == sb.cmp && sa.threshold == sb.threshold &&
           eq(sa.if_true, sb.if_true) && eq(sa.if_false, sb.if_false);
  };
  return eq(root_, other.root_);
}

RuleTreeBuilder& RuleTreeBuilder::set_name(std::string name) {
  tree_.name_ = std::move(name);
  return *this;
}

RuleTreeBuilder& RuleTreeBuilder::add_feature(FeatureDef def) {
  tree_.features_.push_back(std::move(def));
  return *this;
}

NodeId RuleTreeBuilder::add_leaf(Outcome outcome) {
  tree_.nodes_.emplace_back(LeafNode{outcome});
  return static_cast<NodeId>(tree_.nodes_.size() - 1);
}

NodeId RuleTreeBuilder::add_split(std::string feature, Comparator cmp, double threshold,
                                  NodeId if_true, NodeId if_false) {
  tree_.nodes_.emplace_back(SplitNode{std::move(feature), cmp, threshold, if_true, if_false});
  return static_cast<NodeId>(tree_.nodes_.size() - 1);
}

RuleTreeBuilder& RuleTreeBuilder::set_root(NodeId id) {
  tree_.root_ = id;
  root_set_ = true;
  return *this;
}

RuleTree RuleTreeBuilder::build() && {
  if (tree_.nodes_.empty() || !root_set_) throw Error("rule tree: no root node");

  std::set<std::string_view> names;
  for (const auto& f : tree_.features_) {
    if (f.name.empty()) throw Error("rule tree: empty feature name");
    if (f.unit.empty()) throw Error("rule tree: feature '" + f.name + "' has empty unit");
    if (!names.insert(f.name).second) throw Error("rule tree: duplicate feature '" + f.name + "'");
  }

  // Arena must form a tree rooted at root_: every node reachable exactly once.
  std::vector<int> visits(tree_.nodes_.size(), 0);
  bool saw_survival = false;
  bool saw_death = false;
  std::function<void(NodeId)> walk = [&](NodeId id) {
    if (id >= tree_.nodes_.size()) throw Error("rule tree: node id out of range");
    if (++visits[id] > 1) throw Error("rule tree: node shared or cyclic");
    const auto& n = tree_.nodes_[id];
    if (const auto* leaf = std::get_if<LeafNode>(&n)) {
      (leaf->outcome == Outcome::survival ? saw_survival : saw_death) = true;
      return;
    }
    const auto& s = std::get<SplitNode>(n);
    if (!names.contains(s.feature))
      throw Error("rule tree: split references undeclared feature '" + s.feature + "'");
    if (!std::isfinite(s.threshold))
      throw Error("rule tree: non-finite threshold on feature '" + s.feature + "'");
    walk(s.if_true);
    walk(s.if_false);
  };
  walk(tree_.root_);

  for (std::size_t i = 0; i < visits.size(); ++i) {
    if (visits[i] == 0) throw Error("rule tree: unreachable node in arena");
  }
  if (!saw_survival || !saw_death)
    throw Error("rule tree: degenerate (single reachable outcome)");

  return std::move(tree_);
}

PredictionTrace predict(const RuleTree& tree, const LabValues& labs) {
  PredictionTrace trace;
  NodeId id = tree.root();
  for (std::size_t guard = 0; guard <= tree.node_count(); ++guard) {
    const auto& n = tree.node(id);
    if (const auto* leaf = std::get_if<LeafNode>(&n)) {
      trace.outcome = leaf->outcome;
      return trace;
    }
    const auto& s = std::get<SplitNode>(n);
    auto it = labs.find(s.feature);
    if (it == labs.end()) throw MissingFeatureError(s.feature);
    const double observed = it->second;
    if (!std::isfinite(observed))
      throw NonFiniteValueError("feature '" + s.feature + "'");
    const bool taken = compare(observed, s.cmp, s.threshold);
    trace.path.push_back({s.feature, observed, s.cmp, s.threshold, taken});
    id = taken ? s.if_true : s.if_false;
  }
  throw Error("rule tree: walk did not terminate");  // unreachable on validated trees
}

}  // namespace triagekit

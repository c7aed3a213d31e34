#include "triagekit/rule_printer.hpp"

#include <functional>
#include <sstream>
#include <variant>

#include "triagekit/numeric.hpp"

namespace triagekit {

std::string print_rule(const RuleTree& tree) {
  std::ostringstream out;
  out << "rule \"" << tree.name() << "\";\n";
  for (const auto& f : tree.features()) {
    out << "feature " << f.name << " unit \"" << f.unit << "\"";
    if (f.assay_sensitive) out << " assay_sensitive";
    out << ";\n";
  }
  out << "tree\n";

  std::function<void(NodeId, int)> emit = [&](NodeId id, int depth) {
    const std::string indent(2 * static_cast<std::size_t>(depth), ' ');
    const auto& n = tree.node(id);
    if (const auto* leaf = std::get_if<LeafNode>(&n)) {
      out << indent << "leaf " << to_token(leaf->outcome) << "\n";
      return;
    }
    const auto& s = std::get<SplitNode>(n);
    out << indent << "if " << s.feature << " " << to_token(s.cmp) << " "
        << format_double_shortest(s.threshold) << " then\n";
    emit(s.if_true, depth + 1);
    out << indent << "else\n";
    emit(s.if_false, depth + 1);
  };
  emit(tree.root(), 1);
  return out.str();
}

}  // namespace triagekit

#pragma once

#include <string>

#include "triagekit/rule.hpp"

namespace triagekit {

/// Canonical rule-DSL text for a tree. Structurally equal trees print
/// byte-identically, and parse_rule(print_rule(t)) is structurally equal to t
/// with bit-identical thresholds (shortest exact decimal form).
std::string print_rule(const RuleTree& tree);

}  // namespace triagekit

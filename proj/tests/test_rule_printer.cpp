#include <random>
#include <string>

#include "doctest.h"
#include "support/helpers.hpp"
#include "triagekit/rule.hpp"
#include "triagekit/rule_parser.hpp"
#include "triagekit/rule_printer.hpp"

using namespace triagekit;

TEST_SUITE("rule_printer") {

TEST_CASE("canonical layout: two-space indent, one node per line") {
  RuleTreeBuilder builder;
  builder.set_name("demo");
  builder.add_feature({"LDH", "U/L", true});
  builder.add_feature({"hs_CRP", "mg/L", false});
  const NodeId death = builder.add_leaf(Outcome::death);
  const NodeId survival = builder.add_leaf(Outcome::survival);
  const NodeId inner = builder.add_split("hs_CRP", Comparator::greater_eq, 41.2, death, survival);
  const NodeId survival2 = builder.add_leaf(Outcome::survival);
  builder.set_root(builder.add_split("LDH", Comparator::greater_eq, 365.0, inner, survival2));
  const RuleTree tree = std::move(builder).build();

  const std::string expected =
      "rule \"demo\";\n"
      "feature LDH unit \"U/L\" assay_sensitive;\n"
      "feature hs_CRP unit \"mg/L\";\n"
      "tree\n"
      "  if LDH >= 365 then\n"
      "    if hs_CRP >= 41.2 then\n"
      "      leaf Death\n"
      "    else\n"
      "      leaf Survival\n"
      "  else\n"
      "    leaf Survival\n";
  CHECK(print_rule(tree) == expected);
}

TEST_CASE("shipped rule file body already is canonical") {
  const auto result = parse_rule_file(testkit::repo_path("rules/yan2020.rule"));
  REQUIRE(result.ok());
  const std::string canonical = print_rule(*result.tree);
  // The file carries a comment header; everything from "rule" onward must be
  // the canonical form byte for byte.
  const std::string file_text = testkit::slurp(testkit::repo_path("rules/yan2020.rule"));
  const auto pos = file_text.find("rule \"");
  REQUIRE(pos != std::string::npos);
  CHECK(file_text.substr(pos) == canonical);
}

TEST_CASE("round-trip: parse(print(t)) is structurally equal, 1000 random trees") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const RuleTree tree = testkit::random_tree(rng);
    const std::string text = print_rule(tree);
    const auto reparsed = parse_rule(text);
    REQUIRE_MESSAGE(reparsed.ok(), "iteration ", i, ": ",
                    reparsed.error ? reparsed.error->to_string() : "");
    CHECK(reparsed.tree->structurally_equal(tree));
    // Canonicalization: printing the reparse changes nothing.
    CHECK(print_rule(*reparsed.tree) == text);
  }
}

TEST_CASE("thresholds print in shortest exact decimal form") {
  for (const double threshold : {41.2, 365.0, 14.7, 0.5, 1e-3, 123456.789}) {
    RuleTreeBuilder builder;
    builder.set_name("t");
    builder.add_feature({"a", "x", false});
    const NodeId s = builder.add_leaf(Outcome::survival);
    const NodeId d = builder.add_leaf(Outcome::death);
    builder.set_root(builder.add_split("a", Comparator::less, threshold, s, d));
    const RuleTree tree = std::move(builder).build();

    const auto reparsed = parse_rule(print_rule(tree));
    REQUIRE(reparsed.ok());
    const auto& split = std::get<SplitNode>(reparsed.tree->node(reparsed.tree->root()));
    CHECK(split.threshold == threshold);  // bit-identical after the round trip
  }
}

TEST_CASE("structurally equal trees print byte-identically") {
  // Same structure, different arena insertion order.
  RuleTreeBuilder b1;
  b1.set_name("same");
  b1.add_feature({"a", "x", false});
  const NodeId s1 = b1.add_leaf(Outcome::survival);
  const NodeId d1 = b1.add_leaf(Outcome::death);
  b1.set_root(b1.add_split("a", Comparator::greater, 5.0, s1, d1));
  const RuleTree t1 = std::move(b1).build();

  RuleTreeBuilder b2;
  b2.set_name("same");
  b2.add_feature({"a", "x", false});
  const NodeId d2 = b2.add_leaf(Outcome::death);
  const NodeId s2 = b2.add_leaf(Outcome::survival);
  b2.set_root(b2.add_split("a", Comparator::greater, 5.0, s2, d2));
  const RuleTree t2 = std::move(b2).build();

  REQUIRE(t1.structurally_equal(t2));
  CHECK(print_rule(t1) == print_rule(t2));
}

}  // TEST_SUITE

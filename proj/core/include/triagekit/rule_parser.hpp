#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "triagekit/rule.hpp"

namespace triagekit {

enum class ParseErrorKind {
  syntax,             // grammar violation, malformed number, bad string, ...
  unknown_feature,    // split references an undeclared feature
  degenerate_rule,    // only one outcome label reachable
  duplicate_feature,  // feature declared twice
};

std::string_view to_token(ParseErrorKind kind);

struct ParseDiagnostic {
  ParseErrorKind kind = ParseErrorKind::syntax;
  std::string message;
  int line = 0;    // 1-based
  int column = 0;  // 1-based

  /// "3:7: syntax: expected threshold number"
  std::string to_string() const;
};

struct ParseResult {
  std::optional<RuleTree> tree;
  std::optional<ParseDiagnostic> error;

  bool ok() const noexcept { return tree.has_value(); }
};

/// Parse rule-DSL source. Total: any byte sequence yields either a tree or a
/// diagnostic with position, never an abort. `#` starts a line comment.
///
///   rule_file    = header , { feature_decl } , tree_decl ;
///   header       = "rule" , quoted_name , ";" ;
///   feature_decl = "feature" , ident , "unit" , quoted_string ,
///                  [ "assay_sensitive" ] , ";" ;
///   tree_decl    = "tree" , node ;
///   node         = "leaf" , ( "Survival" | "Death" )
///                | "if" , ident , cmp , number , "then" , node , "else" , node ;
///   cmp          = "<" | "<=" | ">" | ">=" ;
ParseResult parse_rule(std::string_view text);

/// Read and parse a rule file. Throws FileUnreadableError; parse problems are
/// reported through the result, same as parse_rule.
ParseResult parse_rule_file(const std::filesystem::path& path);

}  // namespace triagekit

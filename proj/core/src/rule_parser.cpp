#include "triagekit/rule_parser.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include "triagekit/errors.hpp"

namespace triagekit {

namespace {

constexpr int kMaxNodeDepth = 200;

bool is_ident_start(char c) {
  return c == '_' || std::isalpha(static_cast<unsigned char>(c));
}

bool is_ident_char(char c) {
  return c == '_' || std::isalnum(static_cast<unsigned char>(c));
}

const std::set<std::string_view> kKeywords = {
    "rule", "feature", "unit", "assay_sensitive", "tree",
    "if",   "then",    "else", "leaf",            "Survival", "Death"};

enum class TokKind { ident, number, string, semicolon, cmp, end };

struct Token {
  TokKind kind;
  std::string text;       // ident name, string contents, or cmp token
  double number = 0.0;    // valid when kind == number
  int line = 1;
  int column = 1;
};

/// Thrown internally to unwind to parse_rule(); converted into a diagnostic.
struct ParseAbort {
  ParseDiagnostic diag;
};

[[noreturn]] void fail(ParseErrorKind kind, std::string message, int line, int column) {
  throw ParseAbort{{kind, std::move(message), line, column}};
}

class Lexer {
public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_trivia();
    Token tok;
    tok.line = line_;
    tok.column = column_;
    if (pos_ >= text_.size()) {
      tok.kind = TokKind::end;
      return tok;
    }
    const char c = text_[pos_];
    if (c == ';') {
      advance();
      tok.kind = TokKind::semicolon;
      tok.text = ";";
      return tok;
    }
    if (c == '<' || c == '>') {
      advance();
      tok.kind = TokKind::cmp;
      tok.text = c;
      if (pos_ < text_.size() && text_[pos_] == '=') {
        advance();
        tok.text += '=';
      }
      return tok;
    }
    if (c == '"') return lex_string(tok);
    if (is_ident_start(c)) {
      tok.kind = TokKind::ident;
      while (pos_ < text_.size() && is_ident_char(text_[pos_])) {
        tok.text += text_[pos_];
        advance();
      }
      return tok;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
      return lex_number(tok);
    }
    fail(ParseErrorKind::syntax,
         "unexpected character '" + printable(c) + "'", tok.line, tok.column);
  }

private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_trivia() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') {
        advance();
      } else {
        break;
      }
    }
  }

  Token lex_string(Token tok) {
    tok.kind = TokKind::string;
    advance();  // opening quote
    while (true) {
      if (pos_ >= text_.size() || text_[pos_] == '\n') {
        fail(ParseErrorKind::syntax, "unterminated string literal", tok.line, tok.column);
      }
      const char c = text_[pos_];
      advance();
      if (c == '"') return tok;
      tok.text += c;
    }
  }

  Token lex_number(Token tok) {
    tok.kind = TokKind::number;
    const std::size_t start = pos_;
    if (text_[pos_] == '-' || text_[pos_] == '+') advance();
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      advance();
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      advance();
      if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) advance();
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance();
    }
    tok.text = std::string(text_.substr(start, pos_ - start));
    // from_chars rejects a leading '+' that the grammar tolerates.
    const std::size_t skip = tok.text.starts_with('+') ? 1 : 0;
    const char* first = tok.text.data() + skip;
    const char* last = tok.text.data() + tok.text.size();
    auto [ptr, ec] = std::from_chars(first, last, tok.number);
    if (ec == std::errc::result_out_of_range) {
      fail(ParseErrorKind::syntax, "number out of range: " + tok.text, tok.line, tok.column);
    }
    if (ec != std::errc{} || ptr != last) {
      fail(ParseErrorKind::syntax, "malformed number: " + tok.text, tok.line, tok.column);
    }
    return tok;
  }

  static std::string printable(char c) {
    if (std::isprint(static_cast<unsigned char>(c))) return std::string(1, c);
    char buf[8];
    std::snprintf(buf, sizeof(buf), "\\x%02x", static_cast<unsigned char>(c));
    return buf;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

class Parser {
public:
  explicit Parser(std::string_view text) : lexer_(text) { shift(); }

  RuleTree parse_file() {
    expect_keyword("rule");
    builder_.set_name(expect(TokKind::string, "rule name string").text);
    expect(TokKind::semicolon, "';'");

    while (cur_.kind == TokKind::ident && cur_.text == "feature") parse_feature_decl();

    const Token tree_tok = cur_;
    expect_keyword("tree");
    builder_.set_root(parse_node(0));

    if (cur_.kind != TokKind::end) {
      fail(ParseErrorKind::syntax, "expected end of input, found '" + describe(cur_) + "'",
           cur_.line, cur_.column);
    }

    try {
      return std::move(builder_).build();
    } catch (const Error& e) {
      // Grammar-level checks already ran; only the reachability invariant
      // can fire here.
      fail(ParseErrorKind::degenerate_rule, e.what(), tree_tok.line, tree_tok.column);
    }
  }

private:
  void shift() { cur_ = lexer_.next(); }

  Token expect(TokKind kind, const std::string& what) {
    if (cur_.kind != kind) {
      fail(ParseErrorKind::syntax, "expected " + what + ", found '" + describe(cur_) + "'",
           cur_.line, cur_.column);
    }
    Token tok = cur_;
    shift();
    return tok;
  }

  void expect_keyword(std::string_view kw) {
    if (cur_.kind != TokKind::ident || cur_.text != kw) {
      fail(ParseErrorKind::syntax,
           "expected '" + std::string(kw) + "', found '" + describe(cur_) + "'", cur_.line,
           cur_.column);
    }
    shift();
  }

  void parse_feature_decl() {
    shift();  // "feature"
    const Token name = expect(TokKind::ident, "feature name");
    if (kKeywords.contains(name.text)) {
      fail(ParseErrorKind::syntax, "feature name '" + name.text + "' collides with a keyword",
           name.line, name.column);
    }
    if (!feature_names_.insert(name.text).second) {
      fail(ParseErrorKind::duplicate_feature, "feature '" + name.text + "' declared twice",
           name.line, name.column);
    }
    expect_keyword("unit");
    const Token unit = expect(TokKind::string, "unit string");
    if (unit.text.empty()) {
      fail(ParseErrorKind::syntax, "unit must be non-empty", unit.line, unit.column);
    }
    bool sensitive = false;
    if (cur_.kind == TokKind::ident && cur_.text == "assay_sensitive") {
      sensitive = true;
      shift();
    }
    expect(TokKind::semicolon, "';'");
    builder_.add_feature({name.text, unit.text, sensitive});
  }

  NodeId parse_node(int depth) {
    if (depth > kMaxNodeDepth) {
      fail(ParseErrorKind::syntax, "tree nesting deeper than the supported limit", cur_.line,
           cur_.column);
    }
    if (cur_.kind == TokKind::ident && cur_.text == "leaf") {
      shift();
      const Token label = expect(TokKind::ident, "'Survival' or 'Death'");
      if (label.text == "Survival") return builder_.add_leaf(Outcome::survival);
      if (label.text == "Death") return builder_.add_leaf(Outcome::death);
      fail(ParseErrorKind::syntax, "unknown outcome '" + label.text + "'", label.line,
           label.column);
    }
    if (cur_.kind == TokKind::ident && cur_.text == "if") {
      shift();
      const Token feature = expect(TokKind::ident, "feature name");
      if (!feature_names_.contains(feature.text)) {
        fail(ParseErrorKind::unknown_feature,
             "node references undeclared feature '" + feature.text + "'", feature.line,
             feature.column);
      }
      const Token cmp_tok = expect(TokKind::cmp, "comparator (<, <=, >, >=)");
      const Comparator cmp = cmp_tok.text == "<"    ? Comparator::less
                             : cmp_tok.text == "<=" ? Comparator::less_eq
                             : cmp_tok.text == ">"  ? Comparator::greater
                                                    : Comparator::greater_eq;
      const Token threshold = expect(TokKind::number, "threshold number");
      expect_keyword("then");
      const NodeId if_true = parse_node(depth + 1);
      expect_keyword("else");
      const NodeId if_false = parse_node(depth + 1);
      return builder_.add_split(feature.text, cmp, threshold.number, if_true, if_false);
    }
    fail(ParseErrorKind::syntax, "expected 'leaf' or 'if', found '" + describe(cur_) + "'",
         cur_.line, cur_.column);
  }

  static std::string describe(const Token& tok) {
    switch (tok.kind) {
      case TokKind::end: return "end of input";
      case TokKind::string: return "\"" + tok.text + "\"";
      default: return tok.text;
    }
  }

  Lexer lexer_;
  Token cur_;
  RuleTreeBuilder builder_;
  std::set<std::string> feature_names_;
};

}  // namespace

std::string_view to_token(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::syntax: return "syntax";
    case ParseErrorKind::unknown_feature: return "unknown feature";
    case ParseErrorKind::degenerate_rule: return "degenerate rule";
    case ParseErrorKind::duplicate_feature: return "duplicate feature";
  }
  return "?";
}

std::string ParseDiagnostic::to_string() const {
  std::ostringstream out;
  out << line << ":" << column << ": " << to_token(kind) << ": " << message;
  return out.str();
}

ParseResult parse_rule(std::string_view text) {
  ParseResult result;
  try {
    result.tree = Parser(text).parse_file();
  } catch (const ParseAbort& abort) {
    result.error = abort.diag;
  } catch (const std::exception& e) {
    result.error = ParseDiagnostic{ParseErrorKind::syntax,
                                   std::string("internal parse failure: ") + e.what(), 0, 0};
  }
  return result;
}

ParseResult parse_rule_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileUnreadableError(path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_rule(buf.str());
}

}  // namespace triagekit

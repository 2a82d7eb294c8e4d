#include "claw/parse.hpp"

#include <cctype>
#include <map>
#include <set>
#include <sstream>

namespace claw {

std::string ParseError::to_string() const {
  std::ostringstream out;
  out << "line " << line << ", col " << col << ": " << message;
  return out.str();
}

namespace {

enum class Tok {
  Ident,
  String,
  Int,
  LBrace,
  RBrace,
  LParen,
  RParen,
  Comma,
  Colon,
  DotDot,
  Arrow,  // =>
  EqEq,   // ==
  Le,     // <=
  End,
  Bad,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int64_t number = 0;
  std::size_t line = 1;
  std::size_t col = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_space();
    Token tok;
    tok.line = line_;
    tok.col = col_;
    if (pos_ >= text_.size()) {
      tok.kind = Tok::End;
      return tok;
    }
    char c = text_[pos_];
    if (c == '{') return punct(tok, Tok::LBrace);
    if (c == '}') return punct(tok, Tok::RBrace);
    if (c == '(') return punct(tok, Tok::LParen);
    if (c == ')') return punct(tok, Tok::RParen);
    if (c == ',') return punct(tok, Tok::Comma);
    if (c == ':') return punct(tok, Tok::Colon);
    if (c == '.') {
      if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '.') {
        advance();
        advance();
        tok.kind = Tok::DotDot;
        return tok;
      }
      advance();
      return bad(tok, "unexpected '.'");
    }
    if (c == '=') {
      if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
        advance();
        advance();
        tok.kind = Tok::Arrow;
        return tok;
      }
      if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '=') {
        advance();
        advance();
        tok.kind = Tok::EqEq;
        return tok;
      }
      advance();
      return bad(tok, "unexpected '='");
    }
    if (c == '<') {
      if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '=') {
        advance();
        advance();
        tok.kind = Tok::Le;
        return tok;
      }
      advance();
      return bad(tok, "unexpected '<'");
    }
    if (c == '"') return lex_string(tok);
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && pos_ + 1 < text_.size() &&
         std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))))
      return lex_int(tok);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
      return lex_ident(tok);
    advance();
    return bad(tok, std::string("unexpected character '") + c + "'");
  }

 private:
  Token& punct(Token& tok, Tok kind) {
    advance();
    tok.kind = kind;
    return tok;
  }

  Token& bad(Token& tok, std::string message) {
    tok.kind = Tok::Bad;
    tok.text = std::move(message);
    return tok;
  }

  Token& lex_string(Token& tok) {
    advance();  // opening quote
    std::string value;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '"') {
        advance();
        tok.kind = Tok::String;
        tok.text = std::move(value);
        return tok;
      }
      if (c == '\n') break;
      if (c == '\\' && pos_ + 1 < text_.size() &&
          (text_[pos_ + 1] == '"' || text_[pos_ + 1] == '\\')) {
        advance();
        value += text_[pos_];
        advance();
        continue;
      }
      value += c;
      advance();
    }
    return bad(tok, "unterminated string");
  }

  Token& lex_int(Token& tok) {
    std::string digits;
    if (text_[pos_] == '-') {
      digits += '-';
      advance();
    }
    while (pos_ < text_.size() &&
           std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      digits += text_[pos_];
      advance();
    }
    tok.kind = Tok::Int;
    tok.text = digits;
    try {
      tok.number = std::stoll(digits);
    } catch (...) {
      return bad(tok, "integer out of range: " + digits);
    }
    return tok;
  }

  Token& lex_ident(Token& tok) {
    std::string word;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') break;
      word += c;
      advance();
    }
    tok.kind = Tok::Ident;
    tok.text = std::move(word);
    return tok;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
        continue;
      }
      break;
    }
  }

  void advance() {
    if (pos_ >= text_.size()) return;
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

const char* const kTopKeywords[] = {"entity", "grant", "default", "policy"};

bool is_top_keyword(const Token& tok) {
  if (tok.kind != Tok::Ident) return false;
  for (const char* kw : kTopKeywords)
    if (tok.text == kw) return true;
  return false;
}

struct PendingRef {
  std::string name;
  std::size_t line;
  std::size_t col;
  std::string context;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text) { shift(); }

  ParseResult run() {
    while (cur_.kind != Tok::End) {
      if (cur_.kind != Tok::Ident) {
        error_here("expected entity, grant, default, or policy");
        synchronize();
        continue;
      }
      if (cur_.text == "entity") {
        parse_entity();
      } else if (cur_.text == "grant") {
        parse_grant();
      } else if (cur_.text == "default") {
        parse_default();
      } else if (cur_.text == "policy") {
        parse_policy();
      } else {
        error_here("expected entity, grant, default, or policy, got '" +
                   cur_.text + "'");
        synchronize();
      }
    }
    check_references();
    return std::move(result_);
  }

 private:
  // -- token plumbing ----------------------------------------------------

  void shift() {
    cur_ = lexer_.next();
    while (cur_.kind == Tok::Bad) {
      result_.errors.push_back({cur_.line, cur_.col, cur_.text});
      cur_ = lexer_.next();
    }
  }

  bool accept(Tok kind) {
    if (cur_.kind != kind) return false;
    shift();
    return true;
  }

  bool expect(Tok kind, std::string_view what) {
    if (accept(kind)) return true;
    error_here(std::string("expected ") + std::string(what));
    return false;
  }

  bool accept_word(std::string_view word) {
    if (cur_.kind != Tok::Ident || cur_.text != word) return false;
    shift();
    return true;
  }

  bool expect_word(std::string_view word) {
    if (accept_word(word)) return true;
    error_here("expected '" + std::string(word) + "'");
    return false;
  }

  void error_here(std::string message) {
    result_.errors.push_back({cur_.line, cur_.col, std::move(message)});
  }

  void error_at(const Token& tok, std::string message) {
    result_.errors.push_back({tok.line, tok.col, std::move(message)});
  }

  // Skip to the next top-level item after an error.
  void synchronize() {
    while (cur_.kind != Tok::End && !is_top_keyword(cur_)) shift();
  }

  // -- small grammar pieces ----------------------------------------------

  std::optional<Scope> parse_scope() {
    if (cur_.kind == Tok::Ident) {
      if (auto scope = scope_from_string(cur_.text)) {
        shift();
        return scope;
      }
    }
    error_here("expected scope (Sandbox, Agent, or Monitor)");
    return std::nullopt;
  }

  std::optional<EntityKind> parse_kind() {
    if (cur_.kind == Tok::Ident) {
      if (auto kind = kind_from_string(cur_.text)) {
        shift();
        return kind;
      }
    }
    error_here("expected entity kind (file, dir, proc, socket, or dev)");
    return std::nullopt;
  }

  std::optional<std::string> parse_ident(std::string_view what) {
    if (cur_.kind != Tok::Ident) {
      error_here(std::string("expected ") + std::string(what));
      return std::nullopt;
    }
    std::string name = cur_.text;
    shift();
    return name;
  }

  // attr := IDENT ":" (STRING | INT | INT ".." INT | true | false)
  std::optional<AttributeMatcher> parse_attr() {
    Token key_tok = cur_;
    auto key = parse_ident("attribute name");
    if (!key) return std::nullopt;
    if (!expect(Tok::Colon, "':' after attribute name")) return std::nullopt;
    AttributeMatcher attr;
    attr.key = *key;
    if (cur_.kind == Tok::String) {
      attr.matcher = GlobPattern{cur_.text};
      shift();
    } else if (cur_.kind == Tok::Int) {
      int64_t lo = cur_.number;
      shift();
      if (accept(Tok::DotDot)) {
        if (cur_.kind != Tok::Int) {
          error_here("expected upper bound after '..'");
          return std::nullopt;
        }
        attr.matcher = IntRange{lo, cur_.number};
        shift();
      } else {
        attr.matcher = IntExact{lo};
      }
    } else if (cur_.kind == Tok::Ident &&
               (cur_.text == "true" || cur_.text == "false")) {
      attr.matcher = BoolExact{cur_.text == "true"};
      shift();
    } else {
      error_here("expected attribute value (string, int, range, or bool)");
      return std::nullopt;
    }
    attr_locs_.emplace_back(attr.key, key_tok);
    return attr;
  }

  // "{" [attr ("," attr)*] "}"
  std::optional<std::vector<AttributeMatcher>> parse_attr_block() {
    if (!expect(Tok::LBrace, "'{'")) return std::nullopt;
    std::vector<AttributeMatcher> attrs;
    if (accept(Tok::RBrace)) return attrs;
    while (true) {
      auto attr = parse_attr();
      if (!attr) return std::nullopt;
      attrs.push_back(std::move(*attr));
      if (accept(Tok::Comma)) continue;
      if (!expect(Tok::RBrace, "',' or '}' in attribute list"))
        return std::nullopt;
      return attrs;
    }
  }

  // "{" [perm ("," perm)*] "}"
  std::optional<PermSet> parse_perm_block() {
    if (!expect(Tok::LBrace, "'{'")) return std::nullopt;
    PermSet perms;
    if (accept(Tok::RBrace)) return perms;
    while (true) {
      if (cur_.kind != Tok::Ident) {
        error_here("expected permission name");
        return std::nullopt;
      }
      auto perm = permission_from_string(cur_.text);
      if (!perm) {
        error_here("unknown permission '" + cur_.text + "'");
        return std::nullopt;
      }
      perms.insert(*perm);
      shift();
      if (accept(Tok::Comma)) continue;
      if (!expect(Tok::RBrace, "',' or '}' in permission list"))
        return std::nullopt;
      return perms;
    }
  }

  void check_attr_types(EntityKind kind,
                        const std::vector<AttributeMatcher>& attrs) {
    for (std::size_t i = attr_mark_; i < attr_locs_.size(); ++i) {
      const auto& [key, tok] = attr_locs_[i];
      const AttributeMatcher* attr = nullptr;
      for (const auto& a : attrs)
        if (a.key == key) attr = &a;
      if (attr == nullptr) continue;
      if (!attribute_key_allowed(kind, key)) {
        error_at(tok, "unknown attribute key '" + key + "' for kind '" +
                          std::string(to_string(kind)) + "'");
        continue;
      }
      bool ok = true;
      if (key == "path" || key == "addr" || key == "scope")
        ok = std::holds_alternative<GlobPattern>(attr->matcher);
      else if (key == "pid")
        ok = std::holds_alternative<IntExact>(attr->matcher) ||
             std::holds_alternative<IntRange>(attr->matcher);
      else if (key == "credential" || key == "sensitive")
        ok = std::holds_alternative<BoolExact>(attr->matcher);
      if (!ok)
        error_at(tok, "attribute '" + key + "' has the wrong value type");
    }
  }

  // -- items ---------------------------------------------------------------

  void parse_entity() {
    shift();  // entity
    auto kind = parse_kind();
    if (!kind) return synchronize();
    Token name_tok = cur_;
    auto name = parse_ident("pattern name");
    if (!name) return synchronize();
    attr_mark_ = attr_locs_.size();
    auto attrs = parse_attr_block();
    if (!attrs) return synchronize();
    check_attr_types(*kind, *attrs);
    if (result_.model.find_pattern(*name) != nullptr) {
      error_at(name_tok, "duplicate entity name '" + *name + "'");
      return;
    }
    EntityPattern pattern;
    pattern.name = *name;
    pattern.kind = *kind;
    pattern.attrs = std::move(*attrs);
    pattern.declaration_index = result_.model.patterns.size();
    result_.model.patterns.push_back(std::move(pattern));
  }

  void parse_grant() {
    shift();  // grant
    auto scope = parse_scope();
    if (!scope) return synchronize();
    if (!expect_word("on")) return synchronize();
    Token name_tok = cur_;
    auto name = parse_ident("pattern name");
    if (!name) return synchronize();
    auto perms = parse_perm_block();
    if (!perms) return synchronize();
    pattern_refs_.push_back({*name, name_tok.line, name_tok.col, "grant"});
    result_.model.grants.push_back({*scope, *name, *perms});
  }

  void parse_default() {
    Token def_tok = cur_;
    shift();  // default
    auto scope = parse_scope();
    if (!scope) return synchronize();
    auto perms = parse_perm_block();
    if (!perms) return synchronize();
    std::size_t index = static_cast<std::size_t>(*scope);
    if (defaults_seen_[index]) {
      error_at(def_tok, "duplicate default for scope " +
                            std::string(to_string(*scope)));
      return;
    }
    defaults_seen_[index] = true;
    result_.model.defaults[index] = *perms;
  }

  void parse_policy() {
    shift();  // policy
    Token name_tok = cur_;
    auto name = parse_ident("policy name");
    if (!name) return synchronize();
    for (const auto& policy : result_.model.policies) {
      if (policy.name == *name) {
        error_at(name_tok, "duplicate policy name '" + *name + "'");
        break;
      }
    }
    if (accept_word("builtin")) {
      Token id_tok = cur_;
      auto id = parse_ident("builtin policy id");
      if (!id) return synchronize();
      auto builtin = builtin_from_string(*id);
      if (!builtin) {
        error_at(id_tok, "unknown builtin '" + *id + "'");
        return synchronize();
      }
      result_.model.policies.push_back({*name, *builtin});
      return;
    }
    if (accept_word("static")) {
      auto formula = parse_static_formula();
      if (!formula) return synchronize();
      result_.model.policies.push_back({*name, std::move(*formula)});
      return;
    }
    if (accept_word("temporal")) {
      auto rule = parse_temporal_rule();
      if (!rule) return synchronize();
      result_.model.policies.push_back({*name, std::move(*rule)});
      return;
    }
    error_here("expected 'builtin', 'static', or 'temporal'");
    synchronize();
  }

  // "{" "forall" IDENT ":" guard "=>" "perms" "(" IDENT "," SCOPE ")" REL
  // permset "}"
  std::optional<StaticFormula> parse_static_formula() {
    if (!expect(Tok::LBrace, "'{'")) return std::nullopt;
    if (!expect_word("forall")) return std::nullopt;
    StaticFormula formula;
    auto var = parse_ident("variable name");
    if (!var) return std::nullopt;
    formula.var = *var;
    if (!expect(Tok::Colon, "':' after variable")) return std::nullopt;
    // guard atoms; `kind: <kind>` selects the entity kind
    while (true) {
      Token key_tok = cur_;
      if (cur_.kind == Tok::Ident && cur_.text == "kind") {
        shift();
        if (!expect(Tok::Colon, "':' after 'kind'")) return std::nullopt;
        auto kind = parse_kind();
        if (!kind) return std::nullopt;
        if (formula.kind_guard) {
          error_at(key_tok, "duplicate kind constraint");
          return std::nullopt;
        }
        formula.kind_guard = *kind;
      } else {
        auto attr = parse_attr();
        if (!attr) return std::nullopt;
        formula.guard.push_back(std::move(*attr));
      }
      if (accept(Tok::Comma)) continue;
      break;
    }
    for (const auto& atom : formula.guard) {
      bool known = formula.kind_guard
                       ? attribute_key_allowed(*formula.kind_guard, atom.key)
                       : (atom.key == "path" || atom.key == "addr" ||
                          atom.key == "pid" || atom.key == "scope" ||
                          atom.key == "credential" || atom.key == "sensitive");
      if (!known)
        error_here("guard references unknown attribute key '" + atom.key +
                   "'");
    }
    if (!expect(Tok::Arrow, "'=>'")) return std::nullopt;
    if (!expect_word("perms")) return std::nullopt;
    if (!expect(Tok::LParen, "'('")) return std::nullopt;
    Token var_tok = cur_;
    auto inner = parse_ident("variable name");
    if (!inner) return std::nullopt;
    if (*inner != formula.var) {
      error_at(var_tok, "unknown variable '" + *inner + "' (forall binds '" +
                            formula.var + "')");
      return std::nullopt;
    }
    if (!expect(Tok::Comma, "','")) return std::nullopt;
    auto scope = parse_scope();
    if (!scope) return std::nullopt;
    formula.constraint.scope = *scope;
    if (!expect(Tok::RParen, "')'")) return std::nullopt;
    if (accept(Tok::EqEq)) {
      formula.constraint.relation = Relation::Equals;
    } else if (accept(Tok::Le)) {
      formula.constraint.relation = Relation::SubsetOf;
    } else if (accept_word("contains")) {
      formula.constraint.relation = Relation::Contains;
    } else if (accept_word("excludes")) {
      formula.constraint.relation = Relation::Excludes;
    } else {
      error_here("expected relation (==, <=, contains, excludes)");
      return std::nullopt;
    }
    auto perms = parse_perm_block();
    if (!perms) return std::nullopt;
    formula.constraint.perms = *perms;
    if (!expect(Tok::RBrace, "'}'")) return std::nullopt;
    return formula;
  }

  // "{" "when" event ("always" "forbid" | "eventually" "require") event "}"
  std::optional<TemporalRule> parse_temporal_rule() {
    if (!expect(Tok::LBrace, "'{'")) return std::nullopt;
    if (!expect_word("when")) return std::nullopt;
    TemporalRule rule;
    auto trigger = parse_event();
    if (!trigger) return std::nullopt;
    rule.trigger = std::move(*trigger);
    if (accept_word("always")) {
      if (!expect_word("forbid")) return std::nullopt;
      rule.modality = TemporalModality::AlwaysForbid;
    } else if (accept_word("eventually")) {
      if (!expect_word("require")) return std::nullopt;
      rule.modality = TemporalModality::EventuallyRequire;
    } else {
      error_here("expected 'always forbid' or 'eventually require'");
      return std::nullopt;
    }
    auto body = parse_event();
    if (!body) return std::nullopt;
    rule.body = std::move(*body);
    if (!expect(Tok::RBrace, "'}'")) return std::nullopt;
    return rule;
  }

  // event := SCOPE ACTION target; target := pattern name | kind "{" attrs "}"
  std::optional<EventMatcher> parse_event() {
    EventMatcher event;
    auto scope = parse_scope();
    if (!scope) return std::nullopt;
    event.scope = *scope;
    if (cur_.kind != Tok::Ident) {
      error_here("expected event action");
      return std::nullopt;
    }
    auto action = action_from_string(cur_.text);
    if (!action) {
      error_here("unknown event action '" + cur_.text + "'");
      return std::nullopt;
    }
    event.action = *action;
    shift();
    Token target_tok = cur_;
    if (cur_.kind == Tok::Ident && kind_from_string(cur_.text)) {
      auto kind = parse_kind();
      attr_mark_ = attr_locs_.size();
      auto attrs = parse_attr_block();
      if (!attrs) return std::nullopt;
      check_attr_types(*kind, *attrs);
      event.target = AttrTarget{*kind, std::move(*attrs)};
      return event;
    }
    auto name = parse_ident("event target (pattern name or kind block)");
    if (!name) return std::nullopt;
    pattern_refs_.push_back(
        {*name, target_tok.line, target_tok.col, "temporal rule"});
    event.target = PatternRef{*name};
    return event;
  }

  void check_references() {
    for (const auto& ref : pattern_refs_) {
      if (result_.model.find_pattern(ref.name) == nullptr)
        result_.errors.push_back(
            {ref.line, ref.col,
             "unknown pattern '" + ref.name + "' in " + ref.context});
    }
  }

  Lexer lexer_;
  Token cur_;
  ParseResult result_;
  std::vector<PendingRef> pattern_refs_;
  std::vector<std::pair<std::string, Token>> attr_locs_;
  std::size_t attr_mark_ = 0;
  bool defaults_seen_[3] = {false, false, false};
};

}  // namespace

ParseResult parse(std::string_view text) { return Parser(text).run(); }

}  // namespace claw

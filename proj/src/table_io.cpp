#include <sstream>

#include "claw/compile.hpp"
#include "claw/parse.hpp"

namespace claw {

namespace {

std::string compact_attr(const AttributeMatcher& attr) {
  std::ostringstream out;
  out << attr.key << ':';
  if (const auto* glob = std::get_if<GlobPattern>(&attr.matcher)) {
    out << quote_string(glob->pattern);
  } else if (const auto* exact = std::get_if<IntExact>(&attr.matcher)) {
    out << exact->value;
  } else if (const auto* range = std::get_if<IntRange>(&attr.matcher)) {
    out << range->lo << ".." << range->hi;
  } else {
    out << (std::get<BoolExact>(attr.matcher).value ? "true" : "false");
  }
  return out.str();
}

std::string compact_attrs(const std::vector<AttributeMatcher>& attrs) {
  if (attrs.empty()) return "-";
  std::string out;
  for (const auto& attr : attrs) {
    if (!out.empty()) out += ',';
    out += compact_attr(attr);
  }
  return out;
}

std::string format_target(const EventTarget& target) {
  if (const auto* ref = std::get_if<PatternRef>(&target))
    return "pattern:" + ref->name;
  const auto& structural = std::get<AttrTarget>(target);
  std::string out(to_string(structural.kind));
  out += '{';
  if (!structural.attrs.empty()) out += compact_attrs(structural.attrs);
  out += '}';
  return out;
}

std::string join(const std::vector<std::string>& parts,
                 std::string_view separator) {
  std::string out;
  for (const auto& part : parts) {
    if (!out.empty()) out += separator;
    out += part;
  }
  return out;
}

// an op set can be empty (blank mapping cell); "-" keeps the field present
std::string format_ops(const std::vector<std::string>& ops) {
  if (ops.empty()) return "-";
  return join(ops, ",");
}

// Whitespace splitter that keeps double-quoted spans (with \" and \\ escapes)
// inside one token.
std::vector<std::string> split_tokens(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_quotes = false;
  bool has = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (in_quotes && c == '\\' && i + 1 < line.size() &&
        (line[i + 1] == '"' || line[i + 1] == '\\')) {
      cur += c;
      cur += line[i + 1];
      ++i;
      continue;
    }
    if (c == '"') in_quotes = !in_quotes;
    if (!in_quotes && (c == ' ' || c == '\t')) {
      if (has) out.push_back(std::move(cur));
      cur.clear();
      has = false;
      continue;
    }
    cur += c;
    has = true;
  }
  if (has) out.push_back(std::move(cur));
  return out;
}

// Split on top-level commas (outside quotes).
std::vector<std::string> split_csv(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes && c == '\\' && i + 1 < text.size()) {
      cur += c;
      cur += text[i + 1];
      ++i;
      continue;
    }
    if (c == '"') in_quotes = !in_quotes;
    if (!in_quotes && c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
      continue;
    }
    cur += c;
  }
  out.push_back(std::move(cur));
  return out;
}

bool parse_int(std::string_view text, int64_t& out) {
  if (text.empty()) return false;
  std::size_t start = text[0] == '-' ? 1 : 0;
  if (start == text.size()) return false;
  for (std::size_t i = start; i < text.size(); ++i)
    if (text[i] < '0' || text[i] > '9') return false;
  try {
    out = std::stoll(std::string(text));
  } catch (...) {
    return false;
  }
  return true;
}

bool parse_attr_token(std::string_view token, AttributeMatcher& out,
                      std::string& error) {
  std::size_t colon = token.find(':');
  if (colon == std::string_view::npos || colon == 0) {
    error = "malformed attribute '" + std::string(token) + "'";
    return false;
  }
  out.key = std::string(token.substr(0, colon));
  std::string_view value = token.substr(colon + 1);
  if (value.empty()) {
    error = "missing value in attribute '" + std::string(token) + "'";
    return false;
  }
  if (value.front() == '"') {
    if (value.size() < 2 || value.back() != '"') {
      error = "unterminated string in attribute '" + std::string(token) + "'";
      return false;
    }
    std::string unescaped;
    for (std::size_t i = 1; i + 1 < value.size(); ++i) {
      if (value[i] == '\\' && i + 2 < value.size() &&
          (value[i + 1] == '"' || value[i + 1] == '\\')) {
        unescaped += value[i + 1];
        ++i;
        continue;
      }
      unescaped += value[i];
    }
    out.matcher = GlobPattern{std::move(unescaped)};
    return true;
  }
  if (value == "true" || value == "false") {
    out.matcher = BoolExact{value == "true"};
    return true;
  }
  std::size_t dots = value.find("..");
  if (dots != std::string_view::npos) {
    int64_t lo = 0;
    int64_t hi = 0;
    if (!parse_int(value.substr(0, dots), lo) ||
        !parse_int(value.substr(dots + 2), hi)) {
      error = "malformed range in attribute '" + std::string(token) + "'";
      return false;
    }
    out.matcher = IntRange{lo, hi};
    return true;
  }
  int64_t exact = 0;
  if (!parse_int(value, exact)) {
    error = "malformed value in attribute '" + std::string(token) + "'";
    return false;
  }
  out.matcher = IntExact{exact};
  return true;
}

bool parse_attr_csv(std::string_view text,
                    std::vector<AttributeMatcher>& out, std::string& error) {
  if (text == "-") return true;
  for (const auto& token : split_csv(text)) {
    AttributeMatcher attr;
    if (!parse_attr_token(token, attr, error)) return false;
    out.push_back(std::move(attr));
  }
  return true;
}

const std::vector<std::string>& op_label_vocabulary() {
  static const std::vector<std::string> labels = [] {
    std::vector<std::string> out;
    for (EntityKind kind : kAllKinds) {
      for (Permission perm : kAllPermissions) {
        for (auto& label : syscalls_for(kind, perm)) {
          bool seen = false;
          for (const auto& have : out) seen = seen || have == label;
          if (!seen) out.push_back(label);
        }
      }
    }
    return out;
  }();
  return labels;
}

bool known_op_label(std::string_view label) {
  for (const auto& have : op_label_vocabulary())
    if (have == label) return true;
  return false;
}

bool known_table_syscall(std::string_view name) {
  for (const auto& have : table_vocabulary())
    if (have == name) return true;
  return false;
}

}  // namespace

std::string export_tables(const CompiledPolicy& compiled) {
  std::ostringstream out;
  out << "clawtable v1\n";
  for (const auto& pattern : compiled.resolution.patterns) {
    out << "entity " << to_string(pattern.kind) << ' ' << pattern.name << ' '
        << compact_attrs(pattern.attrs) << '\n';
  }
  for (Scope scope : kAllScopes) {
    const RuleTable& table = compiled.table_for(scope);
    out << "scope " << to_string(scope) << '\n';
    for (const auto& [syscall, rules] : table.dispatch) {
      for (const Rule& rule : rules) {
        out << syscall << ' ' << rule.element << ' ' << to_string(rule.perm)
            << ' ' << (rule.allow ? "allow" : "deny") << " # "
            << join(rule.provenance, "; ") << '\n';
      }
    }
  }
  for (const auto& spec : compiled.specs) {
    out << "monitorspec " << spec.name << ' '
        << (spec.modality == TemporalModality::AlwaysForbid
                ? "always_forbid"
                : "eventually_require")
        << " trigger " << to_string(spec.trigger.scope) << ' '
        << format_target(spec.trigger.target) << ' '
        << format_ops(spec.trigger.ops) << " body "
        << to_string(spec.body.scope) << ' ' << format_target(spec.body.target)
        << ' ' << format_ops(spec.body.ops) << '\n';
  }
  return out.str();
}

namespace {

struct Importer {
  TableImportResult result;
  RuleTable* current_table = nullptr;
  bool scope_seen[3] = {false, false, false};

  void fail(std::size_t line, std::string message) {
    result.errors.push_back({line, std::move(message)});
  }

  bool parse_target(const std::string& token, std::size_t line,
                    EventTarget& out) {
    if (token.rfind("pattern:", 0) == 0) {
      std::string name = token.substr(8);
      if (result.compiled.resolution.find_pattern(name) == nullptr) {
        fail(line, "monitorspec references unknown pattern '" + name + "'");
        return false;
      }
      out = PatternRef{std::move(name)};
      return true;
    }
    std::size_t brace = token.find('{');
    if (brace == std::string::npos || token.back() != '}') {
      fail(line, "malformed monitorspec target '" + token + "'");
      return false;
    }
    auto kind = kind_from_string(token.substr(0, brace));
    if (!kind) {
      fail(line, "unknown kind in monitorspec target '" + token + "'");
      return false;
    }
    std::string csv = token.substr(brace + 1, token.size() - brace - 2);
    AttrTarget target;
    target.kind = *kind;
    std::string error;
    if (!csv.empty() && !parse_attr_csv(csv, target.attrs, error)) {
      fail(line, error);
      return false;
    }
    out = std::move(target);
    return true;
  }

  void entity_line(const std::vector<std::string>& tokens, std::size_t line) {
    if (tokens.size() != 4) {
      fail(line, "entity line needs: entity <kind> <name> <attrs>");
      return;
    }
    auto kind = kind_from_string(tokens[1]);
    if (!kind) {
      fail(line, "unknown entity kind '" + tokens[1] + "'");
      return;
    }
    if (result.compiled.resolution.find_pattern(tokens[2]) != nullptr) {
      fail(line, "duplicate entity '" + tokens[2] + "'");
      return;
    }
    EntityPattern pattern;
    pattern.name = tokens[2];
    pattern.kind = *kind;
    std::string error;
    if (!parse_attr_csv(tokens[3], pattern.attrs, error)) {
      fail(line, error);
      return;
    }
    for (const auto& attr : pattern.attrs) {
      if (!attribute_key_allowed(*kind, attr.key)) {
        fail(line, "unknown attribute key '" + attr.key + "' for kind '" +
                       std::string(to_string(*kind)) + "'");
        return;
      }
    }
    pattern.declaration_index = result.compiled.resolution.patterns.size();
    result.compiled.resolution.patterns.push_back(std::move(pattern));
  }

  void scope_line(const std::vector<std::string>& tokens, std::size_t line) {
    if (tokens.size() != 2) {
      fail(line, "scope line needs: scope <Scope>");
      return;
    }
    auto scope = scope_from_string(tokens[1]);
    if (!scope) {
      fail(line, "unknown scope '" + tokens[1] + "'");
      return;
    }
    std::size_t index = static_cast<std::size_t>(*scope);
    if (scope_seen[index]) {
      fail(line, "duplicate scope section '" + tokens[1] + "'");
      return;
    }
    scope_seen[index] = true;
    current_table = &result.compiled.tables[index];
  }

  void rule_line(const std::string& text, std::size_t line) {
    if (current_table == nullptr) {
      fail(line, "rule line outside a scope section");
      return;
    }
    std::size_t hash = text.find(" # ");
    std::string fields = hash == std::string::npos ? text : text.substr(0, hash);
    std::vector<std::string> tokens = split_tokens(fields);
    if (tokens.size() != 4) {
      fail(line, "rule line needs: <syscall> <element> <perm> <allow|deny>");
      return;
    }
    if (!known_table_syscall(tokens[0])) {
      fail(line, "unknown syscall '" + tokens[0] + "'");
      return;
    }
    Rule rule;
    rule.syscall = tokens[0];
    rule.element = tokens[1];
    if (rule.element != "default" &&
        result.compiled.resolution.find_pattern(rule.element) == nullptr) {
      fail(line, "rule references unknown element '" + rule.element + "'");
      return;
    }
    auto perm = permission_from_string(tokens[2]);
    if (!perm) {
      fail(line, "unknown permission '" + tokens[2] + "'");
      return;
    }
    rule.perm = *perm;
    if (tokens[3] == "allow") {
      rule.allow = true;
    } else if (tokens[3] == "deny") {
      rule.allow = false;
    } else {
      fail(line, "expected allow or deny, got '" + tokens[3] + "'");
      return;
    }
    if (hash != std::string::npos) {
      std::string prov = text.substr(hash + 3);
      std::size_t start = 0;
      while (start <= prov.size()) {
        std::size_t sep = prov.find("; ", start);
        if (sep == std::string::npos) {
          rule.provenance.push_back(prov.substr(start));
          break;
        }
        rule.provenance.push_back(prov.substr(start, sep - start));
        start = sep + 2;
      }
    }
    for (auto& [syscall, rules] : current_table->dispatch) {
      if (syscall == rule.syscall) {
        rules.push_back(std::move(rule));
        return;
      }
    }
  }

  void monitorspec_line(const std::vector<std::string>& tokens,
                        std::size_t line) {
    // monitorspec <name> <modality> trigger <Scope> <target> <ops>
    //                               body <Scope> <target> <ops>
    if (tokens.size() != 11 || tokens[3] != "trigger" || tokens[7] != "body") {
      fail(line, "malformed monitorspec line");
      return;
    }
    MonitorSpec spec;
    spec.name = tokens[1];
    if (tokens[2] == "always_forbid") {
      spec.modality = TemporalModality::AlwaysForbid;
    } else if (tokens[2] == "eventually_require") {
      spec.modality = TemporalModality::EventuallyRequire;
    } else {
      fail(line, "unknown modality '" + tokens[2] + "'");
      return;
    }
    auto parse_pred = [&](std::size_t base, MonitorSpec::Pred& pred) {
      auto scope = scope_from_string(tokens[base]);
      if (!scope) {
        fail(line, "unknown scope '" + tokens[base] + "'");
        return false;
      }
      pred.scope = *scope;
      if (!parse_target(tokens[base + 1], line, pred.target)) return false;
      if (tokens[base + 2] == "-") return true;
      for (const auto& op : split_csv(tokens[base + 2])) {
        if (!known_op_label(op)) {
          fail(line, "unknown syscall label '" + op + "'");
          return false;
        }
        pred.ops.push_back(op);
      }
      return true;
    };
    if (!parse_pred(4, spec.trigger)) return;
    if (!parse_pred(8, spec.body)) return;
    result.compiled.specs.push_back(std::move(spec));
  }
};

}  // namespace

TableImportResult import_tables(std::string_view text) {
  Importer importer;
  for (Scope scope : kAllScopes) {
    RuleTable& table =
        importer.result.compiled.tables[static_cast<std::size_t>(scope)];
    table.scope = scope;
    table.version = 1;
    for (const auto& name : table_vocabulary()) table.dispatch.push_back({name, {}});
  }

  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    std::string_view line = end == std::string_view::npos
                                ? text.substr(pos)
                                : text.substr(pos, end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.remove_suffix(1);
    while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
    if (line.empty()) continue;
    if (line[0] == '#') continue;  // full-line comment
    if (!header_seen) {
      if (line != "clawtable v1") {
        importer.fail(line_no, "expected header 'clawtable v1'");
        return std::move(importer.result);
      }
      header_seen = true;
      continue;
    }
    std::string owned(line);
    std::vector<std::string> tokens = split_tokens(owned);
    if (tokens.empty()) continue;
    if (tokens[0] == "entity") {
      importer.entity_line(tokens, line_no);
    } else if (tokens[0] == "scope") {
      importer.scope_line(tokens, line_no);
    } else if (tokens[0] == "monitorspec") {
      importer.monitorspec_line(tokens, line_no);
    } else {
      importer.rule_line(owned, line_no);
    }
  }
  if (!header_seen) importer.fail(1, "empty table file");
  return std::move(importer.result);
}

}  // namespace claw

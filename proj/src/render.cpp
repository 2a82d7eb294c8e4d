#include <sstream>

#include "claw/parse.hpp"

namespace claw {

std::string quote_string(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_attr(const AttributeMatcher& attr) {
  std::ostringstream out;
  out << attr.key << ": ";
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

std::string format_attr_list(const std::vector<AttributeMatcher>& attrs,
                             std::string_view separator) {
  std::string out;
  for (const auto& attr : attrs) {
    if (!out.empty()) out += separator;
    out += format_attr(attr);
  }
  return out;
}

std::string format_perm_braces(PermSet perms) {
  std::string out = "{ ";
  bool first = true;
  for (Permission p : kAllPermissions) {
    if (!perms.contains(p)) continue;
    if (!first) out += ", ";
    out += to_string(p);
    first = false;
  }
  out += first ? "}" : " }";
  return out;
}

namespace {

std::string format_attr_braces(const std::vector<AttributeMatcher>& attrs) {
  if (attrs.empty()) return "{ }";
  return "{ " + format_attr_list(attrs, ", ") + " }";
}

std::string format_target(const EventTarget& target) {
  if (const auto* ref = std::get_if<PatternRef>(&target)) return ref->name;
  const auto& structural = std::get<AttrTarget>(target);
  std::string out(to_string(structural.kind));
  out += ' ';
  out += format_attr_braces(structural.attrs);
  return out;
}

std::string format_event(const EventMatcher& event) {
  std::string out(to_string(event.scope));
  out += ' ';
  out += to_string(event.action);
  out += ' ';
  out += format_target(event.target);
  return out;
}

}  // namespace

std::string render(const SecurityModel& model) {
  std::ostringstream out;
  for (const auto& pattern : model.patterns) {
    out << "entity " << to_string(pattern.kind) << ' ' << pattern.name << ' '
        << format_attr_braces(pattern.attrs) << '\n';
  }
  for (const auto& grant : model.grants) {
    out << "grant " << to_string(grant.scope) << " on " << grant.pattern << ' '
        << format_perm_braces(grant.perms) << '\n';
  }
  for (Scope scope : kAllScopes) {
    PermSet perms = model.defaults_for(scope);
    if (perms.empty()) continue;
    out << "default " << to_string(scope) << ' ' << format_perm_braces(perms)
        << '\n';
  }
  for (const auto& policy : model.policies) {
    out << "policy " << policy.name << ' ';
    if (const auto* builtin = std::get_if<BuiltinPolicy>(&policy.body)) {
      out << "builtin " << to_string(*builtin) << '\n';
      continue;
    }
    if (const auto* formula = std::get_if<StaticFormula>(&policy.body)) {
      out << "static { forall " << formula->var << " : ";
      bool first = true;
      if (formula->kind_guard) {
        out << "kind: " << to_string(*formula->kind_guard);
        first = false;
      }
      for (const auto& atom : formula->guard) {
        if (!first) out << ", ";
        out << format_attr(atom);
        first = false;
      }
      out << " => perms(" << formula->var << ", "
          << to_string(formula->constraint.scope) << ") "
          << to_string(formula->constraint.relation) << ' '
          << format_perm_braces(formula->constraint.perms) << " }\n";
      continue;
    }
    const auto& rule = std::get<TemporalRule>(policy.body);
    out << "temporal { when " << format_event(rule.trigger) << ' '
        << (rule.modality == TemporalModality::AlwaysForbid
                ? "always forbid"
                : "eventually require")
        << ' ' << format_event(rule.body) << " }\n";
  }
  return out.str();
}

}  // namespace claw

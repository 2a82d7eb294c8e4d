#include "claw/model.hpp"

#include <bit>

namespace claw {

std::string_view to_string(Scope scope) {
  switch (scope) {
    case Scope::Sandbox: return "Sandbox";
    case Scope::Agent: return "Agent";
    case Scope::Monitor: return "Monitor";
  }
  return "?";
}

std::optional<Scope> scope_from_string(std::string_view text) {
  if (text == "Sandbox") return Scope::Sandbox;
  if (text == "Agent") return Scope::Agent;
  if (text == "Monitor") return Scope::Monitor;
  return std::nullopt;
}

std::string_view to_string(Permission perm) {
  switch (perm) {
    case Permission::Read: return "Read";
    case Permission::Write: return "Write";
    case Permission::Append: return "Append";
    case Permission::NoExecute: return "NoExec";
    case Permission::Visible: return "Visible";
  }
  return "?";
}

std::optional<Permission> permission_from_string(std::string_view text) {
  if (text == "Read") return Permission::Read;
  if (text == "Write") return Permission::Write;
  if (text == "Append") return Permission::Append;
  if (text == "NoExec") return Permission::NoExecute;
  if (text == "Visible") return Permission::Visible;
  return std::nullopt;
}

std::size_t PermSet::size() const {
  std::size_t n = 0;
  for (Permission p : kAllPermissions)
    if (contains(p)) ++n;
  return n;
}

std::string PermSet::to_string() const {
  if (empty()) return "-";
  std::string out;
  for (Permission p : kAllPermissions) {
    if (!contains(p)) continue;
    if (!out.empty()) out += ',';
    out += claw::to_string(p);
  }
  return out;
}

std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::File: return "file";
    case EntityKind::Directory: return "dir";
    case EntityKind::Process: return "proc";
    case EntityKind::Socket: return "socket";
    case EntityKind::Device: return "dev";
  }
  return "?";
}

std::optional<EntityKind> kind_from_string(std::string_view text) {
  if (text == "file") return EntityKind::File;
  if (text == "dir") return EntityKind::Directory;
  if (text == "proc") return EntityKind::Process;
  if (text == "socket") return EntityKind::Socket;
  if (text == "dev") return EntityKind::Device;
  return std::nullopt;
}

// Linear-time iterative matcher with single-point backtracking; `*` is the
// only wildcard and crosses path separators.
bool glob_match(std::string_view pattern, std::string_view value) {
  std::size_t p = 0;
  std::size_t v = 0;
  std::size_t star_p = 0;
  std::size_t star_v = std::string_view::npos;  // npos: no `*` seen yet
  while (p < pattern.size() || v < value.size()) {
    if (p < pattern.size()) {
      char c = pattern[p];
      if (c == '*') {
        star_p = p;
        star_v = v + 1;
        ++p;
        continue;
      }
      if (v < value.size() && c == value[v]) {
        ++p;
        ++v;
        continue;
      }
    }
    // backtrack: let the last `*` consume one more character
    if (star_v == std::string_view::npos || star_v > value.size())
      return false;
    p = star_p;
    v = star_v;
  }
  return true;
}

bool AttributeMatcher::accepts(const AttributeValue& value) const {
  if (const auto* glob = std::get_if<GlobPattern>(&matcher)) {
    const auto* text = std::get_if<std::string>(&value);
    return text != nullptr && glob_match(glob->pattern, *text);
  }
  if (const auto* exact = std::get_if<IntExact>(&matcher)) {
    const auto* number = std::get_if<int64_t>(&value);
    return number != nullptr && *number == exact->value;
  }
  if (const auto* range = std::get_if<IntRange>(&matcher)) {
    const auto* number = std::get_if<int64_t>(&value);
    return number != nullptr && *number >= range->lo && *number <= range->hi;
  }
  const auto& flag = std::get<BoolExact>(matcher);
  const auto* truth = std::get_if<bool>(&value);
  return truth != nullptr && *truth == flag.value;
}

const AttributeMatcher* EntityPattern::find_attr(std::string_view key) const {
  for (const auto& attr : attrs)
    if (attr.key == key) return &attr;
  return nullptr;
}

bool EntityPattern::flag(std::string_view key) const {
  const AttributeMatcher* attr = find_attr(key);
  if (attr == nullptr) return false;
  const auto* flag = std::get_if<BoolExact>(&attr->matcher);
  return flag != nullptr && flag->value;
}

std::string_view to_string(BuiltinPolicy builtin) {
  switch (builtin) {
    case BuiltinPolicy::ScopeHierarchy: return "scope_hierarchy";
    case BuiltinPolicy::NoExecAgent: return "no_exec_agent";
    case BuiltinPolicy::CredentialVisibility: return "credential_visibility";
  }
  return "?";
}

std::optional<BuiltinPolicy> builtin_from_string(std::string_view text) {
  if (text == "scope_hierarchy") return BuiltinPolicy::ScopeHierarchy;
  if (text == "no_exec_agent") return BuiltinPolicy::NoExecAgent;
  if (text == "credential_visibility")
    return BuiltinPolicy::CredentialVisibility;
  return std::nullopt;
}

std::string_view to_string(Relation rel) {
  switch (rel) {
    case Relation::Equals: return "==";
    case Relation::SubsetOf: return "<=";
    case Relation::Contains: return "contains";
    case Relation::Excludes: return "excludes";
  }
  return "?";
}

std::string_view to_string(EventAction action) {
  switch (action) {
    case EventAction::Reads: return "Reads";
    case EventAction::Writes: return "Writes";
    case EventAction::Appends: return "Appends";
    case EventAction::Execs: return "Execs";
    case EventAction::Stats: return "Stats";
  }
  return "?";
}

std::optional<EventAction> action_from_string(std::string_view text) {
  if (text == "Reads") return EventAction::Reads;
  if (text == "Writes") return EventAction::Writes;
  if (text == "Appends") return EventAction::Appends;
  if (text == "Execs") return EventAction::Execs;
  if (text == "Stats") return EventAction::Stats;
  return std::nullopt;
}

Permission action_permission(EventAction action) {
  switch (action) {
    case EventAction::Reads: return Permission::Read;
    case EventAction::Writes: return Permission::Write;
    case EventAction::Appends: return Permission::Append;
    case EventAction::Execs: return Permission::NoExecute;
    case EventAction::Stats: return Permission::Visible;
  }
  return Permission::Read;
}

const EntityPattern* SecurityModel::find_pattern(std::string_view name) const {
  for (const auto& pattern : patterns)
    if (pattern.name == name) return &pattern;
  return nullptr;
}

PermSet SecurityModel::pattern_perms(const EntityPattern& pattern,
                                     Scope scope) const {
  return pattern_perms(pattern.name, scope);
}

PermSet SecurityModel::pattern_perms(std::string_view pattern_name,
                                     Scope scope) const {
  PermSet out;
  for (const auto& grant : grants)
    if (grant.scope == scope && grant.pattern == pattern_name)
      out |= grant.perms;
  return out;
}

namespace {

const AttributeValue* find_concrete(const ConcreteAttrs& attrs,
                                    std::string_view key) {
  for (const auto& [name, value] : attrs)
    if (name == key) return &value;
  return nullptr;
}

bool pattern_accepts(const EntityPattern& pattern, const ConcreteAttrs& attrs) {
  for (const auto& matcher : pattern.attrs) {
    const AttributeValue* value = find_concrete(attrs, matcher.key);
    if (value == nullptr) continue;  // unsupplied attrs do not disqualify
    if (!matcher.accepts(*value)) return false;
  }
  return true;
}

}  // namespace

const EntityPattern* resolve(EntityKind kind, const ConcreteAttrs& attrs,
                             const SecurityModel& model) {
  for (const auto& pattern : model.patterns) {
    if (pattern.kind != kind) continue;
    if (pattern_accepts(pattern, attrs)) return &pattern;
  }
  return nullptr;
}

PermSet perms_of(EntityKind kind, const ConcreteAttrs& attrs, Scope scope,
                 const SecurityModel& model) {
  const EntityPattern* pattern = resolve(kind, attrs, model);
  if (pattern == nullptr) return model.defaults_for(scope);
  return model.pattern_perms(*pattern, scope);
}

bool attribute_key_allowed(EntityKind kind, std::string_view key) {
  if (key == "credential" || key == "sensitive") return true;
  switch (kind) {
    case EntityKind::File:
    case EntityKind::Directory:
    case EntityKind::Device:
      return key == "path";
    case EntityKind::Socket:
      return key == "addr";
    case EntityKind::Process:
      return key == "pid" || key == "scope";
  }
  return false;
}

}  // namespace claw

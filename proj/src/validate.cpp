#include "claw/validate.hpp"

#include <sstream>
#include <stdexcept>

namespace claw {

std::string Violation::to_string() const {
  std::ostringstream out;
  out << policy << ": " << subject;
  if (scope_a && scope_b) {
    out << " [" << claw::to_string(*scope_a) << " -> "
        << claw::to_string(*scope_b) << "]";
  } else if (scope_a) {
    out << " [" << claw::to_string(*scope_a) << "]";
  }
  out << ": " << detail;
  return out.str();
}

std::string LeakFinding::to_string() const {
  std::ostringstream out;
  out << source << " -> " << sink << (guarded ? " (guarded)" : " (UNGUARDED)");
  return out.str();
}

namespace {

std::string default_name(std::string_view policy_name, BuiltinPolicy builtin) {
  if (!policy_name.empty()) return std::string(policy_name);
  return std::string(to_string(builtin));
}

void hierarchy_pair(const std::string& policy, const std::string& subject,
                    Scope lower, Scope upper, PermSet lower_perms,
                    PermSet upper_perms, std::vector<Violation>& out) {
  if (lower_perms.subset_of(upper_perms)) return;
  Violation v;
  v.policy = policy;
  v.subject = subject;
  v.scope_a = lower;
  v.scope_b = upper;
  v.witness_a = lower_perms;
  v.witness_b = upper_perms;
  std::ostringstream detail;
  detail << "{" << lower_perms.to_string() << "} exceeds {"
         << upper_perms.to_string() << "}";
  v.detail = detail.str();
  out.push_back(std::move(v));
}

// The pattern's literal prefix up to its first `*`, i.e. the part every
// denoted value starts with.
std::string_view literal_prefix(std::string_view glob) {
  std::size_t star = glob.find('*');
  return star == std::string_view::npos ? glob : glob.substr(0, star);
}

bool matchers_overlap(const MatcherValue& guard, const MatcherValue& pattern) {
  if (const auto* g = std::get_if<GlobPattern>(&guard)) {
    const auto* p = std::get_if<GlobPattern>(&pattern);
    return p != nullptr && glob_match(g->pattern, literal_prefix(p->pattern));
  }
  if (const auto* g = std::get_if<IntExact>(&guard)) {
    if (const auto* p = std::get_if<IntExact>(&pattern))
      return p->value == g->value;
    if (const auto* p = std::get_if<IntRange>(&pattern))
      return g->value >= p->lo && g->value <= p->hi;
    return false;
  }
  if (const auto* g = std::get_if<IntRange>(&guard)) {
    if (const auto* p = std::get_if<IntExact>(&pattern))
      return p->value >= g->lo && p->value <= g->hi;
    if (const auto* p = std::get_if<IntRange>(&pattern))
      return g->lo <= p->hi && p->lo <= g->hi;
    return false;
  }
  const auto& g = std::get<BoolExact>(guard);
  const auto* p = std::get_if<BoolExact>(&pattern);
  return p != nullptr && p->value == g.value;
}

bool constraint_holds(const PermConstraint& constraint, PermSet perms) {
  switch (constraint.relation) {
    case Relation::Equals: return perms == constraint.perms;
    case Relation::SubsetOf: return perms.subset_of(constraint.perms);
    case Relation::Contains: return constraint.perms.subset_of(perms);
    case Relation::Excludes: return (perms & constraint.perms).empty();
  }
  return false;
}

}  // namespace

bool guard_admits(const std::optional<EntityKind>& kind_guard,
                  const std::vector<AttributeMatcher>& guard,
                  const EntityPattern& pattern) {
  if (kind_guard && pattern.kind != *kind_guard) return false;
  for (const auto& atom : guard) {
    // a kind that cannot carry the attribute cannot denote any value for it
    if (!attribute_key_allowed(pattern.kind, atom.key)) return false;
    const AttributeMatcher* own = pattern.find_attr(atom.key);
    if (own == nullptr) continue;  // unconstrained key: pattern may denote it
    if (!matchers_overlap(atom.matcher, own->matcher)) return false;
  }
  return true;
}

std::vector<Violation> check_scope_hierarchy(const SecurityModel& model,
                                             std::string_view policy_name) {
  std::string policy = default_name(policy_name, BuiltinPolicy::ScopeHierarchy);
  std::vector<Violation> out;
  for (const auto& pattern : model.patterns) {
    PermSet sandbox = model.pattern_perms(pattern, Scope::Sandbox);
    PermSet agent = model.pattern_perms(pattern, Scope::Agent);
    PermSet monitor = model.pattern_perms(pattern, Scope::Monitor);
    hierarchy_pair(policy, pattern.name, Scope::Sandbox, Scope::Agent, sandbox,
                   agent, out);
    hierarchy_pair(policy, pattern.name, Scope::Agent, Scope::Monitor, agent,
                   monitor, out);
  }
  hierarchy_pair(policy, "defaults", Scope::Sandbox, Scope::Agent,
                 model.defaults_for(Scope::Sandbox),
                 model.defaults_for(Scope::Agent), out);
  hierarchy_pair(policy, "defaults", Scope::Agent, Scope::Monitor,
                 model.defaults_for(Scope::Agent),
                 model.defaults_for(Scope::Monitor), out);
  return out;
}

std::vector<Violation> check_builtin(const SecurityModel& model,
                                     BuiltinPolicy builtin,
                                     std::string_view policy_name) {
  std::string policy = default_name(policy_name, builtin);
  if (builtin == BuiltinPolicy::ScopeHierarchy)
    return check_scope_hierarchy(model, policy);

  std::vector<Violation> out;
  if (builtin == BuiltinPolicy::NoExecAgent) {
    auto check = [&](const std::string& subject, PermSet perms) {
      if (perms.contains(Permission::NoExecute)) return;
      Violation v;
      v.policy = policy;
      v.subject = subject;
      v.scope_a = Scope::Agent;
      v.witness_a = perms;
      v.detail = "Agent lacks NoExec (exec/fork possible): {" +
                 perms.to_string() + "}";
      out.push_back(std::move(v));
    };
    for (const auto& pattern : model.patterns)
      check(pattern.name, model.pattern_perms(pattern, Scope::Agent));
    check("defaults", model.defaults_for(Scope::Agent));
    return out;
  }

  // credential_visibility: P(e, Agent) must be exactly {Visible}
  for (const auto& pattern : model.patterns) {
    if (!pattern.flag("credential")) continue;
    PermSet agent = model.pattern_perms(pattern, Scope::Agent);
    if (agent == PermSet{Permission::Visible}) continue;
    Violation v;
    v.policy = policy;
    v.subject = pattern.name;
    v.scope_a = Scope::Agent;
    v.witness_a = agent;
    v.detail =
        "credential must be exactly {Visible} to Agent, got {" +
        agent.to_string() + "}";
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<Violation> check_static(const SecurityModel& model,
                                    const StaticFormula& formula,
                                    std::string_view policy_name) {
  for (const auto& atom : formula.guard) {
    bool known = formula.kind_guard
                     ? attribute_key_allowed(*formula.kind_guard, atom.key)
                     : (atom.key == "path" || atom.key == "addr" ||
                        atom.key == "pid" || atom.key == "scope" ||
                        atom.key == "credential" || atom.key == "sensitive");
    if (!known)
      throw std::invalid_argument("guard references unknown attribute key '" +
                                  atom.key + "'");
  }
  std::string policy =
      policy_name.empty() ? "static" : std::string(policy_name);
  std::vector<Violation> out;
  auto check = [&](const std::string& subject, PermSet perms) {
    if (constraint_holds(formula.constraint, perms)) return;
    Violation v;
    v.policy = policy;
    v.subject = subject;
    v.scope_a = formula.constraint.scope;
    v.witness_a = perms;
    v.witness_b = formula.constraint.perms;
    v.detail = "perms {" + perms.to_string() + "} violate " +
               std::string(to_string(formula.constraint.relation)) + " {" +
               formula.constraint.perms.to_string() + "}";
    out.push_back(std::move(v));
  };
  for (const auto& pattern : model.patterns) {
    if (!guard_admits(formula.kind_guard, formula.guard, pattern)) continue;
    check(pattern.name,
          model.pattern_perms(pattern, formula.constraint.scope));
  }
  // the synthetic "any unmatched entity" element is admitted by every guard
  check("defaults", model.defaults_for(formula.constraint.scope));
  return out;
}

namespace {

bool target_covers(const EventTarget& target, const EntityPattern& pattern) {
  if (const auto* ref = std::get_if<PatternRef>(&target))
    return ref->name == pattern.name;
  const auto& structural = std::get<AttrTarget>(target);
  return guard_admits(structural.kind, structural.attrs, pattern);
}

bool event_covers(const EventMatcher& event, Scope scope, EventAction action,
                  const EntityPattern& pattern) {
  return event.scope == scope && event.action == action &&
         target_covers(event.target, pattern);
}

}  // namespace

std::vector<LeakFinding> analyze_leaks(const SecurityModel& model) {
  std::vector<const EntityPattern*> sources;
  std::vector<const EntityPattern*> sinks;
  for (const auto& pattern : model.patterns) {
    bool file_like = pattern.kind == EntityKind::File ||
                     pattern.kind == EntityKind::Directory;
    if (file_like && (pattern.flag("sensitive") || pattern.flag("credential")) &&
        model.pattern_perms(pattern, Scope::Agent).contains(Permission::Read))
      sources.push_back(&pattern);
    if (pattern.kind == EntityKind::Socket &&
        model.pattern_perms(pattern, Scope::Agent).contains(Permission::Write))
      sinks.push_back(&pattern);
  }
  std::vector<LeakFinding> out;
  for (const auto* source : sources) {
    for (const auto* sink : sinks) {
      bool guarded = false;
      for (const auto& policy : model.policies) {
        const auto* rule = std::get_if<TemporalRule>(&policy.body);
        if (rule == nullptr) continue;
        if (rule->modality != TemporalModality::AlwaysForbid) continue;
        if (event_covers(rule->trigger, Scope::Agent, EventAction::Reads,
                         *source) &&
            event_covers(rule->body, Scope::Agent, EventAction::Writes,
                         *sink)) {
          guarded = true;
          break;
        }
      }
      out.push_back({source->name, sink->name, guarded});
    }
  }
  return out;
}

bool ValidationReport::clean() const {
  return violations.empty() && unguarded_leaks() == 0;
}

std::size_t ValidationReport::unguarded_leaks() const {
  std::size_t n = 0;
  for (const auto& leak : leaks)
    if (!leak.guarded) ++n;
  return n;
}

ValidationReport validate(const SecurityModel& model) {
  ValidationReport report;
  for (const auto& policy : model.policies) {
    std::vector<Violation> found;
    if (const auto* builtin = std::get_if<BuiltinPolicy>(&policy.body))
      found = check_builtin(model, *builtin, policy.name);
    else if (const auto* formula = std::get_if<StaticFormula>(&policy.body))
      found = check_static(model, *formula, policy.name);
    for (auto& v : found) report.violations.push_back(std::move(v));
  }
  report.leaks = analyze_leaks(model);
  return report;
}

}  // namespace claw

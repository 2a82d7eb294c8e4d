#include <sstream>

#include "claw/validate.hpp"

namespace claw {

namespace {

// Entities are the declared patterns plus the synthetic defaults element;
// everything is ground, so QF_UF suffices.
struct Element {
  std::string smt_name;
  const EntityPattern* pattern;  // nullptr for the defaults element
};

std::string perm_const(Permission p) {
  return "perm_" + std::string(to_string(p));
}

std::string scope_const(Scope s) { return "scope_" + std::string(to_string(s)); }

std::string has_perm(const Element& e, Scope s, Permission p) {
  return "(has_perm " + e.smt_name + " " + scope_const(s) + " " +
         perm_const(p) + ")";
}

PermSet element_perms(const SecurityModel& model, const Element& e, Scope s) {
  if (e.pattern == nullptr) return model.defaults_for(s);
  return model.pattern_perms(*e.pattern, s);
}

void emit_conj(std::ostringstream& out, const std::vector<std::string>& parts) {
  if (parts.empty()) {
    out << "true";
    return;
  }
  if (parts.size() == 1) {
    out << parts[0];
    return;
  }
  out << "(and";
  for (const auto& part : parts) out << "\n    " << part;
  out << ")";
}

std::vector<std::string> hierarchy_props(const std::vector<Element>& elements) {
  std::vector<std::string> props;
  for (const auto& e : elements) {
    for (Permission p : kAllPermissions) {
      props.push_back("(=> " + has_perm(e, Scope::Sandbox, p) + " " +
                      has_perm(e, Scope::Agent, p) + ")");
      props.push_back("(=> " + has_perm(e, Scope::Agent, p) + " " +
                      has_perm(e, Scope::Monitor, p) + ")");
    }
  }
  return props;
}

std::vector<std::string> no_exec_props(const std::vector<Element>& elements) {
  std::vector<std::string> props;
  for (const auto& e : elements)
    props.push_back(has_perm(e, Scope::Agent, Permission::NoExecute));
  return props;
}

std::vector<std::string> credential_props(const std::vector<Element>& elements) {
  std::vector<std::string> props;
  for (const auto& e : elements) {
    if (e.pattern == nullptr || !e.pattern->flag("credential")) continue;
    for (Permission p : kAllPermissions) {
      std::string atom = has_perm(e, Scope::Agent, p);
      props.push_back(p == Permission::Visible ? atom : "(not " + atom + ")");
    }
  }
  return props;
}

std::vector<std::string> static_props(const StaticFormula& formula,
                                      const std::vector<Element>& elements) {
  std::vector<std::string> props;
  for (const auto& e : elements) {
    if (e.pattern != nullptr &&
        !guard_admits(formula.kind_guard, formula.guard, *e.pattern))
      continue;
    Scope s = formula.constraint.scope;
    PermSet wanted = formula.constraint.perms;
    switch (formula.constraint.relation) {
      case Relation::Equals:
        for (Permission p : kAllPermissions) {
          std::string atom = has_perm(e, s, p);
          props.push_back(wanted.contains(p) ? atom : "(not " + atom + ")");
        }
        break;
      case Relation::SubsetOf:
        for (Permission p : kAllPermissions)
          if (!wanted.contains(p))
            props.push_back("(not " + has_perm(e, s, p) + ")");
        break;
      case Relation::Contains:
        for (Permission p : kAllPermissions)
          if (wanted.contains(p)) props.push_back(has_perm(e, s, p));
        break;
      case Relation::Excludes:
        for (Permission p : kAllPermissions)
          if (wanted.contains(p))
            props.push_back("(not " + has_perm(e, s, p) + ")");
        break;
    }
  }
  return props;
}

}  // namespace

std::string emit_smtlib(const SecurityModel& model) {
  std::vector<Element> elements;
  for (const auto& pattern : model.patterns)
    elements.push_back({"ent_" + pattern.name, &pattern});
  elements.push_back({"ent_defaults", nullptr});

  std::ostringstream out;
  out << "; generated security-model check; unsat = all policies hold\n";
  out << "(set-logic QF_UF)\n";
  out << "(declare-sort Entity 0)\n";
  out << "(declare-sort Scope 0)\n";
  out << "(declare-sort Perm 0)\n";
  for (const auto& e : elements)
    out << "(declare-const " << e.smt_name << " Entity)\n";
  for (Scope s : kAllScopes)
    out << "(declare-const " << scope_const(s) << " Scope)\n";
  for (Permission p : kAllPermissions)
    out << "(declare-const " << perm_const(p) << " Perm)\n";
  if (elements.size() > 1) {
    out << "(assert (distinct";
    for (const auto& e : elements) out << ' ' << e.smt_name;
    out << "))\n";
  }
  out << "(assert (distinct";
  for (Scope s : kAllScopes) out << ' ' << scope_const(s);
  out << "))\n";
  out << "(assert (distinct";
  for (Permission p : kAllPermissions) out << ' ' << perm_const(p);
  out << "))\n";
  out << "(declare-fun has_perm (Entity Scope Perm) Bool)\n";

  out << "; permission facts from grants and defaults\n";
  for (const auto& e : elements) {
    for (Scope s : kAllScopes) {
      PermSet perms = element_perms(model, e, s);
      for (Permission p : kAllPermissions) {
        std::string atom = has_perm(e, s, p);
        out << "(assert " << (perms.contains(p) ? atom : "(not " + atom + ")")
            << ")\n";
      }
    }
  }

  std::vector<std::string> policy_funs;
  for (const auto& policy : model.policies) {
    std::vector<std::string> props;
    std::string kind;
    if (const auto* builtin = std::get_if<BuiltinPolicy>(&policy.body)) {
      kind = to_string(*builtin);
      switch (*builtin) {
        case BuiltinPolicy::ScopeHierarchy:
          props = hierarchy_props(elements);
          break;
        case BuiltinPolicy::NoExecAgent:
          props = no_exec_props(elements);
          break;
        case BuiltinPolicy::CredentialVisibility:
          props = credential_props(elements);
          break;
      }
    } else if (const auto* formula = std::get_if<StaticFormula>(&policy.body)) {
      kind = "static";
      props = static_props(*formula, elements);
    } else {
      out << "; policy " << policy.name << ": temporal (monitor-enforced, "
          << "not encoded)\n";
      continue;
    }
    std::string fun = "policy_" + policy.name;
    out << "; policy " << policy.name << " (" << kind << ")\n";
    out << "(define-fun " << fun << " () Bool\n  ";
    emit_conj(out, props);
    out << ")\n";
    policy_funs.push_back(fun);
  }

  out << "; negated conjunction of all policies\n";
  if (policy_funs.empty()) {
    out << "(assert false)\n";
  } else {
    out << "(assert (not ";
    if (policy_funs.size() == 1) {
      out << policy_funs[0];
    } else {
      out << "(and";
      for (const auto& fun : policy_funs) out << ' ' << fun;
      out << ')';
    }
    out << "))\n";
  }
  out << "(check-sat)\n";
  return out.str();
}

}  // namespace claw

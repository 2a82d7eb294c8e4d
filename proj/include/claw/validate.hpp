#pragma once

#include <optional>
#include <string>
#include <vector>

#include "claw/model.hpp"

namespace claw {

struct Violation {
  std::string policy;   // policy name (or builtin id for direct checks)
  std::string subject;  // pattern name or "defaults"
  std::optional<Scope> scope_a;
  std::optional<Scope> scope_b;  // set for hierarchy (pairwise) violations
  std::string detail;
  PermSet witness_a;
  PermSet witness_b;

  std::string to_string() const;
};

struct LeakFinding {
  std::string source;  // sensitive/credential file-like pattern Agent can read
  std::string sink;    // socket pattern Agent can write
  bool guarded = false;  // an AlwaysForbid temporal rule covers the pair

  std::string to_string() const;
};

// P(e,Sandbox) ⊆ P(e,Agent) ⊆ P(e,Monitor) for every pattern and for the
// defaults element; one violation per failed subset relation.
std::vector<Violation> check_scope_hierarchy(const SecurityModel& model,
                                             std::string_view policy_name = "");

// no_exec_agent: every pattern/defaults must hold NoExec in Agent scope.
// credential_visibility: credential patterns must have exactly {Visible}
// in Agent scope.
std::vector<Violation> check_builtin(const SecurityModel& model,
                                     BuiltinPolicy builtin,
                                     std::string_view policy_name = "");

// Evaluates the formula over declared patterns plus the defaults element.
// Guard admission uses a conservative glob-prefix overlap test. Throws
// std::invalid_argument when the guard references an unknown attribute key.
std::vector<Violation> check_static(const SecurityModel& model,
                                    const StaticFormula& formula,
                                    std::string_view policy_name = "");

// Read-then-socket-write pairs: sources are credential/sensitive file-like
// patterns readable by Agent, sinks are sockets writable by Agent.
std::vector<LeakFinding> analyze_leaks(const SecurityModel& model);

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<LeakFinding> leaks;

  bool clean() const;  // no violations and no unguarded leaks
  std::size_t unguarded_leaks() const;
};

// Runs every declared policy (builtins and static formulas) plus leak
// analysis. Temporal policies are monitor material, not static checks.
ValidationReport validate(const SecurityModel& model);

// SMT-LIB2 script over finite enumerations: has_perm pinned by grants and
// defaults, declared policies asserted negated. check-sat is unsat exactly
// when validate() reports zero violations for those policies.
std::string emit_smtlib(const SecurityModel& model);

// True when the guard (kind constraint plus attribute matchers) admits the
// pattern: every guard matcher overlaps the pattern's matcher for that key
// (patterns unconstrained on a key are admitted). Exposed for reuse by the
// compiler and monitor spec matching.
bool guard_admits(const std::optional<EntityKind>& kind_guard,
                  const std::vector<AttributeMatcher>& guard,
                  const EntityPattern& pattern);

}  // namespace claw
